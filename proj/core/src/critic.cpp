#include "mfac/critic.hpp"

#include <cmath>
#include <string>

#include "mfac/parallel.hpp"
#include "mfac/riccati.hpp"

namespace mfac {

namespace {

// Per-sample contraction of the population part of the generator against the
// feature family: pop_f = sum_p w_p (b_p . grad u_f(x_p) + 1/2 Sigma_p : D^2
// u_f(x_p)). The Lions term of any basis function is then dm . pop.
Vec population_contraction(const FeatureFamily& fam, const GaussianFeedbackPolicy& policy,
                           const ModelSpec& model, const EmpiricalMeasure& mu,
                           RngStream* mc) {
    const int nf = fam.size();
    const int d = mu.dim();
    Vec pop = Vec::Zero(nf);
    Vec g(d);
    Mat h(d, d);
    for (int p = 0; p < mu.size(); ++p) {
        const Vec xi = mu.particles.row(p).transpose();
        const AveragedCoefficients pc = averaged_coefficients(policy, model, xi, mu, 64, mc);
        for (int f = 0; f < nf; ++f) {
            fam.features[f].gradient(xi, g);
            fam.features[f].hessian(xi, h);
            pop(f) += mu.weights(p) * (pc.b.dot(g) + 0.5 * (pc.Sigma * h).trace());
        }
    }
    return pop;
}

// eval_with_derivatives with the moment map hoisted out; the map is shared by
// every basis function at a given sample.
CylindricalEval eval_at_moments(const CylindricalFunction& f, const Vec& s, const Vec& m) {
    CylindricalEval e;
    e.value = f.psi(s, m);
    f.grad_s(s, m, e.grad_s);
    f.hess_ss(s, m, e.hess_ss);
    f.dpsi_dm(s, m, e.dm);
    e.features = f.features;
    return e;
}

}  // namespace

GalerkinSystem assemble_galerkin(const CylindricalBasis& basis,
                                 const GaussianFeedbackPolicy& policy,
                                 const ModelSpec& model, const OccupancySampleSet& samples,
                                 double lambda, double beta, double ridge,
                                 const RngTree* rng) {
    const int n = basis.size();
    const int nd = samples.size();
    if (n == 0) throw ParameterError("assemble_galerkin: empty basis");
    if (nd == 0) throw ParameterError("assemble_galerkin: no samples");

    // Row-parallel construction, single GEMM at the end; the result does not
    // depend on the worker count.
    Mat phi(nd, n), res(nd, n);  // res_eta = beta phi - L phi
    Vec reward(nd);
    parallel_for(nd, [&](int eta) {
        const Vec& s = samples.states[eta];
        const EmpiricalMeasure& mu = samples.measures[eta];
        RngStream mc_storage(0);
        RngStream* mc = nullptr;
        if (!model.affine_in_action) {
            if (rng == nullptr)
                throw ParameterError("assemble_galerkin: rng required for MC path");
            mc_storage = rng->stream(static_cast<std::uint64_t>(eta));
            mc = &mc_storage;
        }
        const AveragedCoefficients rep = averaged_coefficients(policy, model, s, mu, 64, mc);
        const Vec pop = population_contraction(*basis.features, policy, model, mu, mc);
        reward(eta) = regularized_reward(model, policy, s, mu, lambda, 64, mc);
        const Vec m = moment_map(mu, *basis.features);

        for (int i = 0; i < n; ++i) {
            const CylindricalEval e = eval_at_moments(basis.fns[i], s, m);
            phi(eta, i) = e.value;
            res(eta, i) = beta * e.value -
                          (rep.b.dot(e.grad_s) + 0.5 * (rep.Sigma * e.hess_ss).trace() +
                           e.dm.dot(pop));
        }
    });

    GalerkinSystem sys;
    const Mat phi_w = samples.weights.asDiagonal() * phi;
    sys.A = phi_w.transpose() * res;
    sys.b = phi_w.transpose() * reward;
    sys.sample_count = nd;
    sys.ridge = ridge;
    return sys;
}

CriticSolution solve_galerkin(const GalerkinSystem& system) {
    const int n = static_cast<int>(system.A.rows());
    const Mat reg = system.A + system.ridge * Mat::Identity(n, n);
    Eigen::PartialPivLU<Mat> lu(reg);
    CriticSolution sol;
    sol.cond_estimate = 1.0 / lu.rcond();
    if (!std::isfinite(sol.cond_estimate) || sol.cond_estimate > 1e12)
        throw SolverError("solve_galerkin: system ill-conditioned, cond ~ " +
                          std::to_string(sol.cond_estimate));
    sol.theta = lu.solve(system.b);
    sol.residual = (reg * sol.theta - system.b).norm();
    if (sol.residual > 1e-8 * (system.b.norm() + 1.0))
        throw SolverError("solve_galerkin: residual " + std::to_string(sol.residual) +
                          " exceeds tolerance");
    return sol;
}

CylindricalEval critic_eval(const CylindricalBasis& basis, const Vec& theta, const Vec& s,
                            const EmpiricalMeasure& mu) {
    const int n = basis.size();
    if (theta.size() != n)
        throw ParameterError("critic_eval: coefficient size does not match basis");
    const int d = static_cast<int>(s.size());
    CylindricalEval out;
    out.value = 0.0;
    out.grad_s = Vec::Zero(d);
    out.hess_ss = Mat::Zero(d, d);
    out.dm = Vec::Zero(basis.features->size());
    out.features = basis.features;
    const Vec m = moment_map(mu, *basis.features);
    for (int i = 0; i < n; ++i) {
        if (theta(i) == 0.0) continue;
        const CylindricalEval e = eval_at_moments(basis.fns[i], s, m);
        out.value += theta(i) * e.value;
        out.grad_s += theta(i) * e.grad_s;
        out.hess_ss += theta(i) * e.hess_ss;
        out.dm += theta(i) * e.dm;
    }
    return out;
}

double hjb_residual(const CylindricalBasis& basis, const Vec& theta,
                    const GaussianFeedbackPolicy& policy, const ModelSpec& model,
                    const Vec& s, const EmpiricalMeasure& mu, double lambda, double beta) {
    const CylindricalEval v = critic_eval(basis, theta, s, mu);
    const AveragedCoefficients rep = averaged_coefficients(policy, model, s, mu);
    const Vec pop = population_contraction(*basis.features, policy, model, mu, nullptr);
    const double lv =
        rep.b.dot(v.grad_s) + 0.5 * (rep.Sigma * v.hess_ss).trace() + v.dm.dot(pop);
    return regularized_reward(model, policy, s, mu, lambda) + lv - beta * v.value;
}

}  // namespace mfac
