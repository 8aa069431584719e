#include "mfac/actor.hpp"

#include <chrono>
#include <cmath>

#include "mfac/parallel.hpp"
#include "mfac/riccati.hpp"

namespace mfac {

namespace {

double q_rep_impl(const CylindricalEval& v, const GaussianFeedbackPolicy& policy,
                  const ModelSpec& model, const Vec& s, const EmpiricalMeasure& mu,
                  const Vec& mubar, const Vec& a, double lambda) {
    const Mat sig = model.diffusion(s, mu, a);
    return model.reward(s, mu, a) - lambda * policy.log_density_reduced(a, s, mubar) +
           model.drift(s, mu, a).dot(v.grad_s) +
           0.5 * (sig * sig.transpose() * v.hess_ss).trace();
}

double q_pop_impl(const ModelSpec& model, const Vec& xi, const EmpiricalMeasure& mu,
                  const Vec& a, const Vec& lions, const Mat& lions_jac) {
    const Mat sig = model.diffusion(xi, mu, a);
    return model.drift(xi, mu, a).dot(lions) +
           0.5 * (sig * sig.transpose() * lions_jac).trace();
}

struct SampleTerm {
    Mat rep_first, rep_second;  // half-sample estimates of the rep term
    Mat pop_first, pop_second;
    double score_mean_first = 0.0;  // only used by the Gateaux variant
    double score_mean_second = 0.0;
};

// Shared body of policy_gradient and gateaux_gradient: identical streams and
// identical arithmetic, the direction only changes what gets accumulated.
SampleTerm sample_term(const CylindricalBasis& basis, const Vec& theta,
                       const GaussianFeedbackPolicy& policy, const ModelSpec& model,
                       const Vec& s, const EmpiricalMeasure& mu, double lambda,
                       int action_samples, int xi_samples, const RngTree& sample_rng,
                       const Mat* direction) {
    const int m = policy.action_dim();
    const int df = policy.features().dim();
    const Vec mubar = mean(mu);
    const CylindricalEval v = critic_eval(basis, theta, s, mu);

    SampleTerm out;
    out.rep_first = Mat::Zero(m, df);
    out.rep_second = Mat::Zero(m, df);
    out.pop_first = Mat::Zero(m, df);
    out.pop_second = Mat::Zero(m, df);

    const int half = std::max(1, action_samples / 2);
    const int total = 2 * half;

    // The score is rank one in the features, score = Sigma0^-1 L eps f', so
    // only q-weighted noise sums are accumulated inside the action loops.
    const Mat& chol = policy.covariance_cholesky();
    const Mat pre = policy.covariance_inverse() * chol;  // Sigma0^-1 L

    RngStream rep_actions = sample_rng.stream(0);
    {
        const Vec f = policy.features().eval(s, mubar);
        const Vec mean_a = policy.weights() * f;
        const Vec u = direction ? Vec((*direction) * f) : Vec();
        Vec qe1 = Vec::Zero(m), qe2 = Vec::Zero(m);
        Vec e1 = Vec::Zero(m), e2 = Vec::Zero(m);
        Vec eps(m), a(m);
        for (int i = 0; i < total; ++i) {
            for (int j = 0; j < m; ++j) eps(j) = rep_actions.normal();
            a = mean_a + chol * eps;
            const double q = q_rep_impl(v, policy, model, s, mu, mubar, a, lambda);
            (i < half ? qe1 : qe2) += q * eps;
            (i < half ? e1 : e2) += eps;
        }
        out.rep_first = (pre * qe1 / half) * f.transpose();
        out.rep_second = (pre * qe2 / half) * f.transpose();
        if (direction) {
            out.score_mean_first = u.dot(pre * e1) / half;
            out.score_mean_second = u.dot(pre * e2) / half;
        }
    }

    // Population term: all particles when the cloud is small, otherwise a
    // weighted subsample drawn from a dedicated stream.
    std::vector<int> idx;
    std::vector<double> xw;
    if (mu.size() <= xi_samples) {
        idx.resize(mu.size());
        xw.resize(mu.size());
        for (int p = 0; p < mu.size(); ++p) {
            idx[p] = p;
            xw[p] = mu.weights(p);
        }
    } else {
        RngStream pick = sample_rng.stream(1);
        idx.reserve(xi_samples);
        xw.assign(xi_samples, 1.0 / xi_samples);
        for (int j = 0; j < xi_samples; ++j) {
            double u = pick.uniform();
            int p = 0;
            double acc = mu.weights(0);
            while (u > acc && p + 1 < mu.size()) acc += mu.weights(++p);
            idx.push_back(p);
        }
    }
    Vec eps(m), a(m);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const Vec xi = mu.particles.row(idx[j]).transpose();
        const Vec lions = v.lions(xi);
        const Mat ljac = v.lions_jac(xi);
        const Vec f = policy.features().eval(xi, mubar);
        const Vec mean_a = policy.weights() * f;
        RngStream xi_actions = sample_rng.stream(100 + static_cast<std::uint64_t>(j));
        Vec qe1 = Vec::Zero(m), qe2 = Vec::Zero(m);
        for (int i = 0; i < total; ++i) {
            for (int k = 0; k < m; ++k) eps(k) = xi_actions.normal();
            a.noalias() = mean_a + chol * eps;
            const double q = q_pop_impl(model, xi, mu, a, lions, ljac);
            (i < half ? qe1 : qe2) += q * eps;
        }
        out.pop_first.noalias() += (xw[j] / half) * (pre * qe1) * f.transpose();
        out.pop_second.noalias() += (xw[j] / half) * (pre * qe2) * f.transpose();
    }
    return out;
}

}  // namespace

double q_rep(const CylindricalEval& v, const GaussianFeedbackPolicy& policy,
             const ModelSpec& model, const Vec& s, const EmpiricalMeasure& mu,
             const Vec& a, double lambda) {
    return q_rep_impl(v, policy, model, s, mu, mean(mu), a, lambda);
}

double q_pop(const CylindricalEval& v, const ModelSpec& model, const Vec& xi,
             const EmpiricalMeasure& mu, const Vec& a) {
    return q_pop_impl(model, xi, mu, a, v.lions(xi), v.lions_jac(xi));
}

GradientEstimate policy_gradient(const CylindricalBasis& basis, const Vec& theta,
                                 const GaussianFeedbackPolicy& policy,
                                 const ModelSpec& model, const OccupancySampleSet& samples,
                                 double lambda, double beta, int action_samples,
                                 int xi_samples, const RngTree& rng) {
    const int nd = samples.size();
    if (nd == 0) throw ParameterError("policy_gradient: no samples");
    std::vector<SampleTerm> terms(nd);
    parallel_for(nd, [&](int eta) {
        terms[eta] = sample_term(basis, theta, policy, model, samples.states[eta],
                                 samples.measures[eta], lambda, action_samples, xi_samples,
                                 rng.child(static_cast<std::uint64_t>(eta)), nullptr);
    });

    const int m = policy.action_dim();
    const int df = policy.features().dim();
    Mat rep1 = Mat::Zero(m, df), rep2 = rep1, pop1 = rep1, pop2 = rep1;
    for (int eta = 0; eta < nd; ++eta) {
        const double w = samples.weights(eta);
        rep1 += w * terms[eta].rep_first;
        rep2 += w * terms[eta].rep_second;
        pop1 += w * terms[eta].pop_first;
        pop2 += w * terms[eta].pop_second;
    }
    GradientEstimate g;
    g.rep_part = 0.5 * (rep1 + rep2) / beta;
    g.pop_part = 0.5 * (pop1 + pop2) / beta;
    g.grad = g.rep_part + g.pop_part;
    g.std_err = 0.5 * ((rep1 + pop1) - (rep2 + pop2)).norm() / beta;
    return g;
}

GateauxEstimate gateaux_gradient(const CylindricalBasis& basis, const Vec& theta,
                                 const GaussianFeedbackPolicy& policy,
                                 const ModelSpec& model, const OccupancySampleSet& samples,
                                 double lambda, double beta, int action_samples,
                                 int xi_samples, const RngTree& rng, const Mat& direction) {
    const int nd = samples.size();
    if (nd == 0) throw ParameterError("gateaux_gradient: no samples");
    std::vector<SampleTerm> terms(nd);
    parallel_for(nd, [&](int eta) {
        terms[eta] = sample_term(basis, theta, policy, model, samples.states[eta],
                                 samples.measures[eta], lambda, action_samples, xi_samples,
                                 rng.child(static_cast<std::uint64_t>(eta)), &direction);
    });

    double deriv = 0.0;
    double score_mean = 0.0;
    double weight_total = 0.0;
    for (int eta = 0; eta < nd; ++eta) {
        const double w = samples.weights(eta);
        const Mat g = 0.5 * (terms[eta].rep_first + terms[eta].rep_second +
                             terms[eta].pop_first + terms[eta].pop_second);
        deriv += w * (direction.array() * g.array()).sum();
        score_mean +=
            w * 0.5 * (terms[eta].score_mean_first + terms[eta].score_mean_second);
        weight_total += w;
    }
    GateauxEstimate out;
    out.derivative = deriv / beta;
    out.score_mean = score_mean / weight_total;
    if (std::abs(out.score_mean) > 1e-2 * (1.0 + direction.norm()))
        throw EvaluationError("gateaux_gradient: score mean check failed");
    return out;
}

TrainResult train(const ModelSpec& model, const GaussianFeedbackPolicy& initial_policy,
                  const CylindricalBasis& basis, const InitialCondition& init,
                  const TrainingSchedule& schedule, double lambda, double beta,
                  const RngTree& rng,
                  const std::function<void(const TrainingRecord&)>& callback) {
    TrainResult result{initial_policy, Vec::Zero(basis.size()), {}};
    result.history.reserve(schedule.iterations);

    const bool exact = schedule.exact_transitions && model.affine.valid &&
                       model.mean_field_via_mean_only && init.mean_only;

    for (int k = 0; k < schedule.iterations; ++k) {
        const auto tic = std::chrono::steady_clock::now();
        const RngTree iter_rng = rng.child(static_cast<std::uint64_t>(k));
        const RngTree sim_rng = iter_rng.child(0);
        const RngTree grad_rng = iter_rng.child(1);
        const RngTree critic_rng = iter_rng.child(2);

        try {
            const TrajectoryBatch batch =
                exact ? simulate_affine_exact(model, result.policy, init, schedule.horizon,
                                              schedule.dt, schedule.n_trajectories, sim_rng)
                      : simulate_euler(model, result.policy, init, schedule.horizon,
                                       schedule.dt, schedule.n_trajectories, sim_rng);
            const OccupancySampleSet samples =
                occupancy_samples(batch, beta, schedule.weighting);

            const GalerkinSystem sys = assemble_galerkin(
                basis, result.policy, model, samples, lambda, beta, schedule.ridge,
                &critic_rng);
            const CriticSolution critic = solve_galerkin(sys);
            result.theta = critic.theta;

            const GradientEstimate g = policy_gradient(
                basis, critic.theta, result.policy, model, samples, lambda, beta,
                schedule.action_samples, schedule.xi_samples, grad_rng);

            TrainingRecord rec;
            rec.iteration = k;
            rec.weights = result.policy.weights();
            rec.theta = critic.theta;
            rec.value_estimate = estimate_value(model, result.policy, batch, lambda, beta);
            rec.grad_norm = g.grad.norm();
            rec.grad_std_err = g.std_err;
            rec.critic_cond = critic.cond_estimate;
            rec.critic_residual = critic.residual;

            const double alpha = schedule.sqrt_decay
                                     ? schedule.learning_rate / std::sqrt(k + 1.0)
                                     : schedule.learning_rate;
            Mat w = result.policy.weights() + alpha * g.grad;
            if (schedule.weight_clip > 0.0)
                w = w.cwiseMax(-schedule.weight_clip).cwiseMin(schedule.weight_clip);
            result.policy = result.policy.with_weights(w);

            rec.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
                    .count();
            result.history.push_back(rec);
            if (callback) callback(rec);
        } catch (const EvaluationError& e) {
            throw EvaluationError("iteration " + std::to_string(k) + ": " + e.what());
        } catch (const SolverError& e) {
            throw SolverError("iteration " + std::to_string(k) + ": " + e.what());
        }
    }
    return result;
}

}  // namespace mfac
