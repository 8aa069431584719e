#include "mfac/cylindrical.hpp"

#include <cmath>

namespace mfac {

Vec CylindricalEval::lions(const Vec& xi) const {
    const int d = static_cast<int>(xi.size());
    Vec out = Vec::Zero(d);
    Vec g(d);
    for (int i = 0; i < features->size(); ++i) {
        if (dm(i) == 0.0) continue;
        features->features[i].gradient(xi, g);
        out += dm(i) * g;
    }
    return out;
}

Mat CylindricalEval::lions_jac(const Vec& xi) const {
    const int d = static_cast<int>(xi.size());
    Mat out = Mat::Zero(d, d);
    Mat h(d, d);
    for (int i = 0; i < features->size(); ++i) {
        if (dm(i) == 0.0) continue;
        features->features[i].hessian(xi, h);
        out += dm(i) * h;
    }
    return out;
}

CylindricalEval eval_with_derivatives(const CylindricalFunction& f, const Vec& s,
                                      const EmpiricalMeasure& mu) {
    CylindricalEval e;
    const Vec m = moment_map(mu, *f.features);
    e.value = f.psi(s, m);
    f.grad_s(s, m, e.grad_s);
    f.hess_ss(s, m, e.hess_ss);
    f.dpsi_dm(s, m, e.dm);
    e.features = f.features;
    return e;
}

double apply_generator(const CylindricalFunction& f, const GaussianFeedbackPolicy& policy,
                       const ModelSpec& model, const Vec& s, const EmpiricalMeasure& mu) {
    const CylindricalEval e = eval_with_derivatives(f, s, mu);
    const AveragedCoefficients rep = averaged_coefficients(policy, model, s, mu);
    double out = rep.b.dot(e.grad_s) + 0.5 * (rep.Sigma * e.hess_ss).trace();
    for (int p = 0; p < mu.size(); ++p) {
        const Vec xi = mu.particles.row(p).transpose();
        const AveragedCoefficients pc = averaged_coefficients(policy, model, xi, mu);
        out += mu.weights(p) *
               (pc.b.dot(e.lions(xi)) + 0.5 * (pc.Sigma * e.lions_jac(xi)).trace());
    }
    return out;
}

namespace {

std::shared_ptr<const FeatureFamily> coordinate_family_1d() {
    return std::make_shared<FeatureFamily>(FeatureFamily::coordinates(1));
}

CylindricalFunction constant_fn(std::shared_ptr<const FeatureFamily> fam) {
    CylindricalFunction f;
    f.features = fam;
    f.psi = [](const Vec&, const Vec&) { return 1.0; };
    f.grad_s = [](const Vec& s, const Vec&, Vec& g) { g.setZero(s.size()); };
    f.hess_ss = [](const Vec& s, const Vec&, Mat& h) { h.setZero(s.size(), s.size()); };
    f.dpsi_dm = [](const Vec&, const Vec& m, Vec& d) { d.setZero(m.size()); };
    return f;
}

CylindricalFunction mubar_sq(std::shared_ptr<const FeatureFamily> fam) {
    CylindricalFunction f;
    f.features = fam;
    f.psi = [](const Vec&, const Vec& m) { return m(0) * m(0); };
    f.grad_s = [](const Vec& s, const Vec&, Vec& g) { g.setZero(s.size()); };
    f.hess_ss = [](const Vec& s, const Vec&, Mat& h) { h.setZero(s.size(), s.size()); };
    f.dpsi_dm = [](const Vec&, const Vec& m, Vec& d) {
        d.setZero(m.size());
        d(0) = 2.0 * m(0);
    };
    return f;
}

CylindricalFunction centered_sq(std::shared_ptr<const FeatureFamily> fam) {
    CylindricalFunction f;
    f.features = fam;
    f.psi = [](const Vec& s, const Vec& m) { return (s(0) - m(0)) * (s(0) - m(0)); };
    f.grad_s = [](const Vec& s, const Vec& m, Vec& g) {
        g.resize(1);
        g(0) = 2.0 * (s(0) - m(0));
    };
    f.hess_ss = [](const Vec&, const Vec&, Mat& h) {
        h.resize(1, 1);
        h(0, 0) = 2.0;
    };
    f.dpsi_dm = [](const Vec& s, const Vec& m, Vec& d) {
        d.resize(m.size());
        d.setZero();
        d(0) = -2.0 * (s(0) - m(0));
    };
    return f;
}

CylindricalFunction centered_cross(std::shared_ptr<const FeatureFamily> fam) {
    CylindricalFunction f;
    f.features = fam;
    f.psi = [](const Vec& s, const Vec& m) { return (s(0) - m(0)) * m(0); };
    f.grad_s = [](const Vec&, const Vec& m, Vec& g) {
        g.resize(1);
        g(0) = m(0);
    };
    f.hess_ss = [](const Vec&, const Vec&, Mat& h) {
        h.resize(1, 1);
        h(0, 0) = 0.0;
    };
    f.dpsi_dm = [](const Vec& s, const Vec& m, Vec& d) {
        d.resize(m.size());
        d.setZero();
        d(0) = s(0) - 2.0 * m(0);
    };
    return f;
}

}  // namespace

CylindricalBasis CylindricalBasis::systemic_risk_3() {
    CylindricalBasis b;
    b.features = coordinate_family_1d();
    b.fns = {constant_fn(b.features), mubar_sq(b.features), centered_sq(b.features)};
    return b;
}

CylindricalBasis CylindricalBasis::systemic_risk_4() {
    CylindricalBasis b;
    b.features = coordinate_family_1d();
    b.fns = {constant_fn(b.features), mubar_sq(b.features), centered_cross(b.features),
             centered_sq(b.features)};
    return b;
}

CylindricalBasis CylindricalBasis::rbf_grid(double lo, double hi, int points_per_axis,
                                            double state_bandwidth,
                                            double measure_bandwidth) {
    std::vector<Vec> centers;
    const int p = points_per_axis;
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            Vec c(2);
            c(0) = lo + (hi - lo) * i / (p - 1);
            c(1) = lo + (hi - lo) * j / (p - 1);
            centers.push_back(c);
        }

    CylindricalBasis b;
    b.features = std::make_shared<FeatureFamily>(
        FeatureFamily::gaussian_bumps(centers, measure_bandwidth, lo, hi, true));

    const double inv_sx2 = 1.0 / (state_bandwidth * state_bandwidth);
    auto clamp = [lo, hi](const Vec& x) -> Vec { return x.cwiseMax(lo).cwiseMin(hi); };
    const int n_centers = static_cast<int>(centers.size());

    // phi_{m,0} = psi_m(s), phi_{m,j} = psi_m(s) u_j(mu).
    for (int mi = 0; mi < n_centers; ++mi) {
        for (int j = -1; j < n_centers; ++j) {
            const Vec c = centers[mi];
            CylindricalFunction f;
            f.features = b.features;
            auto state_rbf = [c, inv_sx2, clamp, lo, hi](const Vec& s, double& v, Vec& g,
                                                          Mat& h) {
                const Vec y = clamp(s);
                v = std::exp(-0.5 * (y - c).squaredNorm() * inv_sx2);
                const Vec u = -inv_sx2 * (y - c);
                g = v * u;
                h = v * (u * u.transpose() - inv_sx2 * Mat::Identity(2, 2));
                for (int i = 0; i < 2; ++i)
                    if (s(i) < lo || s(i) > hi) {
                        g(i) = 0.0;
                        h.row(i).setZero();
                        h.col(i).setZero();
                    }
            };
            f.psi = [state_rbf, j](const Vec& s, const Vec& m) {
                double v;
                Vec g;
                Mat h;
                state_rbf(s, v, g, h);
                return j < 0 ? v : v * m(j);
            };
            f.grad_s = [state_rbf, j](const Vec& s, const Vec& m, Vec& out) {
                double v;
                Vec g;
                Mat h;
                state_rbf(s, v, g, h);
                out = j < 0 ? g : Vec(g * m(j));
            };
            f.hess_ss = [state_rbf, j](const Vec& s, const Vec& m, Mat& out) {
                double v;
                Vec g;
                Mat h;
                state_rbf(s, v, g, h);
                out = j < 0 ? h : Mat(h * m(j));
            };
            f.dpsi_dm = [state_rbf, j](const Vec& s, const Vec& m, Vec& out) {
                out.setZero(m.size());
                if (j >= 0) {
                    double v;
                    Vec g;
                    Mat h;
                    state_rbf(s, v, g, h);
                    out(j) = v;
                }
            };
            b.fns.push_back(std::move(f));
        }
    }
    return b;
}

}  // namespace mfac
