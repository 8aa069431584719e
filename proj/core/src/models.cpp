#include "mfac/models.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "linalg_detail.hpp"

namespace mfac {

double lqr_reward(const LQRModelSpec& spec, const Vec& x, const EmpiricalMeasure& mu,
                  const Vec& a) {
    const Vec mubar = mean(mu);
    return -(x.dot(spec.Q * x) + mubar.dot(spec.Qbar * mubar) + a.dot(spec.N * a) +
             2.0 * a.dot(spec.I * x) + 2.0 * spec.M.dot(x) + 2.0 * spec.H.dot(a));
}

double crowd_reward(const CrowdModelSpec& spec, const Vec& x, const EmpiricalMeasure& mu,
                    const Vec& a) {
    return -(0.5 * a.squaredNorm() + 0.5 * spec.kappa * (x - spec.s_tar).squaredNorm() +
             spec.gamma_crowd * kernel_convolution(mu, x, spec.eta) +
             0.5 * spec.rho * x.squaredNorm());
}

LQRModelSpec LQRModelSpec::systemic_risk() {
    LQRModelSpec s;
    s.A = Mat::Constant(1, 1, -1.0);
    s.Abar = Mat::Constant(1, 1, 1.0);
    s.D = Mat::Zero(1, 1);
    s.Dbar = Mat::Zero(1, 1);
    s.B = Mat::Constant(1, 1, 1.0);
    s.F = Mat::Zero(1, 1);
    s.gamma = Vec::Constant(1, 0.5);
    s.Q = Mat::Constant(1, 1, 1.0);
    s.Qbar = Mat::Constant(1, 1, 1.0);
    s.N = Mat::Constant(1, 1, 0.5);
    s.I = Mat::Zero(1, 1);
    s.M = Vec::Zero(1);
    s.H = Vec::Zero(1);
    s.lambda = 0.2;
    s.beta = 1.0;
    return s;
}

ModelSpec LQRModelSpec::to_model() const {
    ModelSpec m;
    const LQRModelSpec spec = *this;
    m.state_dim = d();
    m.action_dim = this->m();
    m.noise_dim = 1;
    m.drift = [spec](const Vec& x, const EmpiricalMeasure& mu, const Vec& a) -> Vec {
        const Vec mubar = mean(mu);
        return spec.A * x + spec.Abar * mubar + spec.B * a;
    };
    m.diffusion = [spec](const Vec& x, const EmpiricalMeasure& mu, const Vec& a) -> Mat {
        const Vec mubar = mean(mu);
        return spec.gamma + spec.D * x + spec.Dbar * mubar + spec.F * a;
    };
    m.reward = [spec](const Vec& x, const EmpiricalMeasure& mu, const Vec& a) {
        return lqr_reward(spec, x, mu, a);
    };
    m.affine_in_action = true;
    m.mean_field_via_mean_only = true;
    m.diffusion_action_free = spec.F.isZero(0.0);
    m.reward_expectation = [spec](const Vec& x, const EmpiricalMeasure& mu,
                                  const Vec& ma, const Mat& cov) {
        const Vec mubar = mean(mu);
        const double ea_na = ma.dot(spec.N * ma) + (spec.N * cov).trace();
        return -(x.dot(spec.Q * x) + mubar.dot(spec.Qbar * mubar) + ea_na +
                 2.0 * ma.dot(spec.I * x) + 2.0 * spec.M.dot(x) + 2.0 * spec.H.dot(ma));
    };
    if (spec.D.isZero(0.0) && spec.Dbar.isZero(0.0) && spec.F.isZero(0.0)) {
        m.affine.valid = true;
        m.affine.b0 = Vec::Zero(d());
        m.affine.Ax = spec.A;
        m.affine.Amu = spec.Abar;
        m.affine.B = spec.B;
        m.affine.sigma_const = spec.gamma;
    }
    return m;
}

CrowdModelSpec CrowdModelSpec::defaults() {
    CrowdModelSpec c;
    c.s_tar = Vec::Zero(2);
    c.s_tar << 2.0, 0.0;
    return c;
}

ModelSpec CrowdModelSpec::to_model() const {
    ModelSpec m;
    const CrowdModelSpec spec = *this;
    m.state_dim = 2;
    m.action_dim = 2;
    m.noise_dim = 2;
    m.drift = [](const Vec&, const EmpiricalMeasure&, const Vec& a) -> Vec { return a; };
    m.diffusion = [spec](const Vec&, const EmpiricalMeasure&, const Vec&) -> Mat {
        return spec.sigma * Mat::Identity(2, 2);
    };
    m.reward = [spec](const Vec& x, const EmpiricalMeasure& mu, const Vec& a) {
        return crowd_reward(spec, x, mu, a);
    };
    m.affine_in_action = true;
    m.mean_field_via_mean_only = false;
    m.diffusion_action_free = true;
    m.reward_expectation = [spec](const Vec& x, const EmpiricalMeasure& mu,
                                  const Vec& ma, const Mat& cov) {
        return -(0.5 * (ma.squaredNorm() + cov.trace()) +
                 0.5 * spec.kappa * (x - spec.s_tar).squaredNorm() +
                 spec.gamma_crowd * kernel_convolution(mu, x, spec.eta) +
                 0.5 * spec.rho * x.squaredNorm());
    };
    m.affine.valid = true;
    m.affine.b0 = Vec::Zero(2);
    m.affine.Ax = Mat::Zero(2, 2);
    m.affine.Amu = Mat::Zero(2, 2);
    m.affine.B = Mat::Identity(2, 2);
    m.affine.sigma_const = spec.sigma * Mat::Identity(2, 2);
    return m;
}

LQRAssumptionReport check_lqr_assumptions(const LQRModelSpec& spec) {
    LQRAssumptionReport rep;
    std::ostringstream details;
    const int d = spec.d();
    const int m = spec.m();

    const Mat ninv = spec.N.llt().solve(Mat::Identity(m, m));
    const Mat h1a = spec.Q - spec.I.transpose() * ninv * spec.I;
    const Mat h1b = spec.Q + spec.Qbar - spec.I.transpose() * ninv * spec.I;
    rep.h1_q = detail::positive_definite(h1a);
    rep.h1_qqbar = detail::positive_definite(h1b);
    details << "(H1) Q - I'N^-1 I " << (rep.h1_q ? "PD" : "not PD") << "; Q+Qbar - I'N^-1 I "
            << (rep.h1_qqbar ? "PD" : "not PD") << ". ";

    const Mat a_beta = spec.A - 0.5 * spec.beta * Mat::Identity(d, d);
    const Mat at_beta = spec.A + spec.Abar - 0.5 * spec.beta * Mat::Identity(d, d);

    std::mt19937_64 eng(12345);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_gain = [&]() {
        Mat th(m, d);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < d; ++j) th(i, j) = gauss(eng);
        return th;
    };

    // Stabilizability of (A_tilde_beta, B): gain search over scaled -c B' and
    // random candidates.
    auto find_gain = [&](const Mat& amat, auto&& stable) -> std::pair<bool, Mat> {
        if (stable(amat)) return {true, Mat::Zero(m, d)};
        for (double c : {0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 50.0}) {
            const Mat th = -c * spec.B.transpose();
            if (stable(amat + spec.B * th)) return {true, th};
        }
        for (int trial = 0; trial < 100; ++trial) {
            const Mat th = random_gain() * std::pow(2.0, trial % 8);
            if (stable(amat + spec.B * th)) return {true, th};
        }
        return {false, Mat::Zero(m, d)};
    };

    auto [stab, theta_pop] =
        find_gain(at_beta, [](const Mat& a) { return detail::hurwitz(a); });
    rep.stabilizable = stab;
    details << "(A~_beta, B) " << (stab ? "stabilizable" : "stabilizability search failed")
            << ". ";

    // (H2): Theta with mean-square stable closed loop, certified by a
    // positive definite Lyapunov solution of A'P + PA + C'PC = -I.
    bool found = false;
    Mat theta_ms = Mat::Zero(m, d);
    auto try_theta = [&](const Mat& th) {
        const Mat acl = a_beta + spec.B * th;
        const Mat ccl = spec.D + spec.F * th;
        if (!detail::mean_square_stable(acl, ccl)) return false;
        const Mat p = detail::solve_generalized_lyapunov(acl, ccl, Mat::Identity(d, d));
        return detail::positive_definite(p);
    };
    if (try_theta(Mat::Zero(m, d))) {
        found = true;
    } else {
        for (double c : {0.5, 1.0, 2.0, 5.0, 10.0, 25.0}) {
            theta_ms = -c * spec.B.transpose();
            if (try_theta(theta_ms)) {
                found = true;
                break;
            }
        }
        for (int trial = 0; !found && trial < 100; ++trial) {
            theta_ms = random_gain() * std::pow(2.0, trial % 8);
            found = try_theta(theta_ms);
        }
        if (!found) theta_ms = Mat::Zero(m, d);
    }
    rep.lyapunov_found = found;
    rep.stabilizing_gain = theta_ms;
    details << "(H2) Lyapunov certificate " << (found ? "found" : "not found") << ".";
    rep.details = details.str();
    return rep;
}

}  // namespace mfac
