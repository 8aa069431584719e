#include "mfac/riccati.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "linalg_detail.hpp"

namespace mfac {

namespace {

using detail::hurwitz;
using detail::mean_square_stable;
using detail::solve_generalized_lyapunov;

Mat find_ms_stabilizing_gain(const Mat& A, const Mat& B, const Mat& D, const Mat& F) {
    const int d = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    auto stable = [&](const Mat& th) {
        return mean_square_stable(A + B * th, D + F * th);
    };
    Mat th = Mat::Zero(m, d);
    if (stable(th)) return th;
    for (double c : {0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 50.0, 100.0}) {
        th = -c * B.transpose();
        if (stable(th)) return th;
    }
    std::mt19937_64 eng(98765);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < d; ++j) th(i, j) = gauss(eng) * std::pow(2.0, trial % 8);
        if (stable(th)) return th;
    }
    throw SolverError("solve_riccati: no stabilizing initial gain found");
}

// Kleinman-Newton for 0 = Qeff + K A0 + A0' K + C0' K C0 - U' S^-1 U with
// S = N + F'KF, U = Ieff + B'K + F'K C0base. Each step solves a generalized
// Lyapunov equation at the current gain.
Mat kleinman_newton(const Mat& A0, const Mat& B, const Mat& C0base, const Mat& F,
                    const Mat& Qeff, const Mat& N, const Mat& Ieff, const char* label) {
    const int d = static_cast<int>(A0.rows());
    const int m = static_cast<int>(B.cols());
    Mat theta = find_ms_stabilizing_gain(A0, B, C0base, F);
    Mat K = Mat::Zero(d, d);
    for (int it = 0; it < 200; ++it) {
        const Mat acl = A0 + B * theta;
        const Mat ccl = C0base + F * theta;
        const Mat qcl = Qeff + theta.transpose() * N * theta + theta.transpose() * Ieff +
                        Ieff.transpose() * theta;
        const Mat Knew = solve_generalized_lyapunov(acl, ccl, qcl);
        const Mat S = N + F.transpose() * Knew * F;
        const Mat U = Ieff + B.transpose() * Knew + F.transpose() * Knew * C0base;
        const Mat theta_new = -S.llt().solve(U);
        const double delta = (Knew - K).norm();
        K = Knew;
        theta = theta_new;
        if (delta <= 1e-12) return K;
        (void)m;
    }
    throw SolverError(std::string("solve_riccati: Newton iteration for ") + label +
                      " did not converge");
}

}  // namespace

RiccatiSolution solve_riccati(const LQRModelSpec& spec) {
    const int d = spec.d();
    const int m = spec.m();
    const Mat id = Mat::Identity(d, d);
    const Mat a_beta = spec.A - 0.5 * spec.beta * id;
    const Mat at_beta = spec.A + spec.Abar - 0.5 * spec.beta * id;

    const LQRAssumptionReport rep = check_lqr_assumptions(spec);
    if (!rep.h1())
        throw SolverError("solve_riccati: (H1) definiteness check failed: " + rep.details);

    RiccatiSolution sol;
    sol.K = kleinman_newton(a_beta, spec.B, spec.D, spec.F, spec.Q, spec.N, spec.I, "K");

    sol.S = spec.N + spec.F.transpose() * sol.K * spec.F;
    sol.U = spec.I + spec.B.transpose() * sol.K + spec.F.transpose() * sol.K * spec.D;

    // Lambda equation: quadratic through W = C + B'Lambda only, with K fixed.
    const Mat dd = spec.D + spec.Dbar;
    const Mat c_lam = spec.I + spec.F.transpose() * sol.K * dd;
    const Mat q_lam = spec.Q + spec.Qbar + dd.transpose() * sol.K * dd;
    sol.Lambda = kleinman_newton(at_beta, spec.B, Mat::Zero(d, d), Mat::Zero(d, m), q_lam,
                                 sol.S, c_lam, "Lambda");
    sol.W = c_lam + spec.B.transpose() * sol.Lambda;

    // Scalar fast path cross-check.
    if (d == 1 && m == 1 && spec.D.isZero(0.0) && spec.F.isZero(0.0)) {
        auto positive_root = [](double a2, double a1, double a0) {
            const double disc = a1 * a1 - 4.0 * a2 * a0;
            return (-a1 + std::sqrt(disc)) / (2.0 * a2);
        };
        const double bn = spec.B(0, 0) * spec.B(0, 0) / spec.N(0, 0);
        const double k_cf = positive_root(
            bn, spec.beta - 2.0 * spec.A(0, 0) + 2.0 * spec.I(0, 0) * spec.B(0, 0) / spec.N(0, 0),
            spec.I(0, 0) * spec.I(0, 0) / spec.N(0, 0) - spec.Q(0, 0));
        const double at = spec.A(0, 0) + spec.Abar(0, 0);
        const double l_cf = positive_root(
            bn, spec.beta - 2.0 * at + 2.0 * spec.I(0, 0) * spec.B(0, 0) / spec.N(0, 0),
            spec.I(0, 0) * spec.I(0, 0) / spec.N(0, 0) - spec.Q(0, 0) - spec.Qbar(0, 0));
        if (std::abs(k_cf - sol.K(0, 0)) > 1e-8 || std::abs(l_cf - sol.Lambda(0, 0)) > 1e-8)
            throw SolverError("solve_riccati: scalar closed form disagrees with Newton");
    }

    // Y: linear once (K, Lambda) are fixed.
    const Mat sinv_u = sol.S.llt().solve(sol.U);
    const Mat acl_shift = (spec.A - spec.B * sinv_u).transpose() - spec.beta * id;
    const Vec rhs = spec.M + spec.D.transpose() * sol.K * spec.gamma -
                    sol.U.transpose() *
                        sol.S.llt().solve(Vec(spec.H + spec.F.transpose() * sol.K * spec.gamma));
    sol.Y = acl_shift.partialPivLu().solve(Vec(-rhs));

    sol.O = spec.H + spec.B.transpose() * sol.Y + spec.F.transpose() * sol.K * spec.gamma;
    const double entropy_const =
        -0.5 * spec.lambda *
        (m * std::log(std::numbers::pi * spec.lambda) -
         std::log(sol.S.determinant()));
    sol.R = (spec.gamma.dot(sol.K * spec.gamma) - sol.O.dot(sol.S.llt().solve(sol.O)) +
             entropy_const) /
            spec.beta;

    // Back-substitution residuals of the four defining equations.
    sol.residuals = Vec::Zero(4);
    sol.residuals(0) =
        (spec.beta * sol.K -
         (spec.Q + sol.K * spec.A + spec.A.transpose() * sol.K +
          spec.D.transpose() * sol.K * spec.D - sol.U.transpose() * sol.S.llt().solve(sol.U)))
            .norm();
    sol.residuals(1) =
        (spec.beta * sol.Lambda -
         (spec.Q + spec.Qbar + sol.Lambda * (spec.A + spec.Abar) +
          (spec.A + spec.Abar).transpose() * sol.Lambda + dd.transpose() * sol.K * dd -
          sol.W.transpose() * sol.S.llt().solve(sol.W)))
            .norm();
    sol.residuals(2) =
        (spec.beta * sol.Y -
         (spec.M + spec.A.transpose() * sol.Y + spec.D.transpose() * sol.K * spec.gamma -
          sol.U.transpose() * sol.S.llt().solve(sol.O)))
            .norm();
    sol.residuals(3) = std::abs(
        spec.beta * sol.R - (spec.gamma.dot(sol.K * spec.gamma) -
                             sol.O.dot(sol.S.llt().solve(sol.O)) + entropy_const));

    if (!detail::positive_definite(sol.K) || !detail::positive_definite(sol.Lambda))
        throw SolverError("solve_riccati: solution not positive definite");
    return sol;
}

GaussianFeedbackPolicy optimal_policy(const RiccatiSolution& sol, const LQRModelSpec& spec) {
    const int d = spec.d();
    const int m = spec.m();
    const Mat sinv = sol.S.llt().solve(Mat::Identity(m, m));
    Mat W = Mat::Zero(m, 1 + 2 * d);
    W.col(0) = -sinv * sol.O;
    W.block(0, 1, m, d) = -sinv * sol.U;
    W.block(0, 1 + d, m, d) = -sinv * (sol.W - sol.U);
    const Mat cov = 0.5 * spec.lambda * sinv;
    return GaussianFeedbackPolicy(W, cov, PolicyFeatureMap::affine_full(d));
}

double optimal_value(const RiccatiSolution& sol, const LQRModelSpec& spec, const Vec& s,
                     const Vec& mubar) {
    (void)spec;
    const Vec x = s - mubar;
    return -(x.dot(sol.K * x) + mubar.dot(sol.Lambda * mubar) + 2.0 * sol.Y.dot(s) + sol.R);
}

HurwitzReport verify_hurwitz(const RiccatiSolution& sol, const LQRModelSpec& spec) {
    const int d = spec.d();
    const Mat id = Mat::Identity(d, d);
    const Mat a_beta = spec.A - 0.5 * spec.beta * id;
    const Mat at_beta = spec.A + spec.Abar - 0.5 * spec.beta * id;
    HurwitzReport rep;
    rep.max_re_representative =
        detail::max_real_eigenvalue(a_beta - spec.B * sol.S.llt().solve(sol.U));
    rep.max_re_population =
        detail::max_real_eigenvalue(at_beta - spec.B * sol.S.llt().solve(sol.W));
    rep.pass = rep.max_re_representative < 0.0 && rep.max_re_population < 0.0;
    return rep;
}

std::pair<double, double> discount_diagnostics(double k_pi, int d) {
    if (k_pi < 0.0) throw ParameterError("discount_diagnostics: K_pi must be nonnegative");
    const double beta0 = 5.0 * k_pi + 6.0 * k_pi * k_pi;
    const double dd = static_cast<double>(d);
    const double beta_var = (32.0 + 32.0 * dd + 64.0 * std::sqrt(dd) + 144.0 * dd * dd +
                             32.0 * dd * dd * dd + 64.0 * std::pow(dd, 2.5) +
                             112.0 * std::pow(dd, 4.0)) *
                            k_pi * k_pi;
    return {beta0, beta_var};
}

}  // namespace mfac
