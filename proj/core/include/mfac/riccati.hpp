#ifndef MFAC_RICCATI_HPP
#define MFAC_RICCATI_HPP

#include <stdexcept>
#include <utility>

#include "mfac/models.hpp"
#include "mfac/policy.hpp"

namespace mfac {

// Solution of the stationary mean-field Riccati system together with the
// derived matrices used by the optimal policy.
struct RiccatiSolution {
    Mat K, Lambda;  // symmetric positive definite, d x d
    Vec Y;          // d
    double R = 0.0;
    Mat S;  // N + F' K F
    Mat U;  // I + B' K + F' K D
    Mat W;  // I + B' Lambda + F' K (D + Dbar)
    Vec O;  // H + B' Y + F' K gamma

    // Norms of the four defining equations after back-substitution.
    Vec residuals;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

RiccatiSolution solve_riccati(const LQRModelSpec& spec);

// N(-S^-1(U s + (W - U) mubar + O), lambda/2 S^-1) over features (1, s, mubar).
GaussianFeedbackPolicy optimal_policy(const RiccatiSolution& sol, const LQRModelSpec& spec);

// -((s-mubar)' K (s-mubar) + mubar' Lambda mubar + 2 Y's + R).
double optimal_value(const RiccatiSolution& sol, const LQRModelSpec& spec, const Vec& s,
                     const Vec& mubar);

struct HurwitzReport {
    double max_re_representative = 0.0;  // A_beta - B S^-1 U
    double max_re_population = 0.0;      // A~_beta - B S^-1 W
    bool pass = false;
};

HurwitzReport verify_hurwitz(const RiccatiSolution& sol, const LQRModelSpec& spec);

// Explicit discount-threshold constants (beta0(2), beta_var(2)).
std::pair<double, double> discount_diagnostics(double k_pi, int d);

}  // namespace mfac

#endif
