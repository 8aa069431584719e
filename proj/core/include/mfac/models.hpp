#ifndef MFAC_MODELS_HPP
#define MFAC_MODELS_HPP

#include <functional>
#include <string>

#include "mfac/measures.hpp"

namespace mfac {

// Affine-in-everything dynamics with constant diffusion,
//   b(x, mu, a) = b0 + Ax x + Amu mubar + B a,   sigma(x, mu, a) = sigma_const,
// used by the exact Gaussian transition sampler.
struct AffineDynamics {
    bool valid = false;
    Vec b0;
    Mat Ax, Amu, B;
    Mat sigma_const;  // d x n
};

// Declarative controlled mean-field dynamics and reward.
struct ModelSpec {
    int state_dim = 0;
    int action_dim = 0;
    int noise_dim = 0;

    std::function<Vec(const Vec& x, const EmpiricalMeasure& mu, const Vec& a)> drift;
    std::function<Mat(const Vec& x, const EmpiricalMeasure& mu, const Vec& a)> diffusion;
    std::function<double(const Vec& x, const EmpiricalMeasure& mu, const Vec& a)> reward;

    bool affine_in_action = false;
    bool mean_field_via_mean_only = false;
    bool diffusion_action_free = false;

    // Optional closed form for E_{a ~ N(mean_a, cov_a)}[ r(x, mu, a) ].
    std::function<double(const Vec& x, const EmpiricalMeasure& mu, const Vec& mean_a,
                         const Mat& cov_a)>
        reward_expectation;

    AffineDynamics affine;
};

// Mean-field LQR coefficients (one-dimensional Brownian noise kept as a
// rank-one column gamma, per the benchmark convention).
struct LQRModelSpec {
    Mat A, Abar, D, Dbar;  // d x d
    Mat B, F;              // d x m
    Vec gamma;             // d
    Mat Q, Qbar;           // d x d PSD
    Mat N;                 // m x m PD
    Mat I;                 // m x d
    Vec M;                 // d
    Vec H;                 // m
    double lambda = 0.0;   // temperature
    double beta = 0.0;     // discount

    int d() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }

    // Systemic-risk benchmark parameters.
    static LQRModelSpec systemic_risk();

    ModelSpec to_model() const;
};

struct CrowdModelSpec {
    double sigma = 0.2;        // diffusion scale
    double kappa = 1000.0;     // target attraction
    double gamma_crowd = 10.0; // crowd-aversion weight
    double eta = 0.8;          // kernel bandwidth
    double rho = 0.1;          // confinement
    Vec s_tar;                 // target in R^2
    double lambda = 2.0;       // temperature
    double beta = 0.1;         // discount

    static CrowdModelSpec defaults();

    ModelSpec to_model() const;
};

double lqr_reward(const LQRModelSpec& spec, const Vec& x, const EmpiricalMeasure& mu,
                  const Vec& a);
double crowd_reward(const CrowdModelSpec& spec, const Vec& x, const EmpiricalMeasure& mu,
                    const Vec& a);

struct LQRAssumptionReport {
    bool h1_q = false;         // Q - I' N^-1 I > 0
    bool h1_qqbar = false;     // Q + Qbar - I' N^-1 I > 0
    bool stabilizable = false; // (A_tilde_beta, B) stabilizable
    bool lyapunov_found = false;
    Mat stabilizing_gain;      // Theta with A_beta + B Theta mean-square stable
    std::string details;

    bool h1() const { return h1_q && h1_qqbar; }
};

LQRAssumptionReport check_lqr_assumptions(const LQRModelSpec& spec);

}  // namespace mfac

#endif
