#ifndef MFAC_CRITIC_HPP
#define MFAC_CRITIC_HPP

#include "mfac/cylindrical.hpp"
#include "mfac/simulate.hpp"

namespace mfac {

// Weighted Galerkin system A_ji = E[phi_j (beta phi_i - L phi_i)],
// b_j = E[phi_j r_lambda] over an occupancy sample set.
struct GalerkinSystem {
    Mat A;
    Vec b;
    int sample_count = 0;
    double ridge = 0.0;
};

struct CriticSolution {
    Vec theta;
    double cond_estimate = 0.0;  // 1 / rcond of the regularized matrix
    double residual = 0.0;       // |(A + ridge I) theta - b|
};

GalerkinSystem assemble_galerkin(const CylindricalBasis& basis,
                                 const GaussianFeedbackPolicy& policy,
                                 const ModelSpec& model, const OccupancySampleSet& samples,
                                 double lambda, double beta, double ridge,
                                 const RngTree* rng = nullptr);

CriticSolution solve_galerkin(const GalerkinSystem& system);

// V(s, mu) = sum_i theta_i phi_i(s, mu), with all derivatives combined.
CylindricalEval critic_eval(const CylindricalBasis& basis, const Vec& theta, const Vec& s,
                            const EmpiricalMeasure& mu);

// r_lambda^pi + L V - beta V at one point of the lifted space.
double hjb_residual(const CylindricalBasis& basis, const Vec& theta,
                    const GaussianFeedbackPolicy& policy, const ModelSpec& model,
                    const Vec& s, const EmpiricalMeasure& mu, double lambda, double beta);

}  // namespace mfac

#endif
