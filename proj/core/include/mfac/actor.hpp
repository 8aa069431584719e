#ifndef MFAC_ACTOR_HPP
#define MFAC_ACTOR_HPP

#include <functional>
#include <optional>
#include <vector>

#include "mfac/critic.hpp"

namespace mfac {

// Representative advantage r - lambda log pi + b . grad V + 1/2 sigma sigma' :
// D^2 V at a concrete action.
double q_rep(const CylindricalEval& v, const GaussianFeedbackPolicy& policy,
             const ModelSpec& model, const Vec& s, const EmpiricalMeasure& mu,
             const Vec& a, double lambda);

// Population advantage b(xi) . d_mu V(xi) + 1/2 sigma sigma'(xi) : D_xi d_mu
// V(xi); v must have been evaluated at the (s, mu) the measure derivative
// refers to.
double q_pop(const CylindricalEval& v, const ModelSpec& model, const Vec& xi,
             const EmpiricalMeasure& mu, const Vec& a);

struct GradientEstimate {
    Mat grad;      // total, (1/beta) (rep + pop)
    Mat rep_part;  // representative term, already scaled by 1/beta
    Mat pop_part;  // population term, already scaled by 1/beta
    double std_err = 0.0;  // half-sample split estimate of the MC error
};

// Two-term score-function gradient of the entropy-regularized value in the
// policy weights, estimated over an occupancy sample set. Action draws use
// per-sample keyed streams, so the result is independent of evaluation order.
GradientEstimate policy_gradient(const CylindricalBasis& basis, const Vec& theta,
                                 const GaussianFeedbackPolicy& policy,
                                 const ModelSpec& model, const OccupancySampleSet& samples,
                                 double lambda, double beta, int action_samples,
                                 int xi_samples, const RngTree& rng);

struct GateauxEstimate {
    double derivative = 0.0;
    double score_mean = 0.0;  // | E_a psi |, must vanish up to MC error
};

// Directional derivative along the perturbation psi = <v, score>; uses the
// same keyed streams as policy_gradient, so <grad, v> matches exactly.
GateauxEstimate gateaux_gradient(const CylindricalBasis& basis, const Vec& theta,
                                 const GaussianFeedbackPolicy& policy,
                                 const ModelSpec& model, const OccupancySampleSet& samples,
                                 double lambda, double beta, int action_samples,
                                 int xi_samples, const RngTree& rng, const Mat& direction);

struct TrainingSchedule {
    int iterations = 100;
    double learning_rate = 0.05;
    int n_trajectories = 10;
    double horizon = 8.0;
    double dt = 0.05;
    int action_samples = 64;
    int xi_samples = 64;
    double ridge = 0.0;
    OccupancyWeighting weighting = OccupancyWeighting::discounted;
    double weight_clip = 0.0;  // 0 disables clipping
    bool sqrt_decay = false;   // alpha_k = alpha / sqrt(k + 1)
    bool exact_transitions = false;
};

struct TrainingRecord {
    int iteration = 0;
    Mat weights;  // actor parameters entering the iteration
    Vec theta;    // critic coefficients for those parameters
    double value_estimate = 0.0;
    double grad_norm = 0.0;
    double grad_std_err = 0.0;
    double critic_cond = 0.0;
    double critic_residual = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    GaussianFeedbackPolicy policy;
    Vec theta;  // critic coefficients at the final iterate
    std::vector<TrainingRecord> history;
};

// Actor-critic loop: fresh trajectories, Galerkin critic, one ascent step per
// iteration. The optional callback sees each record as it is produced.
TrainResult train(const ModelSpec& model, const GaussianFeedbackPolicy& initial_policy,
                  const CylindricalBasis& basis, const InitialCondition& init,
                  const TrainingSchedule& schedule, double lambda, double beta,
                  const RngTree& rng,
                  const std::function<void(const TrainingRecord&)>& callback = nullptr);

}  // namespace mfac

#endif
