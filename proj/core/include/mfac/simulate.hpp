#ifndef MFAC_SIMULATE_HPP
#define MFAC_SIMULATE_HPP

#include <vector>

#include "mfac/models.hpp"
#include "mfac/policy.hpp"
#include "mfac/rng.hpp"

namespace mfac {

// Gaussian initial law for the representative and the population particles.
// With mean_only set, the population is collapsed to its mean path.
struct InitialCondition {
    Vec rep_mean;
    Mat rep_cov;
    Vec pop_mean;
    Mat pop_cov;
    int n_particles = 100;
    bool mean_only = false;
};

struct Trajectory {
    Vec times;                // K+1
    Mat states;               // (K+1) x d, representative path
    std::vector<Mat> clouds;  // K+1 clouds, each N_p x d (1 x d if mean-only)
};

struct TrajectoryBatch {
    std::vector<Trajectory> trajectories;
    double dt = 0.0;
    bool mean_only = false;

    int size() const { return static_cast<int>(trajectories.size()); }
    int steps() const {
        return trajectories.empty()
                   ? 0
                   : static_cast<int>(trajectories.front().times.size()) - 1;
    }
};

// Euler-Maruyama under the policy-averaged coefficients: representative and
// every particle move with drift b^pi and diffusion Sigma^pi^{1/2}, each with
// its own Brownian increment. States beyond the overflow bound abort with the
// offending trajectory and step.
TrajectoryBatch simulate_euler(const ModelSpec& model, const GaussianFeedbackPolicy& policy,
                               const InitialCondition& init, double horizon, double dt,
                               int n_trajectories, const RngTree& rng);

// Precomputed one-step law of the joint (s, mubar) closed-loop linear system,
//   z_{k+1} = Phi z_k + c + L eps,  eps ~ N(0, I),
// with Phi = e^{M dt} and the covariance from the Van Loan block exponential.
struct ExactTransition {
    Mat Phi;       // 2d x 2d
    Vec c;         // 2d
    Mat noise_l;   // 2d x 2d, Cholesky factor of the step covariance
    int state_dim = 0;
};

ExactTransition build_exact_transition(const ModelSpec& model,
                                       const GaussianFeedbackPolicy& policy, double dt);

// Exact Gaussian transitions; requires affine dynamics and the mean-only
// population closure.
TrajectoryBatch simulate_affine_exact(const ModelSpec& model,
                                      const GaussianFeedbackPolicy& policy,
                                      const InitialCondition& init, double horizon,
                                      double dt, int n_trajectories, const RngTree& rng);

enum class OccupancyWeighting { discounted, uniform };

// Flattened (state, measure) pairs drawn from a batch, with weights that
// either discount in time, w = (1/L) e^{-beta t} dt, or are uniform 1/N_D.
struct OccupancySampleSet {
    std::vector<Vec> states;
    std::vector<EmpiricalMeasure> measures;
    Vec weights;

    int size() const { return static_cast<int>(states.size()); }
};

OccupancySampleSet occupancy_samples(const TrajectoryBatch& batch, double beta,
                                     OccupancyWeighting weighting);

// Monte Carlo value estimate (1/L) sum_l sum_k e^{-beta t_k} r_lambda^pi dt.
double estimate_value(const ModelSpec& model, const GaussianFeedbackPolicy& policy,
                      const TrajectoryBatch& batch, double lambda, double beta);

struct ValueEstimate {
    double value = 0.0;
    double std_err = 0.0;
};

// Fresh-simulation variant with a cross-trajectory error bar.
ValueEstimate estimate_value_mc(const ModelSpec& model,
                                const GaussianFeedbackPolicy& policy,
                                const InitialCondition& init, double horizon, double dt,
                                int n_trajectories, double lambda, double beta,
                                const RngTree& rng, bool exact);

}  // namespace mfac

#endif
