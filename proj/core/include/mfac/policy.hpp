#ifndef MFAC_POLICY_HPP
#define MFAC_POLICY_HPP

#include "mfac/measures.hpp"
#include "mfac/models.hpp"
#include "mfac/rng.hpp"

namespace mfac {

// Affine feature map f(s, mu) = f0 + Fs s + Fm mean(mu).
struct PolicyFeatureMap {
    Vec f0;
    Mat Fs;  // d_f x d
    Mat Fm;  // d_f x d

    int dim() const { return static_cast<int>(f0.size()); }

    Vec eval(const Vec& s, const Vec& mubar) const { return f0 + Fs * s + Fm * mubar; }
    Vec eval(const Vec& s, const EmpiricalMeasure& mu) const { return eval(s, mean(mu)); }

    // f = (s - mubar, mubar), the systemic-risk actor features.
    static PolicyFeatureMap systemic_risk(int d);
    // f = (1, s1, s2, s1 - t1, s2 - t2, mubar1, mubar2).
    static PolicyFeatureMap crowd(const Vec& target);
    // f = (1, s, mubar), used by the Riccati-optimal actor.
    static PolicyFeatureMap affine_full(int d);
};

// Randomized Gaussian feedback policy N(W f(s, mu), Sigma0) with fixed,
// state-independent covariance.
class GaussianFeedbackPolicy {
  public:
    GaussianFeedbackPolicy(Mat weights, Mat sigma0, PolicyFeatureMap features);

    const Mat& weights() const { return W_; }
    const Mat& covariance() const { return sigma0_; }
    const Mat& covariance_cholesky() const { return chol_; }
    const Mat& covariance_inverse() const { return sigma0_inv_; }
    const PolicyFeatureMap& features() const { return features_; }
    int action_dim() const { return static_cast<int>(W_.rows()); }

    GaussianFeedbackPolicy with_weights(Mat weights) const {
        return GaussianFeedbackPolicy(std::move(weights), sigma0_, features_);
    }

    Vec mean_action(const Vec& s, const EmpiricalMeasure& mu) const;
    Vec mean_action_reduced(const Vec& s, const Vec& mubar) const;

    double log_density(const Vec& a, const Vec& s, const EmpiricalMeasure& mu) const;
    double log_density_reduced(const Vec& a, const Vec& s, const Vec& mubar) const;

    // Sigma0^-1 (a - W f) f', the gradient of log density in W.
    Mat score(const Vec& a, const Vec& s, const EmpiricalMeasure& mu) const;
    Mat score_reduced(const Vec& a, const Vec& s, const Vec& mubar) const;

    double entropy() const;

    Vec sample_action(const Vec& s, const EmpiricalMeasure& mu, RngStream& rng) const;
    Vec sample_action_reduced(const Vec& s, const Vec& mubar, RngStream& rng) const;

  private:
    Mat W_;
    Mat sigma0_, chol_, sigma0_inv_;
    double log_norm_const_;  // -1/2 log det(2 pi Sigma0)
    PolicyFeatureMap features_;
};

struct AveragedCoefficients {
    Vec b;      // policy-averaged drift
    Mat Sigma;  // policy-averaged squared diffusion
    bool clamped = false;  // Sigma symmetrized/clamped to PSD
};

// b^pi = int b dpi, Sigma^pi = int sigma sigma' dpi; closed form for models
// affine in the action, Monte Carlo with `mc_actions` samples otherwise.
AveragedCoefficients averaged_coefficients(const GaussianFeedbackPolicy& pol,
                                           const ModelSpec& model, const Vec& s,
                                           const EmpiricalMeasure& mu,
                                           int mc_actions = 64,
                                           RngStream* rng = nullptr);

// int r dpi + lambda H(pi); closed form when the model provides
// reward_expectation, Monte Carlo otherwise.
double regularized_reward(const ModelSpec& model, const GaussianFeedbackPolicy& pol,
                          const Vec& s, const EmpiricalMeasure& mu, double lambda,
                          int mc_actions = 64, RngStream* rng = nullptr);

}  // namespace mfac

#endif
