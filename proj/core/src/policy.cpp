#include "mfac/policy.hpp"

#include <cmath>
#include <numbers>

namespace mfac {

PolicyFeatureMap PolicyFeatureMap::systemic_risk(int d) {
    PolicyFeatureMap f;
    f.f0 = Vec::Zero(2 * d);
    f.Fs = Mat::Zero(2 * d, d);
    f.Fm = Mat::Zero(2 * d, d);
    f.Fs.topRows(d) = Mat::Identity(d, d);
    f.Fm.topRows(d) = -Mat::Identity(d, d);
    f.Fm.bottomRows(d) = Mat::Identity(d, d);
    return f;
}

PolicyFeatureMap PolicyFeatureMap::crowd(const Vec& target) {
    PolicyFeatureMap f;
    f.f0 = Vec::Zero(7);
    f.f0(0) = 1.0;
    f.f0(3) = -target(0);
    f.f0(4) = -target(1);
    f.Fs = Mat::Zero(7, 2);
    f.Fs(1, 0) = 1.0;
    f.Fs(2, 1) = 1.0;
    f.Fs(3, 0) = 1.0;
    f.Fs(4, 1) = 1.0;
    f.Fm = Mat::Zero(7, 2);
    f.Fm(5, 0) = 1.0;
    f.Fm(6, 1) = 1.0;
    return f;
}

PolicyFeatureMap PolicyFeatureMap::affine_full(int d) {
    PolicyFeatureMap f;
    f.f0 = Vec::Zero(1 + 2 * d);
    f.f0(0) = 1.0;
    f.Fs = Mat::Zero(1 + 2 * d, d);
    f.Fs.block(1, 0, d, d) = Mat::Identity(d, d);
    f.Fm = Mat::Zero(1 + 2 * d, d);
    f.Fm.block(1 + d, 0, d, d) = Mat::Identity(d, d);
    return f;
}

GaussianFeedbackPolicy::GaussianFeedbackPolicy(Mat weights, Mat sigma0,
                                               PolicyFeatureMap features)
    : W_(std::move(weights)), sigma0_(std::move(sigma0)), features_(std::move(features)) {
    if (W_.cols() != features_.dim())
        throw ParameterError("policy: weight columns must match feature dimension");
    Eigen::LLT<Mat> llt(sigma0_);
    if (llt.info() != Eigen::Success)
        throw ParameterError("policy: covariance must be symmetric positive definite");
    chol_ = llt.matrixL();
    const int m = static_cast<int>(sigma0_.rows());
    sigma0_inv_ = llt.solve(Mat::Identity(m, m));
    double log_det = 0.0;
    for (int i = 0; i < m; ++i) log_det += 2.0 * std::log(chol_(i, i));
    log_norm_const_ = -0.5 * (m * std::log(2.0 * std::numbers::pi) + log_det);
}

Vec GaussianFeedbackPolicy::mean_action(const Vec& s, const EmpiricalMeasure& mu) const {
    return W_ * features_.eval(s, mu);
}

Vec GaussianFeedbackPolicy::mean_action_reduced(const Vec& s, const Vec& mubar) const {
    return W_ * features_.eval(s, mubar);
}

double GaussianFeedbackPolicy::log_density_reduced(const Vec& a, const Vec& s,
                                                   const Vec& mubar) const {
    const Vec r = a - mean_action_reduced(s, mubar);
    return log_norm_const_ - 0.5 * r.dot(sigma0_inv_ * r);
}

double GaussianFeedbackPolicy::log_density(const Vec& a, const Vec& s,
                                           const EmpiricalMeasure& mu) const {
    return log_density_reduced(a, s, mean(mu));
}

Mat GaussianFeedbackPolicy::score_reduced(const Vec& a, const Vec& s,
                                          const Vec& mubar) const {
    const Vec f = features_.eval(s, mubar);
    return sigma0_inv_ * (a - W_ * f) * f.transpose();
}

Mat GaussianFeedbackPolicy::score(const Vec& a, const Vec& s,
                                  const EmpiricalMeasure& mu) const {
    return score_reduced(a, s, mean(mu));
}

double GaussianFeedbackPolicy::entropy() const {
    const int m = static_cast<int>(sigma0_.rows());
    double log_det = 0.0;
    for (int i = 0; i < m; ++i) log_det += 2.0 * std::log(chol_(i, i));
    return 0.5 * (m * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det);
}

Vec GaussianFeedbackPolicy::sample_action_reduced(const Vec& s, const Vec& mubar,
                                                  RngStream& rng) const {
    return mean_action_reduced(s, mubar) + chol_ * rng.normal_vec(action_dim());
}

Vec GaussianFeedbackPolicy::sample_action(const Vec& s, const EmpiricalMeasure& mu,
                                          RngStream& rng) const {
    return sample_action_reduced(s, mean(mu), rng);
}

AveragedCoefficients averaged_coefficients(const GaussianFeedbackPolicy& pol,
                                           const ModelSpec& model, const Vec& s,
                                           const EmpiricalMeasure& mu, int mc_actions,
                                           RngStream* rng) {
    AveragedCoefficients out;
    const Vec ma = pol.mean_action(s, mu);
    if (model.affine_in_action) {
        out.b = model.drift(s, mu, ma);
        if (model.diffusion_action_free) {
            const Mat sig = model.diffusion(s, mu, ma);
            out.Sigma = sig * sig.transpose();
        } else {
            // sigma affine in a: sigma(a) = sigma(0) + F a columnwise.
            const Vec zero = Vec::Zero(model.action_dim);
            const Mat sig0 = model.diffusion(s, mu, zero);
            // Recover the linear part column by column.
            const int d = model.state_dim;
            const int n = static_cast<int>(sig0.cols());
            std::vector<Mat> lin(model.action_dim);
            for (int j = 0; j < model.action_dim; ++j) {
                Vec e = Vec::Zero(model.action_dim);
                e(j) = 1.0;
                lin[j] = model.diffusion(s, mu, e) - sig0;
            }
            const Mat sig_mean = model.diffusion(s, mu, ma);
            Mat Sigma = sig_mean * sig_mean.transpose();
            // Add Cov over actions: sum_{jk} Sigma0_{jk} Fj Fk'.
            const Mat& cov = pol.covariance();
            for (int j = 0; j < model.action_dim; ++j)
                for (int k = 0; k < model.action_dim; ++k)
                    Sigma += cov(j, k) * lin[j] * lin[k].transpose();
            (void)d;
            (void)n;
            out.Sigma = Sigma;
        }
    } else {
        if (rng == nullptr) throw ParameterError("averaged_coefficients: rng required for MC path");
        Vec b = Vec::Zero(model.state_dim);
        Mat Sigma = Mat::Zero(model.state_dim, model.state_dim);
        for (int i = 0; i < mc_actions; ++i) {
            const Vec a = pol.sample_action(s, mu, *rng);
            b += model.drift(s, mu, a);
            const Mat sig = model.diffusion(s, mu, a);
            Sigma += sig * sig.transpose();
        }
        out.b = b / mc_actions;
        out.Sigma = Sigma / mc_actions;
    }
    // Symmetrize; clamp tiny negative eigenvalues arising from round-off.
    Mat sym = 0.5 * (out.Sigma + out.Sigma.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    if (es.eigenvalues().minCoeff() < -1e-10) {
        const Vec ev = es.eigenvalues().cwiseMax(0.0);
        sym = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
        out.clamped = true;
    }
    out.Sigma = sym;
    return out;
}

double regularized_reward(const ModelSpec& model, const GaussianFeedbackPolicy& pol,
                          const Vec& s, const EmpiricalMeasure& mu, double lambda,
                          int mc_actions, RngStream* rng) {
    const double ent = lambda * pol.entropy();
    if (model.reward_expectation)
        return model.reward_expectation(s, mu, pol.mean_action(s, mu), pol.covariance()) +
               ent;
    if (rng == nullptr)
        throw ParameterError("regularized_reward: rng required for MC path");
    double acc = 0.0;
    for (int i = 0; i < mc_actions; ++i)
        acc += model.reward(s, mu, pol.sample_action(s, mu, *rng));
    return acc / mc_actions + ent;
}

}  // namespace mfac
