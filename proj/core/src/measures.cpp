#include "mfac/measures.hpp"

#include <cmath>

namespace mfac {

void EmpiricalMeasure::validate() const {
    if (particles.rows() < 1) throw ParameterError("EmpiricalMeasure: need at least one particle");
    if (weights.size() != particles.rows())
        throw ParameterError("EmpiricalMeasure: weight/particle count mismatch");
    if (!particles.allFinite()) throw ParameterError("EmpiricalMeasure: non-finite coordinate");
    if ((weights.array() < 0.0).any()) throw ParameterError("EmpiricalMeasure: negative weight");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
        throw ParameterError("EmpiricalMeasure: weights do not sum to 1");
}

EmpiricalMeasure EmpiricalMeasure::uniform(Mat pts) {
    EmpiricalMeasure mu;
    const int n = static_cast<int>(pts.rows());
    mu.particles = std::move(pts);
    mu.weights = Vec::Constant(n, 1.0 / n);
    return mu;
}

EmpiricalMeasure EmpiricalMeasure::dirac(const Vec& x) {
    EmpiricalMeasure mu;
    mu.particles = x.transpose();
    mu.weights = Vec::Ones(1);
    return mu;
}

Vec mean(const EmpiricalMeasure& mu) { return mu.particles.transpose() * mu.weights; }

double second_moment(const EmpiricalMeasure& mu) {
    return mu.particles.rowwise().squaredNorm().dot(mu.weights);
}

FeatureFamily FeatureFamily::coordinates(int d) {
    FeatureFamily fam;
    for (int i = 0; i < d; ++i) {
        ScalarFeature f;
        f.name = "x" + std::to_string(i);
        f.value = [i](const Vec& x) { return x(i); };
        f.gradient = [i](const Vec& x, Vec& g) {
            g.setZero(x.size());
            g(i) = 1.0;
        };
        f.hessian = [](const Vec& x, Mat& h) { h.setZero(x.size(), x.size()); };
        fam.features.push_back(std::move(f));
    }
    return fam;
}

FeatureFamily FeatureFamily::gaussian_bumps(const std::vector<Vec>& centers, double h,
                                            double clip_lo, double clip_hi, bool clip) {
    if (h <= 0.0) throw ParameterError("gaussian_bumps: bandwidth must be positive");
    FeatureFamily fam;
    const double inv_h2 = 1.0 / (h * h);
    int idx = 0;
    for (const Vec& c : centers) {
        ScalarFeature f;
        f.name = "bump" + std::to_string(idx++);
        auto clamp = [clip, clip_lo, clip_hi](const Vec& x) -> Vec {
            if (!clip) return x;
            return x.cwiseMax(clip_lo).cwiseMin(clip_hi);
        };
        f.value = [c, inv_h2, clamp](const Vec& x) {
            const Vec y = clamp(x);
            return std::exp(-0.5 * (y - c).squaredNorm() * inv_h2);
        };
        f.gradient = [c, inv_h2, clamp, clip, clip_lo, clip_hi](const Vec& x, Vec& g) {
            const Vec y = clamp(x);
            const double v = std::exp(-0.5 * (y - c).squaredNorm() * inv_h2);
            g = -inv_h2 * v * (y - c);
            if (clip)
                for (int i = 0; i < x.size(); ++i)
                    if (x(i) < clip_lo || x(i) > clip_hi) g(i) = 0.0;
        };
        f.hessian = [c, inv_h2, clamp, clip, clip_lo, clip_hi](const Vec& x, Mat& hss) {
            const Vec y = clamp(x);
            const double v = std::exp(-0.5 * (y - c).squaredNorm() * inv_h2);
            const Vec g = -inv_h2 * (y - c);
            hss = v * (g * g.transpose() - inv_h2 * Mat::Identity(x.size(), x.size()));
            if (clip)
                for (int i = 0; i < x.size(); ++i)
                    if (x(i) < clip_lo || x(i) > clip_hi) {
                        hss.row(i).setZero();
                        hss.col(i).setZero();
                    }
        };
        fam.features.push_back(std::move(f));
    }
    return fam;
}

Vec moment_map(const EmpiricalMeasure& mu, const FeatureFamily& fam) {
    const int k = fam.size();
    Vec m = Vec::Zero(k);
    for (int i = 0; i < k; ++i) {
        double acc = 0.0;
        for (int j = 0; j < mu.size(); ++j) {
            const double v = fam.features[i].value(mu.particles.row(j).transpose());
            if (!std::isfinite(v))
                throw EvaluationError("moment_map: non-finite value of feature " +
                                      std::to_string(i));
            acc += mu.weights(j) * v;
        }
        m(i) = acc;
    }
    return m;
}

double kernel_convolution(const EmpiricalMeasure& mu, const Vec& s, double eta) {
    if (eta <= 0.0) throw ParameterError("kernel_convolution: eta must be positive");
    const double inv = 1.0 / (2.0 * eta * eta);
    double acc = 0.0;
    for (int j = 0; j < mu.size(); ++j)
        acc += mu.weights(j) *
               std::exp(-(s - mu.particles.row(j).transpose()).squaredNorm() * inv);
    return acc;
}

}  // namespace mfac
