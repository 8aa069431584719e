#ifndef MFAC_MEASURES_HPP
#define MFAC_MEASURES_HPP

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mfac {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Weighted particle cloud standing in for a probability measure with finite
// second moment. Weights sum to one; uniform clouds come from particle
// systems, non-uniform ones from discounted occupancy measures.
struct EmpiricalMeasure {
    Mat particles;  // N x d
    Vec weights;    // N, nonnegative, sums to 1

    int size() const { return static_cast<int>(particles.rows()); }
    int dim() const { return static_cast<int>(particles.cols()); }

    void validate() const;

    static EmpiricalMeasure uniform(Mat pts);
    static EmpiricalMeasure dirac(const Vec& x);
};

Vec mean(const EmpiricalMeasure& mu);
double second_moment(const EmpiricalMeasure& mu);

// Scalar field on R^d with hand-coded first and second derivatives.
// Derivative evaluators write into preallocated outputs.
struct ScalarFeature {
    std::string name;
    std::function<double(const Vec&)> value;
    std::function<void(const Vec&, Vec&)> gradient;
    std::function<void(const Vec&, Mat&)> hessian;
};

struct FeatureFamily {
    std::vector<ScalarFeature> features;

    int size() const { return static_cast<int>(features.size()); }

    // phi_i(x) = x_i, one per coordinate.
    static FeatureFamily coordinates(int d);
    // Gaussian bumps exp(-|x-c|^2/(2h^2)), optionally evaluated on inputs
    // clamped to [lo, hi] per coordinate (the clamp applies to feature
    // evaluation only).
    static FeatureFamily gaussian_bumps(const std::vector<Vec>& centers, double h,
                                        double clip_lo = 0.0, double clip_hi = 0.0,
                                        bool clip = false);
};

Vec moment_map(const EmpiricalMeasure& mu, const FeatureFamily& fam);

// (K_eta * mu)(s) = sum_i w_i exp(-|s-x_i|^2/(2 eta^2)), in [0,1].
double kernel_convolution(const EmpiricalMeasure& mu, const Vec& s, double eta);

struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace mfac

#endif
