#ifndef MFAC_CYLINDRICAL_HPP
#define MFAC_CYLINDRICAL_HPP

#include <memory>
#include <vector>

#include "mfac/measures.hpp"
#include "mfac/policy.hpp"

namespace mfac {

// F(s, mu) = Psi(s, m(mu)) with hand-coded outer derivatives; the Lions
// derivative follows from the chain rule through the moment map.
struct CylindricalFunction {
    std::shared_ptr<const FeatureFamily> features;
    std::function<double(const Vec& s, const Vec& m)> psi;
    std::function<void(const Vec& s, const Vec& m, Vec&)> grad_s;
    std::function<void(const Vec& s, const Vec& m, Mat&)> hess_ss;
    std::function<void(const Vec& s, const Vec& m, Vec&)> dpsi_dm;  // length k
};

struct CylindricalEval {
    double value = 0.0;
    Vec grad_s;
    Mat hess_ss;
    Vec dm;  // partial Psi / partial m_i at (s, m(mu))
    std::shared_ptr<const FeatureFamily> features;

    // partial_mu F(s, mu)(xi) = sum_i dm_i grad phi_i(xi)
    Vec lions(const Vec& xi) const;
    // D_xi partial_mu F(s, mu)(xi) = sum_i dm_i D^2 phi_i(xi)
    Mat lions_jac(const Vec& xi) const;
};

CylindricalEval eval_with_derivatives(const CylindricalFunction& f, const Vec& s,
                                      const EmpiricalMeasure& mu);

// Generator of the coupled representative/population dynamics applied to F,
// with the measure integral taken as the exact weighted sum over particles.
double apply_generator(const CylindricalFunction& f, const GaussianFeedbackPolicy& policy,
                       const ModelSpec& model, const Vec& s, const EmpiricalMeasure& mu);

struct CylindricalBasis {
    std::shared_ptr<const FeatureFamily> features;
    std::vector<CylindricalFunction> fns;

    int size() const { return static_cast<int>(fns.size()); }

    // {1, mubar^2, (s - mubar)^2} over the coordinate feature, d = 1.
    static CylindricalBasis systemic_risk_3();
    // {1, mubar^2, (s - mubar) mubar, (s - mubar)^2}; closed under the LQR
    // generator, so the associated value function is represented exactly.
    static CylindricalBasis systemic_risk_4();
    // State RBFs psi_m(s) times (1, kernel embeddings u_j(mu)); centers on a
    // square grid, inputs clamped to the grid box for feature evaluation.
    static CylindricalBasis rbf_grid(double lo, double hi, int points_per_axis,
                                     double state_bandwidth, double measure_bandwidth);
};

}  // namespace mfac

#endif
