#include <doctest.h>

#include <cmath>

#include "mfac/parallel.hpp"
#include "mfac/simulate.hpp"

using namespace mfac;

namespace {

GaussianFeedbackPolicy scalar_policy(double w1, double w2, double var = 0.2) {
    Mat w(1, 2);
    w << w1, w2;
    return {w, var * Mat::Identity(1, 1), PolicyFeatureMap::systemic_risk(1)};
}

InitialCondition scalar_init(double rep_mean, double rep_var, double pop_mean,
                             bool mean_only = true) {
    InitialCondition init;
    init.rep_mean = Vec::Constant(1, rep_mean);
    init.rep_cov = Mat::Constant(1, 1, rep_var);
    init.pop_mean = Vec::Constant(1, pop_mean);
    init.pop_cov = Mat::Zero(1, 1);
    init.mean_only = mean_only;
    return init;
}

// Deterministic decoupled scalar model ds = -s dt, no noise, reward -s^2.
ModelSpec decay_model() {
    ModelSpec m;
    m.state_dim = 1;
    m.action_dim = 1;
    m.noise_dim = 1;
    m.drift = [](const Vec& x, const EmpiricalMeasure&, const Vec&) -> Vec { return -x; };
    m.diffusion = [](const Vec&, const EmpiricalMeasure&, const Vec&) -> Mat {
        return Mat::Zero(1, 1);
    };
    m.reward = [](const Vec& x, const EmpiricalMeasure&, const Vec&) {
        return -x.squaredNorm();
    };
    m.reward_expectation = [](const Vec& x, const EmpiricalMeasure&, const Vec&,
                              const Mat&) { return -x.squaredNorm(); };
    m.affine_in_action = true;
    m.mean_field_via_mean_only = true;
    m.diffusion_action_free = true;
    return m;
}

}  // namespace

TEST_CASE("euler scheme on a deterministic linear flow") {
    const ModelSpec model = decay_model();
    const GaussianFeedbackPolicy pol = scalar_policy(0.0, 0.0);
    const TrajectoryBatch batch =
        simulate_euler(model, pol, scalar_init(1.0, 0.0, 0.0), 1.0, 0.05, 2, RngTree(1));
    REQUIRE(batch.size() == 2);
    REQUIRE(batch.steps() == 20);
    CHECK(batch.trajectories[0].times(20) == doctest::Approx(1.0));
    // dt = 0.05 keeps the global Euler error below 1e-2 on [0, 1].
    CHECK(batch.trajectories[0].states(20, 0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(0.03));
    CHECK(std::abs(batch.trajectories[0].states(20, 0) - std::exp(-1.0)) < 0.01);
    // Both trajectories are identical under deterministic dynamics.
    CHECK(batch.trajectories[1].states(20, 0) ==
          doctest::Approx(batch.trajectories[0].states(20, 0)));
}

TEST_CASE("invalid simulation parameters are rejected") {
    const ModelSpec model = decay_model();
    const GaussianFeedbackPolicy pol = scalar_policy(0.0, 0.0);
    const InitialCondition init = scalar_init(1.0, 0.0, 0.0);
    CHECK_THROWS_AS(simulate_euler(model, pol, init, -1.0, 0.05, 1, RngTree(1)),
                    ParameterError);
    CHECK_THROWS_AS(simulate_euler(model, pol, init, 1.0, 0.0, 1, RngTree(1)),
                    ParameterError);
    CHECK_THROWS_AS(simulate_euler(model, pol, init, 1.0, 0.05, 0, RngTree(1)),
                    ParameterError);
}

TEST_CASE("exact transition for the benchmark under the zero policy") {
    const ModelSpec model = LQRModelSpec::systemic_risk().to_model();
    const GaussianFeedbackPolicy pol = scalar_policy(0.0, 0.0);
    const ExactTransition t = build_exact_transition(model, pol, 1.0);
    CHECK(t.Phi(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(t.Phi(0, 1) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(t.Phi(1, 0) == doctest::Approx(0.0));
    CHECK(t.Phi(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.c.norm() == doctest::Approx(0.0));
    // Step covariance of the OU coordinate: gamma^2 (1 - e^{-2}) / 2.
    const Mat cov = t.noise_l * t.noise_l.transpose();
    CHECK(cov(0, 0) == doctest::Approx(0.10808308959542341).epsilon(1e-10));
    CHECK(cov(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("exact sampler reproduces OU moments") {
    const ModelSpec model = LQRModelSpec::systemic_risk().to_model();
    const GaussianFeedbackPolicy pol = scalar_policy(0.0, 0.0);
    // mubar0 = 0 decouples: ds = -s dt + 0.5 dW, s0 = 1.
    const TrajectoryBatch batch = simulate_affine_exact(
        model, pol, scalar_init(1.0, 0.0, 0.0), 1.0, 0.25, 4000, RngTree(31));
    const int K = batch.steps();
    double m1 = 0.0, m2 = 0.0;
    for (const Trajectory& tr : batch.trajectories) {
        m1 += tr.states(K, 0);
        m2 += tr.states(K, 0) * tr.states(K, 0);
    }
    m1 /= batch.size();
    m2 = m2 / batch.size() - m1 * m1;
    const double se_mean = std::sqrt(0.10808308959542341 / batch.size());
    CHECK(std::abs(m1 - std::exp(-1.0)) < 3.0 * se_mean);
    CHECK(m2 == doctest::Approx(0.10808308959542341).epsilon(0.1));
}

TEST_CASE("euler mean bias halves with the step size") {
    LQRModelSpec spec = LQRModelSpec::systemic_risk();
    spec.gamma = Vec::Zero(1);  // deterministic paths isolate the drift bias
    const ModelSpec model = spec.to_model();
    Mat w(1, 2);
    w << 0.0, 0.0;
    const GaussianFeedbackPolicy pol{w, 1e-12 * Mat::Identity(1, 1),
                                     PolicyFeatureMap::systemic_risk(1)};
    const InitialCondition init = scalar_init(1.0, 0.0, 0.0);
    auto terminal = [&](double dt) {
        const TrajectoryBatch b = simulate_euler(model, pol, init, 1.0, dt, 1, RngTree(5));
        return b.trajectories[0].states(b.steps(), 0);
    };
    const double e1 = std::abs(terminal(0.1) - std::exp(-1.0));
    const double e2 = std::abs(terminal(0.05) - std::exp(-1.0));
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("overflow aborts with the offending trajectory and step") {
    ModelSpec model = decay_model();
    model.drift = [](const Vec& x, const EmpiricalMeasure&, const Vec&) -> Vec {
        return 1e9 * Vec::Ones(1);
    };
    const GaussianFeedbackPolicy pol = scalar_policy(0.0, 0.0);
    try {
        simulate_euler(model, pol, scalar_init(0.0, 0.0, 0.0), 1.0, 0.05, 1, RngTree(2));
        FAIL("expected overflow");
    } catch (const EvaluationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("overflow") != std::string::npos);
        CHECK(msg.find("trajectory 0") != std::string::npos);
        CHECK(msg.find("step") != std::string::npos);
    }
}

TEST_CASE("simulation output does not depend on the thread count") {
    const ModelSpec model = LQRModelSpec::systemic_risk().to_model();
    const GaussianFeedbackPolicy pol = scalar_policy(-0.5, -1.5);
    InitialCondition init = scalar_init(1.0, 1.0, 1.0, false);
    init.n_particles = 8;
    init.pop_cov = 0.25 * Mat::Identity(1, 1);

    set_thread_count(1);
    const TrajectoryBatch b1 = simulate_euler(model, pol, init, 2.0, 0.05, 6, RngTree(9));
    set_thread_count(4);
    const TrajectoryBatch b4 = simulate_euler(model, pol, init, 2.0, 0.05, 6, RngTree(9));
    set_thread_count(1);
    for (int l = 0; l < 6; ++l) {
        CHECK((b1.trajectories[l].states - b4.trajectories[l].states).norm() == 0.0);
        for (int k = 0; k <= b1.steps(); ++k)
            CHECK((b1.trajectories[l].clouds[k] - b4.trajectories[l].clouds[k]).norm() ==
                  0.0);
    }
}

TEST_CASE("occupancy weights") {
    const ModelSpec model = decay_model();
    const GaussianFeedbackPolicy pol = scalar_policy(0.0, 0.0);
    const TrajectoryBatch batch =
        simulate_euler(model, pol, scalar_init(1.0, 0.0, 0.0), 2.0, 0.05, 4, RngTree(3));
    const OccupancySampleSet disc =
        occupancy_samples(batch, 1.0, OccupancyWeighting::discounted);
    const int K = batch.steps();
    REQUIRE(disc.size() == 4 * K);
    // Sample (l, k) has weight (1/L) e^{-beta t_k} dt; t = 1 is index k = 20.
    CHECK(disc.weights(20) == doctest::Approx(0.25 * std::exp(-1.0) * 0.05).epsilon(1e-12));
    CHECK(disc.weights(0) == doctest::Approx(0.25 * 0.05));
    // Total mass is the Riemann sum of e^{-beta t} dt over [0, T).
    double riemann = 0.0;
    for (int k = 0; k < K; ++k) riemann += std::exp(-0.05 * k) * 0.05;
    CHECK(disc.weights.sum() == doctest::Approx(riemann).epsilon(1e-12));
    CHECK(std::abs(disc.weights.sum() - (1.0 - std::exp(-2.0))) < 0.05);

    const OccupancySampleSet uni = occupancy_samples(batch, 1.0, OccupancyWeighting::uniform);
    CHECK(uni.weights.sum() == doctest::Approx(1.0));
    CHECK(uni.weights.minCoeff() == doctest::Approx(uni.weights.maxCoeff()));
}

TEST_CASE("value of a constant-reward model") {
    ModelSpec model = decay_model();
    model.reward_expectation = [](const Vec&, const EmpiricalMeasure&, const Vec&,
                                  const Mat&) { return -2.0; };
    const GaussianFeedbackPolicy pol = scalar_policy(0.0, 0.0);
    const TrajectoryBatch batch =
        simulate_euler(model, pol, scalar_init(1.0, 0.0, 0.0), 4.0, 0.05, 3, RngTree(4));
    double riemann = 0.0;
    for (int k = 0; k < batch.steps(); ++k) riemann += std::exp(-0.5 * 0.05 * k) * 0.05;
    CHECK(estimate_value(model, pol, batch, 0.0, 0.5) == doctest::Approx(-2.0 * riemann));
}

TEST_CASE("monte carlo value of the optimal policy matches the closed form") {
    const LQRModelSpec spec = LQRModelSpec::systemic_risk();
    const ModelSpec model = spec.to_model();
    // Optimal feedback over (s - mubar, mubar) with the optimal exploration noise.
    const GaussianFeedbackPolicy pol =
        scalar_policy(-0.5615528128088303, -1.5615528128088303, 0.2);
    InitialCondition init = scalar_init(1.0, 1.0, 1.0);
    // Small dt keeps the left-Riemann discretization bias of the discounted
    // integral below the statistical tolerance.
    const ValueEstimate est = estimate_value_mc(model, pol, init, 8.0, 0.01, 600, 0.2, 1.0,
                                                RngTree(17), true);
    // E V*(s0, 1) = -(K Var s0 + Lambda + R).
    const double expect = -(0.28077640640441515 + 0.7807764064044151 +
                            0.04735018620357928);
    CHECK(std::abs(est.value - expect) < std::max(0.05, 4.0 * est.std_err));
    CHECK(est.std_err > 0.0);
    CHECK(est.std_err < 0.1);
}
