#include <benchmark/benchmark.h>

#include "mfac/actor.hpp"
#include "mfac/critic.hpp"
#include "mfac/riccati.hpp"
#include "mfac/simulate.hpp"

namespace {

mfac::GaussianFeedbackPolicy sysrisk_policy() {
    mfac::Mat w(1, 2);
    w << -0.5, -1.5;
    return {w, 0.2 * mfac::Mat::Identity(1, 1), mfac::PolicyFeatureMap::systemic_risk(1)};
}

mfac::InitialCondition sysrisk_init() {
    mfac::InitialCondition init;
    init.rep_mean = mfac::Vec::Ones(1);
    init.rep_cov = mfac::Mat::Identity(1, 1);
    init.pop_mean = mfac::Vec::Ones(1);
    init.pop_cov = mfac::Mat::Zero(1, 1);
    init.mean_only = true;
    return init;
}

void bm_riccati(benchmark::State& state) {
    const mfac::LQRModelSpec spec = mfac::LQRModelSpec::systemic_risk();
    for (auto _ : state) benchmark::DoNotOptimize(mfac::solve_riccati(spec));
}
BENCHMARK(bm_riccati);

void bm_galerkin_assembly(benchmark::State& state) {
    const mfac::ModelSpec model = mfac::LQRModelSpec::systemic_risk().to_model();
    const mfac::GaussianFeedbackPolicy policy = sysrisk_policy();
    const mfac::CylindricalBasis basis = mfac::CylindricalBasis::systemic_risk_3();
    const mfac::RngTree rng(7);
    const mfac::TrajectoryBatch batch =
        mfac::simulate_euler(model, policy, sysrisk_init(), 8.0, 0.05, 20, rng);
    const mfac::OccupancySampleSet samples =
        mfac::occupancy_samples(batch, 1.0, mfac::OccupancyWeighting::discounted);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            mfac::assemble_galerkin(basis, policy, model, samples, 0.2, 1.0, 0.0));
}
BENCHMARK(bm_galerkin_assembly);

void bm_policy_gradient(benchmark::State& state) {
    const mfac::ModelSpec model = mfac::LQRModelSpec::systemic_risk().to_model();
    const mfac::GaussianFeedbackPolicy policy = sysrisk_policy();
    const mfac::CylindricalBasis basis = mfac::CylindricalBasis::systemic_risk_3();
    const mfac::RngTree rng(7);
    const mfac::TrajectoryBatch batch =
        mfac::simulate_euler(model, policy, sysrisk_init(), 8.0, 0.05, 20, rng);
    const mfac::OccupancySampleSet samples =
        mfac::occupancy_samples(batch, 1.0, mfac::OccupancyWeighting::discounted);
    mfac::Vec theta(3);
    theta << -0.05, -0.78, -0.28;
    for (auto _ : state)
        benchmark::DoNotOptimize(mfac::policy_gradient(basis, theta, policy, model,
                                                       samples, 0.2, 1.0, 64, 64,
                                                       rng.child(1)));
}
BENCHMARK(bm_policy_gradient);

}  // namespace

BENCHMARK_MAIN();
