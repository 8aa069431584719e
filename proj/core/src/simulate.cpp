#include "mfac/simulate.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "mfac/parallel.hpp"

namespace mfac {

namespace {

constexpr double kOverflowBound = 1e8;

Mat psd_sqrt(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
    const Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void check_overflow(const Vec& s, int traj, int step) {
    if (!s.allFinite() || s.cwiseAbs().maxCoeff() > kOverflowBound)
        throw EvaluationError("simulation overflow at trajectory " + std::to_string(traj) +
                              ", step " + std::to_string(step));
}

Vec sample_gaussian(const Vec& mean, const Mat& cov_sqrt, RngStream& rng) {
    return mean + cov_sqrt * rng.normal_vec(static_cast<int>(mean.size()));
}

}  // namespace

TrajectoryBatch simulate_euler(const ModelSpec& model, const GaussianFeedbackPolicy& policy,
                               const InitialCondition& init, double horizon, double dt,
                               int n_trajectories, const RngTree& rng) {
    if (dt <= 0.0 || horizon <= 0.0)
        throw ParameterError("simulate_euler: horizon and dt must be positive");
    if (n_trajectories <= 0)
        throw ParameterError("simulate_euler: need at least one trajectory");
    const int steps = static_cast<int>(std::llround(horizon / dt));
    const int d = model.state_dim;
    const int np = init.mean_only ? 1 : init.n_particles;
    if (np <= 0) throw ParameterError("simulate_euler: need at least one particle");

    const Mat rep_sqrt = psd_sqrt(init.rep_cov);
    const Mat pop_sqrt = psd_sqrt(init.pop_cov);
    const double sqrt_dt = std::sqrt(dt);

    TrajectoryBatch batch;
    batch.dt = dt;
    batch.mean_only = init.mean_only;
    batch.trajectories.resize(n_trajectories);

    parallel_for(n_trajectories, [&](int l) {
        const RngTree traj_rng = rng.child(static_cast<std::uint64_t>(l));
        RngStream init_stream = traj_rng.stream(0);
        RngStream rep_noise = traj_rng.stream(1);
        RngStream mc_stream = traj_rng.stream(2);

        Trajectory& tr = batch.trajectories[l];
        tr.times = Vec::LinSpaced(steps + 1, 0.0, steps * dt);
        tr.states.resize(steps + 1, d);
        tr.clouds.assign(steps + 1, Mat(np, d));

        Vec s = sample_gaussian(init.rep_mean, rep_sqrt, init_stream);
        Mat cloud(np, d);
        if (init.mean_only) {
            cloud.row(0) = init.pop_mean.transpose();
        } else {
            for (int p = 0; p < np; ++p) {
                RngStream ps = traj_rng.stream(10 + static_cast<std::uint64_t>(p));
                cloud.row(p) = sample_gaussian(init.pop_mean, pop_sqrt, ps).transpose();
            }
        }
        tr.states.row(0) = s.transpose();
        tr.clouds[0] = cloud;

        std::vector<RngStream> particle_noise;
        particle_noise.reserve(np);
        for (int p = 0; p < np; ++p)
            particle_noise.push_back(
                traj_rng.stream(1000000 + static_cast<std::uint64_t>(p)));

        RngStream* mc = model.affine_in_action ? nullptr : &mc_stream;
        Mat next_cloud(np, d);
        for (int k = 0; k < steps; ++k) {
            const EmpiricalMeasure mu = EmpiricalMeasure::uniform(cloud);
            const AveragedCoefficients rep = averaged_coefficients(policy, model, s, mu, 64, mc);
            s += rep.b * dt + psd_sqrt(rep.Sigma) * rep_noise.normal_vec(d) * sqrt_dt;
            check_overflow(s, l, k + 1);

            for (int p = 0; p < np; ++p) {
                const Vec xi = cloud.row(p).transpose();
                const AveragedCoefficients pc =
                    averaged_coefficients(policy, model, xi, mu, 64, mc);
                Vec xnew = xi + pc.b * dt;
                if (!init.mean_only)
                    xnew += psd_sqrt(pc.Sigma) * particle_noise[p].normal_vec(d) * sqrt_dt;
                check_overflow(xnew, l, k + 1);
                next_cloud.row(p) = xnew.transpose();
            }
            cloud = next_cloud;
            tr.states.row(k + 1) = s.transpose();
            tr.clouds[k + 1] = cloud;
        }
    });
    return batch;
}

ExactTransition build_exact_transition(const ModelSpec& model,
                                       const GaussianFeedbackPolicy& policy, double dt) {
    if (!model.affine.valid)
        throw ParameterError("build_exact_transition: model has no affine dynamics");
    if (!model.mean_field_via_mean_only)
        throw ParameterError("build_exact_transition: requires the mean-only closure");
    const int d = model.state_dim;
    const Mat& W = policy.weights();
    const PolicyFeatureMap& f = policy.features();
    const AffineDynamics& dyn = model.affine;

    Mat M = Mat::Zero(2 * d, 2 * d);
    M.topLeftCorner(d, d) = dyn.Ax + dyn.B * W * f.Fs;
    M.topRightCorner(d, d) = dyn.Amu + dyn.B * W * f.Fm;
    M.bottomRightCorner(d, d) = dyn.Ax + dyn.Amu + dyn.B * W * (f.Fs + f.Fm);
    Vec c = Vec::Zero(2 * d);
    c.head(d) = dyn.b0 + dyn.B * W * f.f0;
    c.tail(d) = dyn.b0 + dyn.B * W * f.f0;

    Mat SS = Mat::Zero(2 * d, 2 * d);
    SS.topLeftCorner(d, d) = dyn.sigma_const * dyn.sigma_const.transpose();

    // Van Loan block exponential: Phi, integrated covariance, integrated
    // constant in one pass each.
    Mat van(4 * d, 4 * d);
    van.setZero();
    van.topLeftCorner(2 * d, 2 * d) = M;
    van.topRightCorner(2 * d, 2 * d) = SS;
    van.bottomRightCorner(2 * d, 2 * d) = -M.transpose();
    const Mat evan = (van * dt).exp();
    const Mat Phi = evan.topLeftCorner(2 * d, 2 * d);
    const Mat cov = evan.topRightCorner(2 * d, 2 * d) * Phi.transpose();

    Mat aug = Mat::Zero(2 * d + 1, 2 * d + 1);
    aug.topLeftCorner(2 * d, 2 * d) = M;
    aug.topRightCorner(2 * d, 1) = c;
    const Mat eaug = (aug * dt).exp();

    ExactTransition t;
    t.Phi = Phi;
    t.c = eaug.topRightCorner(2 * d, 1);
    t.noise_l = psd_sqrt(cov);
    t.state_dim = d;
    return t;
}

TrajectoryBatch simulate_affine_exact(const ModelSpec& model,
                                      const GaussianFeedbackPolicy& policy,
                                      const InitialCondition& init, double horizon,
                                      double dt, int n_trajectories, const RngTree& rng) {
    if (!init.mean_only)
        throw ParameterError("simulate_affine_exact: requires a mean-only initial condition");
    if (dt <= 0.0 || horizon <= 0.0)
        throw ParameterError("simulate_affine_exact: horizon and dt must be positive");
    const int steps = static_cast<int>(std::llround(horizon / dt));
    const int d = model.state_dim;
    const ExactTransition trans = build_exact_transition(model, policy, dt);
    const Mat rep_sqrt = psd_sqrt(init.rep_cov);

    TrajectoryBatch batch;
    batch.dt = dt;
    batch.mean_only = true;
    batch.trajectories.resize(n_trajectories);

    parallel_for(n_trajectories, [&](int l) {
        const RngTree traj_rng = rng.child(static_cast<std::uint64_t>(l));
        RngStream init_stream = traj_rng.stream(0);
        RngStream noise = traj_rng.stream(1);

        Trajectory& tr = batch.trajectories[l];
        tr.times = Vec::LinSpaced(steps + 1, 0.0, steps * dt);
        tr.states.resize(steps + 1, d);
        tr.clouds.assign(steps + 1, Mat(1, d));

        Vec z(2 * d);
        z.head(d) = sample_gaussian(init.rep_mean, rep_sqrt, init_stream);
        z.tail(d) = init.pop_mean;
        tr.states.row(0) = z.head(d).transpose();
        tr.clouds[0].row(0) = z.tail(d).transpose();

        for (int k = 0; k < steps; ++k) {
            z = trans.Phi * z + trans.c + trans.noise_l * noise.normal_vec(2 * d);
            check_overflow(z, l, k + 1);
            tr.states.row(k + 1) = z.head(d).transpose();
            tr.clouds[k + 1].row(0) = z.tail(d).transpose();
        }
    });
    return batch;
}

OccupancySampleSet occupancy_samples(const TrajectoryBatch& batch, double beta,
                                     OccupancyWeighting weighting) {
    if (batch.size() == 0) throw ParameterError("occupancy_samples: empty batch");
    const int L = batch.size();
    const int K = batch.steps();
    OccupancySampleSet out;
    out.states.reserve(static_cast<std::size_t>(L) * K);
    out.measures.reserve(static_cast<std::size_t>(L) * K);
    out.weights.resize(L * K);
    int idx = 0;
    for (int l = 0; l < L; ++l) {
        const Trajectory& tr = batch.trajectories[l];
        for (int k = 0; k < K; ++k) {
            out.states.push_back(tr.states.row(k).transpose());
            out.measures.push_back(EmpiricalMeasure::uniform(tr.clouds[k]));
            out.weights(idx++) =
                weighting == OccupancyWeighting::discounted
                    ? std::exp(-beta * tr.times(k)) * batch.dt / L
                    : 1.0 / (static_cast<double>(L) * K);
        }
    }
    return out;
}

double estimate_value(const ModelSpec& model, const GaussianFeedbackPolicy& policy,
                      const TrajectoryBatch& batch, double lambda, double beta) {
    const int L = batch.size();
    const int K = batch.steps();
    std::vector<double> per_traj(L, 0.0);
    parallel_for(L, [&](int l) {
        const Trajectory& tr = batch.trajectories[l];
        double acc = 0.0;
        for (int k = 0; k < K; ++k) {
            const EmpiricalMeasure mu = EmpiricalMeasure::uniform(tr.clouds[k]);
            const double r = regularized_reward(model, policy, tr.states.row(k).transpose(),
                                                mu, lambda);
            acc += std::exp(-beta * tr.times(k)) * r * batch.dt;
        }
        per_traj[l] = acc;
    });
    double total = 0.0;
    for (double v : per_traj) total += v;
    return total / L;
}

ValueEstimate estimate_value_mc(const ModelSpec& model,
                                const GaussianFeedbackPolicy& policy,
                                const InitialCondition& init, double horizon, double dt,
                                int n_trajectories, double lambda, double beta,
                                const RngTree& rng, bool exact) {
    const TrajectoryBatch batch =
        exact ? simulate_affine_exact(model, policy, init, horizon, dt, n_trajectories, rng)
              : simulate_euler(model, policy, init, horizon, dt, n_trajectories, rng);
    const int L = batch.size();
    const int K = batch.steps();
    std::vector<double> per_traj(L, 0.0);
    parallel_for(L, [&](int l) {
        const Trajectory& tr = batch.trajectories[l];
        double acc = 0.0;
        for (int k = 0; k < K; ++k) {
            const EmpiricalMeasure mu = EmpiricalMeasure::uniform(tr.clouds[k]);
            acc += std::exp(-beta * tr.times(k)) *
                   regularized_reward(model, policy, tr.states.row(k).transpose(), mu,
                                      lambda) *
                   batch.dt;
        }
        per_traj[l] = acc;
    });
    double mean_v = 0.0;
    for (double v : per_traj) mean_v += v;
    mean_v /= L;
    double var = 0.0;
    for (double v : per_traj) var += (v - mean_v) * (v - mean_v);
    ValueEstimate out;
    out.value = mean_v;
    out.std_err = L > 1 ? std::sqrt(var / (L - 1.0) / L) : 0.0;
    return out;
}

}  // namespace mfac
