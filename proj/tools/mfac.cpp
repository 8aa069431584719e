#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfac/config.hpp"
#include "mfac/parallel.hpp"
#include "mfac/riccati.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitOverflow = 4;

std::string iso_timestamp() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mfac::ConfigError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json vec_to_json(const mfac::Vec& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

// Reference actor/critic coordinates for the scalar systemic-risk
// parametrization: omega* over the (s - mubar, mubar) features, theta* over
// the {1, mubar^2, (s - mubar)^2} basis.
void riccati_reference(const mfac::RiccatiSolution& sol, const mfac::LQRModelSpec& spec,
                       mfac::Vec& omega, mfac::Vec& theta) {
    const mfac::Mat sinv_u = sol.S.llt().solve(sol.U);
    const mfac::Mat sinv_w = sol.S.llt().solve(sol.W);
    const int d = spec.d();
    omega.resize(2 * d * spec.m());
    for (int i = 0; i < sinv_u.size(); ++i) omega(i) = -sinv_u(i);
    for (int i = 0; i < sinv_w.size(); ++i) omega(sinv_u.size() + i) = -sinv_w(i);
    if (d == 1) {
        theta.resize(3);
        theta << -sol.R, -sol.Lambda(0, 0), -sol.K(0, 0);
    } else {
        theta.resize(0);
    }
}

json riccati_to_json(const mfac::RiccatiSolution& sol, const mfac::LQRModelSpec& spec) {
    const mfac::HurwitzReport hw = mfac::verify_hurwitz(sol, spec);
    mfac::Vec omega, theta;
    riccati_reference(sol, spec, omega, theta);
    const double k_pi = sol.S.llt().solve(sol.U).norm() + sol.S.llt().solve(sol.W - sol.U).norm();
    const auto [beta0, beta_var] = mfac::discount_diagnostics(k_pi, spec.d());
    json out{
        {"K", mfac::matrix_to_json(sol.K)},
        {"Lambda", mfac::matrix_to_json(sol.Lambda)},
        {"Y", vec_to_json(sol.Y)},
        {"R", sol.R},
        {"S", mfac::matrix_to_json(sol.S)},
        {"residuals", vec_to_json(sol.residuals)},
        {"closed_loop",
         {{"max_re_representative", hw.max_re_representative},
          {"max_re_population", hw.max_re_population},
          {"hurwitz", hw.pass}}},
        {"omega_star", vec_to_json(omega)},
        {"discount_diagnostics",
         {{"k_pi", k_pi}, {"beta0", beta0}, {"beta_var", beta_var}, {"beta", spec.beta}}},
    };
    if (theta.size()) out["theta_star"] = vec_to_json(theta);
    return out;
}

int cmd_riccati(const std::string& config_path) {
    mfac::RunConfig cfg;
    try {
        cfg = mfac::load_run_config(config_path);
        if (!cfg.is_lqr()) throw mfac::ConfigError("riccati requires an LQR model");
    } catch (const mfac::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        const mfac::RiccatiSolution sol = mfac::solve_riccati(cfg.lqr);
        std::cout << riccati_to_json(sol, cfg.lqr).dump(2) << "\n";
    } catch (const mfac::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& occupancy,
              bool dump_critic, std::uint64_t seed, const std::string& out_dir) {
    mfac::RunConfig cfg;
    try {
        cfg = mfac::load_run_config(config_path);
        if (!occupancy.empty()) {
            if (occupancy == "discounted")
                cfg.schedule.weighting = mfac::OccupancyWeighting::discounted;
            else if (occupancy == "uniform")
                cfg.schedule.weighting = mfac::OccupancyWeighting::uniform;
            else
                throw mfac::ConfigError("--occupancy must be discounted or uniform");
        }
    } catch (const mfac::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    fs::create_directories(out_dir);
    const std::string start = iso_timestamp();

    json manifest{{"config", cfg.raw},
                  {"config_hash", mfac::content_hash(read_file(config_path))},
                  {"seed", seed},
                  {"started", start}};
    std::vector<std::string> outputs;

    mfac::Vec ref_omega, ref_theta;
    bool have_reference = false;
    if (cfg.is_lqr()) {
        try {
            const mfac::RiccatiSolution sol = mfac::solve_riccati(cfg.lqr);
            riccati_reference(sol, cfg.lqr, ref_omega, ref_theta);
            manifest["riccati_reference"] = riccati_to_json(sol, cfg.lqr);
            have_reference = true;
        } catch (const mfac::SolverError& e) {
            std::cerr << "solver error: " << e.what() << "\n";
            return kExitSolver;
        }
    }

    const mfac::ModelSpec model = cfg.model();
    const mfac::CylindricalBasis basis = cfg.basis();
    const mfac::RngTree rng(seed);
    const bool theta_cols = dump_critic || basis.size() <= 16;

    std::vector<mfac::TrainingRecord> history;
    const std::string log_path = out_dir + "/training_log.csv";
    const mfac::Mat ref_omega_mat = have_reference ? mfac::Mat(ref_omega) : mfac::Mat();
    auto flush_log = [&] {
        mfac::write_training_log_csv(log_path, history, theta_cols,
                                     have_reference ? &ref_omega_mat : nullptr,
                                     have_reference && ref_theta.size() ? &ref_theta
                                                                        : nullptr);
    };

    int exit_code = 0;
    mfac::TrainResult result{cfg.initial_policy(), mfac::Vec(), {}};
    try {
        result = mfac::train(
            model, cfg.initial_policy(), basis, cfg.init, cfg.schedule, cfg.lambda,
            cfg.beta, rng, [&](const mfac::TrainingRecord& rec) {
                history.push_back(rec);
                if (dump_critic) {
                    const std::string path = out_dir + "/critic_iter_" +
                                             std::to_string(rec.iteration) + ".json";
                    std::ofstream os(path);
                    os << mfac::critic_to_json(rec.theta, cfg.basis_kind).dump(2) << "\n";
                    outputs.push_back(path);
                }
            });
        result.history = history;
    } catch (const mfac::EvaluationError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        exit_code = kExitOverflow;
    } catch (const mfac::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        exit_code = kExitSolver;
    }

    flush_log();
    outputs.push_back(log_path);

    if (exit_code == 0) {
        const std::string policy_path = out_dir + "/final_policy.json";
        {
            std::ofstream os(policy_path);
            os << mfac::policy_to_json(result.policy, cfg.policy_features,
                                       cfg.crowd.s_tar)
                      .dump(2)
               << "\n";
        }
        outputs.push_back(policy_path);
        const std::string critic_path = out_dir + "/final_critic.json";
        {
            std::ofstream os(critic_path);
            os << mfac::critic_to_json(result.theta, cfg.basis_kind).dump(2) << "\n";
        }
        outputs.push_back(critic_path);
    }

    manifest["finished"] = iso_timestamp();
    double train_seconds = 0.0;
    for (const mfac::TrainingRecord& rec : history) train_seconds += rec.seconds;
    manifest["train_seconds"] = train_seconds;
    const std::string manifest_path = out_dir + "/manifest.json";
    outputs.push_back(manifest_path);
    manifest["outputs"] = outputs;
    {
        const std::string tmp = manifest_path + ".tmp";
        std::ofstream os(tmp);
        os << manifest.dump(2) << "\n";
        os.close();
        fs::rename(tmp, manifest_path);
    }
    return exit_code;
}

int cmd_evaluate(const std::string& policy_path, const std::string& config_path,
                 int trajectories, std::uint64_t seed) {
    try {
        const mfac::RunConfig cfg = mfac::load_run_config(config_path);
        const json pj = json::parse(read_file(policy_path));
        const mfac::GaussianFeedbackPolicy policy = mfac::policy_from_json(pj);
        const mfac::ModelSpec model = cfg.model();
        if (policy.action_dim() != model.action_dim ||
            policy.features().Fs.cols() != model.state_dim)
            throw mfac::ConfigError("policy shape does not match the model");
        const int L = trajectories > 0 ? trajectories : cfg.schedule.n_trajectories;
        const bool exact = cfg.schedule.exact_transitions && model.affine.valid &&
                           model.mean_field_via_mean_only && cfg.init.mean_only;
        const mfac::ValueEstimate est = mfac::estimate_value_mc(
            model, policy, cfg.init, cfg.schedule.horizon, cfg.schedule.dt, L,
            cfg.lambda, cfg.beta, mfac::RngTree(seed), exact);
        std::cout << json{{"J_hat", est.value}, {"std_err", est.std_err},
                          {"trajectories", L}}
                         .dump(2)
                  << "\n";
        return 0;
    } catch (const mfac::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mfac::EvaluationError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return kExitOverflow;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-field actor-critic experiment runner"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: MFAC_THREADS or 1)");

    std::string config_path;
    std::string occupancy;
    std::string out_dir = "out";
    std::string policy_path;
    bool dump_critic = false;
    std::uint64_t seed = 0;
    int trajectories = 0;

    CLI::App* riccati = app.add_subcommand("riccati", "solve the LQR Riccati system");
    riccati->add_option("--config", config_path, "config file")->required();

    CLI::App* train = app.add_subcommand("train", "run the actor-critic loop");
    train->add_option("--config", config_path, "config file")->required();
    train->add_option("--occupancy", occupancy, "discounted|uniform");
    train->add_flag("--dump-critic", dump_critic, "write the critic every iteration");
    train->add_option("--seed", seed, "master seed");
    train->add_option("--out", out_dir, "output directory");

    CLI::App* evaluate = app.add_subcommand("evaluate", "Monte Carlo policy value");
    evaluate->add_option("--policy", policy_path, "policy json")->required();
    evaluate->add_option("--config", config_path, "config file")->required();
    evaluate->add_option("--trajectories", trajectories, "trajectory count");
    evaluate->add_option("--seed", seed, "master seed");

    CLI11_PARSE(app, argc, argv);
    if (threads > 0) mfac::set_thread_count(threads);

    if (riccati->parsed()) return cmd_riccati(config_path);
    if (train->parsed())
        return cmd_train(config_path, occupancy, dump_critic, seed, out_dir);
    if (evaluate->parsed()) return cmd_evaluate(policy_path, config_path, trajectories, seed);
    return 0;
}
