#ifndef MFAC_CONFIG_HPP
#define MFAC_CONFIG_HPP

#include <cstdint>
#include <string>

#include <json.hpp>

#include "mfac/actor.hpp"

namespace mfac {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Minimal TOML reader covering the config dialect used here: [sections],
// key = value with strings, numbers, booleans and (nested, possibly
// multi-line) arrays, and # comments. Errors carry line/column.
nlohmann::json parse_toml(const std::string& text);

// Loads TOML or JSON depending on content (JSON configs start with '{').
nlohmann::json load_config_file(const std::string& path);

// Fully resolved experiment description.
struct RunConfig {
    nlohmann::json raw;  // config echo for the manifest

    std::string model_type;  // "lqr-systemic-risk" | "crowd-aversion"
    LQRModelSpec lqr;
    CrowdModelSpec crowd;
    double lambda = 0.0;
    double beta = 0.0;

    TrainingSchedule schedule;
    InitialCondition init;

    std::string basis_kind;  // "sysrisk3" | "sysrisk4" | "rbf-grid"
    double rbf_lo = -8.0, rbf_hi = 4.0;
    int rbf_points = 5;
    double rbf_state_bandwidth = 3.0;
    double rbf_measure_bandwidth = 3.0;

    std::string policy_features;  // "systemic-risk" | "crowd" | "affine-full"
    Mat policy_weights;
    Mat policy_covariance;

    ModelSpec model() const;
    CylindricalBasis basis() const;
    PolicyFeatureMap feature_map() const;
    GaussianFeedbackPolicy initial_policy() const;
    bool is_lqr() const { return model_type == "lqr-systemic-risk"; }
};

RunConfig load_run_config(const std::string& path);

// Matrices serialize as {"shape": [r, c], "data": row-major flat array}.
nlohmann::json matrix_to_json(const Mat& m);
Mat matrix_from_json(const nlohmann::json& j);

nlohmann::json policy_to_json(const GaussianFeedbackPolicy& policy,
                              const std::string& feature_kind, const Vec& crowd_target);
GaussianFeedbackPolicy policy_from_json(const nlohmann::json& j);

nlohmann::json critic_to_json(const Vec& theta, const std::string& basis_kind);
nlohmann::json galerkin_to_json(const GalerkinSystem& system);

// FNV-1a over the raw file bytes, hex-encoded.
std::string content_hash(const std::string& text);

void write_training_log_csv(const std::string& path,
                            const std::vector<TrainingRecord>& history,
                            bool include_theta, const Mat* ref_omega,
                            const Vec* ref_theta);

void write_trajectories_csv(const std::string& path, const TrajectoryBatch& batch);
void write_cloud_csv(const std::string& path, const EmpiricalMeasure& mu,
                     bool with_weights);

}  // namespace mfac

#endif
