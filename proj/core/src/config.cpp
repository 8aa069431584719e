#include "mfac/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mfac {

namespace {

using nlohmann::json;

struct TomlCursor {
    const std::string& text;
    std::size_t pos = 0;
    int line = 1;
    int col = 1;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char get() {
        const char c = text[pos++];
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        return c;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("config parse error at line " + std::to_string(line) +
                          ", column " + std::to_string(col) + ": " + msg);
    }
};

void skip_ws(TomlCursor& c, bool cross_lines) {
    while (!c.done()) {
        const char ch = c.peek();
        if (ch == '#') {
            while (!c.done() && c.peek() != '\n') c.get();
        } else if (ch == ' ' || ch == '\t' || ch == '\r' ||
                   (cross_lines && ch == '\n')) {
            c.get();
        } else {
            break;
        }
    }
}

std::string parse_bare_key(TomlCursor& c) {
    std::string key;
    while (!c.done()) {
        const char ch = c.peek();
        if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-')
            key.push_back(c.get());
        else
            break;
    }
    if (key.empty()) c.fail("expected key");
    return key;
}

json parse_value(TomlCursor& c);

json parse_array(TomlCursor& c) {
    c.get();  // '['
    json arr = json::array();
    skip_ws(c, true);
    if (!c.done() && c.peek() == ']') {
        c.get();
        return arr;
    }
    while (true) {
        skip_ws(c, true);
        arr.push_back(parse_value(c));
        skip_ws(c, true);
        if (c.done()) c.fail("unterminated array");
        const char ch = c.get();
        if (ch == ']') break;
        if (ch != ',') c.fail("expected ',' or ']' in array");
        skip_ws(c, true);
        if (!c.done() && c.peek() == ']') {  // trailing comma
            c.get();
            break;
        }
    }
    return arr;
}

json parse_value(TomlCursor& c) {
    if (c.done()) c.fail("expected value");
    const char ch = c.peek();
    if (ch == '[') return parse_array(c);
    if (ch == '"') {
        c.get();
        std::string s;
        while (!c.done() && c.peek() != '"') {
            char x = c.get();
            if (x == '\\' && !c.done()) {
                const char e = c.get();
                x = e == 'n' ? '\n' : e == 't' ? '\t' : e;
            }
            s.push_back(x);
        }
        if (c.done()) c.fail("unterminated string");
        c.get();
        return json(s);
    }
    std::string tok;
    while (!c.done()) {
        const char x = c.peek();
        if (x == ',' || x == ']' || x == '\n' || x == '#' || x == ' ' || x == '\t' ||
            x == '\r')
            break;
        tok.push_back(c.get());
    }
    if (tok == "true") return json(true);
    if (tok == "false") return json(false);
    try {
        std::size_t used = 0;
        if (tok.find_first_of(".eE") == std::string::npos &&
            tok.find("inf") == std::string::npos && tok.find("nan") == std::string::npos) {
            const long long v = std::stoll(tok, &used);
            if (used == tok.size()) return json(v);
        }
        const double v = std::stod(tok, &used);
        if (used != tok.size()) c.fail("malformed number '" + tok + "'");
        return json(v);
    } catch (const std::exception&) {
        c.fail("malformed value '" + tok + "'");
    }
}

}  // namespace

json parse_toml(const std::string& text) {
    TomlCursor c{text};
    json root = json::object();
    json* section = &root;
    while (true) {
        skip_ws(c, true);
        if (c.done()) break;
        if (c.peek() == '[') {
            c.get();
            std::string name;
            while (!c.done() && c.peek() != ']' && c.peek() != '\n') name.push_back(c.get());
            if (c.done() || c.peek() != ']') c.fail("unterminated section header");
            c.get();
            section = &root;
            std::stringstream ss(name);
            std::string part;
            while (std::getline(ss, part, '.')) {
                if (part.empty()) c.fail("empty section name component");
                section = &(*section)[part];
            }
            continue;
        }
        const std::string key = parse_bare_key(c);
        skip_ws(c, false);
        if (c.done() || c.get() != '=') c.fail("expected '=' after key '" + key + "'");
        skip_ws(c, false);
        (*section)[key] = parse_value(c);
        skip_ws(c, false);
        if (!c.done() && c.peek() != '\n') c.fail("trailing characters after value");
    }
    return root;
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    std::size_t i = 0;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i < text.size() && text[i] == '{') {
        try {
            return json::parse(text);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("JSON config error: ") + e.what());
        }
    }
    return parse_toml(text);
}

namespace {

Mat json_to_matrix(const json& j) {
    if (j.is_number()) {
        Mat m(1, 1);
        m(0, 0) = j.get<double>();
        return m;
    }
    if (!j.is_array() || j.empty()) throw ConfigError("expected matrix value");
    if (!j[0].is_array()) {
        Mat m(static_cast<int>(j.size()), 1);
        for (std::size_t i = 0; i < j.size(); ++i) m(static_cast<int>(i), 0) = j[i];
        return m;
    }
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j[r].size()) != cols)
            throw ConfigError("ragged matrix rows in config");
        for (int cidx = 0; cidx < cols; ++cidx) m(r, cidx) = j[r][cidx];
    }
    return m;
}

Vec json_to_vector(const json& j) {
    const Mat m = json_to_matrix(j);
    if (m.cols() != 1) throw ConfigError("expected vector value");
    return m.col(0);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (j.contains(key)) return j.at(key).get<T>();
    return fallback;
}

void apply_lqr_overrides(LQRModelSpec& spec, const json& m) {
    auto mat = [&](const char* key, Mat& target) {
        if (m.contains(key)) target = json_to_matrix(m.at(key));
    };
    auto vec = [&](const char* key, Vec& target) {
        if (m.contains(key)) target = json_to_vector(m.at(key));
    };
    mat("A", spec.A);
    mat("Abar", spec.Abar);
    mat("D", spec.D);
    mat("Dbar", spec.Dbar);
    mat("B", spec.B);
    mat("F", spec.F);
    vec("gamma", spec.gamma);
    mat("Q", spec.Q);
    mat("Qbar", spec.Qbar);
    mat("N", spec.N);
    mat("I", spec.I);
    vec("M", spec.M);
    vec("H", spec.H);
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    const json j = load_config_file(path);
    RunConfig cfg;
    cfg.raw = j;
    if (!j.contains("model") || !j.at("model").contains("type"))
        throw ConfigError("config missing model.type");
    const json& m = j.at("model");
    cfg.model_type = m.at("type").get<std::string>();

    if (cfg.model_type == "lqr-systemic-risk") {
        cfg.lqr = LQRModelSpec::systemic_risk();
        apply_lqr_overrides(cfg.lqr, m);
        cfg.lqr.lambda = get_or(m, "lambda", cfg.lqr.lambda);
        cfg.lqr.beta = get_or(m, "beta", cfg.lqr.beta);
        cfg.lambda = cfg.lqr.lambda;
        cfg.beta = cfg.lqr.beta;
    } else if (cfg.model_type == "crowd-aversion") {
        cfg.crowd = CrowdModelSpec::defaults();
        cfg.crowd.sigma = get_or(m, "sigma", cfg.crowd.sigma);
        cfg.crowd.kappa = get_or(m, "kappa", cfg.crowd.kappa);
        cfg.crowd.gamma_crowd = get_or(m, "gamma", cfg.crowd.gamma_crowd);
        cfg.crowd.eta = get_or(m, "eta", cfg.crowd.eta);
        cfg.crowd.rho = get_or(m, "rho", cfg.crowd.rho);
        if (m.contains("target")) cfg.crowd.s_tar = json_to_vector(m.at("target"));
        cfg.crowd.lambda = get_or(m, "lambda", cfg.crowd.lambda);
        cfg.crowd.beta = get_or(m, "beta", cfg.crowd.beta);
        cfg.lambda = cfg.crowd.lambda;
        cfg.beta = cfg.crowd.beta;
    } else {
        throw ConfigError("unknown model.type '" + cfg.model_type + "'");
    }

    const json s = j.value("schedule", json::object());
    cfg.schedule.iterations = get_or(s, "iterations", 100);
    cfg.schedule.learning_rate = get_or(s, "learning_rate", 0.05);
    cfg.schedule.n_trajectories = get_or(s, "trajectories", 10);
    cfg.schedule.horizon = get_or(s, "horizon", 8.0);
    cfg.schedule.dt = get_or(s, "dt", 0.05);
    cfg.schedule.action_samples = get_or(s, "action_samples", 64);
    cfg.schedule.xi_samples = get_or(s, "xi_samples", 64);
    cfg.schedule.ridge = get_or(s, "ridge", 0.0);
    cfg.schedule.weight_clip = get_or(s, "weight_clip", 0.0);
    cfg.schedule.sqrt_decay = get_or(s, "sqrt_decay", false);
    cfg.schedule.exact_transitions = get_or(s, "exact_transitions", false);
    const std::string occ = get_or<std::string>(s, "occupancy", "discounted");
    if (occ == "discounted")
        cfg.schedule.weighting = OccupancyWeighting::discounted;
    else if (occ == "uniform")
        cfg.schedule.weighting = OccupancyWeighting::uniform;
    else
        throw ConfigError("schedule.occupancy must be 'discounted' or 'uniform'");

    const int d = cfg.is_lqr() ? cfg.lqr.d() : 2;
    const json ini = j.value("initial", json::object());
    cfg.init.rep_mean = ini.contains("rep_mean") ? json_to_vector(ini.at("rep_mean"))
                                                 : Vec::Zero(d);
    cfg.init.pop_mean = ini.contains("pop_mean") ? json_to_vector(ini.at("pop_mean"))
                                                 : Vec::Zero(d);
    if (ini.contains("rep_cov"))
        cfg.init.rep_cov = json_to_matrix(ini.at("rep_cov"));
    else {
        const double sd = get_or(ini, "rep_std", 0.0);
        cfg.init.rep_cov = sd * sd * Mat::Identity(d, d);
    }
    if (ini.contains("pop_cov"))
        cfg.init.pop_cov = json_to_matrix(ini.at("pop_cov"));
    else {
        const double sd = get_or(ini, "pop_std", 0.0);
        cfg.init.pop_cov = sd * sd * Mat::Identity(d, d);
    }
    cfg.init.n_particles = get_or(ini, "particles", 1);
    cfg.init.mean_only = get_or(ini, "mean_only", false);

    const json b = j.value("basis", json::object());
    cfg.basis_kind =
        get_or<std::string>(b, "kind", cfg.is_lqr() ? "sysrisk3" : "rbf-grid");
    cfg.rbf_lo = get_or(b, "lo", -8.0);
    cfg.rbf_hi = get_or(b, "hi", 4.0);
    cfg.rbf_points = get_or(b, "points", 5);
    cfg.rbf_state_bandwidth = get_or(b, "state_bandwidth", 3.0);
    cfg.rbf_measure_bandwidth = get_or(b, "measure_bandwidth", 3.0);

    const json p = j.value("policy", json::object());
    cfg.policy_features =
        get_or<std::string>(p, "features", cfg.is_lqr() ? "systemic-risk" : "crowd");
    const PolicyFeatureMap fmap = cfg.feature_map();
    const int adim = cfg.is_lqr() ? cfg.lqr.m() : 2;
    cfg.policy_weights = p.contains("weights") ? json_to_matrix(p.at("weights"))
                                               : Mat::Zero(adim, fmap.dim());
    if (p.contains("covariance"))
        cfg.policy_covariance = json_to_matrix(p.at("covariance"));
    else if (p.contains("std")) {
        const double sd = p.at("std").get<double>();
        cfg.policy_covariance = sd * sd * Mat::Identity(adim, adim);
    } else {
        cfg.policy_covariance = cfg.is_lqr() ? cfg.lambda * Mat::Identity(adim, adim)
                                             : 0.0625 * Mat::Identity(adim, adim);
    }
    return cfg;
}

ModelSpec RunConfig::model() const {
    return is_lqr() ? lqr.to_model() : crowd.to_model();
}

CylindricalBasis RunConfig::basis() const {
    if (basis_kind == "sysrisk3") return CylindricalBasis::systemic_risk_3();
    if (basis_kind == "sysrisk4") return CylindricalBasis::systemic_risk_4();
    if (basis_kind == "rbf-grid")
        return CylindricalBasis::rbf_grid(rbf_lo, rbf_hi, rbf_points,
                                          rbf_state_bandwidth, rbf_measure_bandwidth);
    throw ConfigError("unknown basis.kind '" + basis_kind + "'");
}

PolicyFeatureMap RunConfig::feature_map() const {
    if (policy_features == "systemic-risk")
        return PolicyFeatureMap::systemic_risk(is_lqr() ? lqr.d() : 2);
    if (policy_features == "crowd") return PolicyFeatureMap::crowd(crowd.s_tar);
    if (policy_features == "affine-full")
        return PolicyFeatureMap::affine_full(is_lqr() ? lqr.d() : 2);
    throw ConfigError("unknown policy.features '" + policy_features + "'");
}

GaussianFeedbackPolicy RunConfig::initial_policy() const {
    try {
        return GaussianFeedbackPolicy(policy_weights, policy_covariance, feature_map());
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("invalid policy block: ") + e.what());
    }
}

nlohmann::json matrix_to_json(const Mat& m) {
    json data = json::array();
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return json{{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

Mat matrix_from_json(const nlohmann::json& j) {
    const int rows = j.at("shape")[0].get<int>();
    const int cols = j.at("shape")[1].get<int>();
    const json& data = j.at("data");
    if (static_cast<int>(data.size()) != rows * cols)
        throw ConfigError("matrix data length does not match shape");
    Mat m(rows, cols);
    int k = 0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = data[k++];
    return m;
}

nlohmann::json policy_to_json(const GaussianFeedbackPolicy& policy,
                              const std::string& feature_kind, const Vec& crowd_target) {
    json features{{"kind", feature_kind}};
    if (feature_kind == "crowd") {
        features["target"] = {crowd_target(0), crowd_target(1)};
    } else {
        features["d"] = static_cast<int>(policy.features().Fs.cols());
    }
    return json{{"weights", matrix_to_json(policy.weights())},
                {"covariance_cholesky", matrix_to_json(policy.covariance_cholesky())},
                {"features", features}};
}

GaussianFeedbackPolicy policy_from_json(const nlohmann::json& j) {
    const Mat w = matrix_from_json(j.at("weights"));
    const Mat chol = matrix_from_json(j.at("covariance_cholesky"));
    const Mat cov = chol * chol.transpose();
    const json& f = j.at("features");
    const std::string kind = f.at("kind").get<std::string>();
    PolicyFeatureMap fmap;
    if (kind == "systemic-risk")
        fmap = PolicyFeatureMap::systemic_risk(f.at("d").get<int>());
    else if (kind == "crowd")
        fmap = PolicyFeatureMap::crowd(json_to_vector(f.at("target")));
    else if (kind == "affine-full")
        fmap = PolicyFeatureMap::affine_full(f.at("d").get<int>());
    else
        throw ConfigError("unknown policy feature kind '" + kind + "'");
    try {
        return GaussianFeedbackPolicy(w, cov, fmap);
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("invalid policy file: ") + e.what());
    }
}

nlohmann::json critic_to_json(const Vec& theta, const std::string& basis_kind) {
    json t = json::array();
    for (int i = 0; i < theta.size(); ++i) t.push_back(theta(i));
    return json{{"basis", basis_kind}, {"theta", t}};
}

nlohmann::json galerkin_to_json(const GalerkinSystem& system) {
    return json{{"A", matrix_to_json(system.A)},
                {"b", matrix_to_json(Mat(system.b))},
                {"sample_count", system.sample_count},
                {"ridge", system.ridge}};
}

std::string content_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

namespace {

void csv_number(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    os << buf;
}

}  // namespace

void write_training_log_csv(const std::string& path,
                            const std::vector<TrainingRecord>& history,
                            bool include_theta, const Mat* ref_omega,
                            const Vec* ref_theta) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    const int n_omega =
        history.empty() ? 0 : static_cast<int>(history.front().weights.size());
    const int n_theta =
        history.empty() ? 0 : static_cast<int>(history.front().theta.size());
    os << "iteration";
    for (int i = 1; i <= n_omega; ++i) os << ",omega_" << i;
    if (include_theta)
        for (int i = 1; i <= n_theta; ++i) os << ",theta_" << i;
    // Wall-clock timings are reported in the manifest, not here: the log is
    // part of the determinism contract and must be bit-identical across runs.
    os << ",J_hat,grad_norm,grad_std_err,critic_cond,critic_residual";
    if (ref_omega)
        for (int i = 1; i <= static_cast<int>(ref_omega->size()); ++i)
            os << ",omega_ref_" << i;
    if (ref_theta)
        for (int i = 1; i <= static_cast<int>(ref_theta->size()); ++i)
            os << ",theta_ref_" << i;
    os << "\n";
    for (const TrainingRecord& rec : history) {
        os << rec.iteration;
        for (int r = 0; r < rec.weights.rows(); ++r)
            for (int c = 0; c < rec.weights.cols(); ++c) {
                os << ",";
                csv_number(os, rec.weights(r, c));
            }
        if (include_theta)
            for (int i = 0; i < rec.theta.size(); ++i) {
                os << ",";
                csv_number(os, rec.theta(i));
            }
        os << ",";
        csv_number(os, rec.value_estimate);
        os << ",";
        csv_number(os, rec.grad_norm);
        os << ",";
        csv_number(os, rec.grad_std_err);
        os << ",";
        csv_number(os, rec.critic_cond);
        os << ",";
        csv_number(os, rec.critic_residual);
        if (ref_omega)
            for (int i = 0; i < ref_omega->size(); ++i) {
                os << ",";
                csv_number(os, (*ref_omega)(i));
            }
        if (ref_theta)
            for (int i = 0; i < ref_theta->size(); ++i) {
                os << ",";
                csv_number(os, (*ref_theta)(i));
            }
        os << "\n";
    }
}

void write_trajectories_csv(const std::string& path, const TrajectoryBatch& batch) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    const int d = batch.size() ? static_cast<int>(batch.trajectories[0].states.cols()) : 0;
    os << "trajectory,step,time";
    for (int i = 1; i <= d; ++i) os << ",s_" << i;
    for (int i = 1; i <= d; ++i) os << ",mubar_" << i;
    os << "\n";
    for (int l = 0; l < batch.size(); ++l) {
        const Trajectory& tr = batch.trajectories[l];
        for (int k = 0; k < tr.times.size(); ++k) {
            os << l << "," << k << ",";
            csv_number(os, tr.times(k));
            for (int i = 0; i < d; ++i) {
                os << ",";
                csv_number(os, tr.states(k, i));
            }
            const Vec mb = tr.clouds[k].colwise().mean().transpose();
            for (int i = 0; i < d; ++i) {
                os << ",";
                csv_number(os, mb(i));
            }
            os << "\n";
        }
    }
}

void write_cloud_csv(const std::string& path, const EmpiricalMeasure& mu,
                     bool with_weights) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    for (int p = 0; p < mu.size(); ++p) {
        for (int i = 0; i < mu.dim(); ++i) {
            if (i) os << ",";
            csv_number(os, mu.particles(p, i));
        }
        if (with_weights) {
            os << ",";
            csv_number(os, mu.weights(p));
        }
        os << "\n";
    }
}

}  // namespace mfac
