#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "osnet/model.hpp"
#include "osnet/ode.hpp"
#include "osnet/stability.hpp"
#include "osnet/systems.hpp"
#include "osnet/train.hpp"

/// \file io.hpp
/// File formats: trajectory CSV (17 significant digits, lossless for
/// doubles), checkpoint JSON, train/stability/attractor report JSON, and
/// the experiment configuration with its built-in presets.

namespace osnet {

using json = nlohmann::json;

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline std::string trajectory_to_csv(const Trajectory& traj) {
    std::string out = "t";
    for (int i = 0; i < traj.dim(); ++i) out += ",x" + std::to_string(i);
    out += "\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out += detail::format_double(traj.times()[k]);
        for (int i = 0; i < traj.dim(); ++i)
            out += "," + detail::format_double(traj.states()[k][i]);
        out += "\n";
    }
    return out;
}

inline Trajectory trajectory_from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw io_error("trajectory CSV: empty input");
    if (line.rfind("t,", 0) != 0) throw io_error("trajectory CSV: bad header: " + line);

    int dim = 0;
    for (char c : line)
        if (c == ',') ++dim;

    std::vector<double> times;
    std::vector<Vector> states;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> fields;
        const char* p = line.c_str();
        char* end = nullptr;
        while (true) {
            const double v = std::strtod(p, &end);
            if (end == p)
                throw io_error("trajectory CSV: parse error on line " + std::to_string(lineno));
            fields.push_back(v);
            if (*end == '\0' || *end == '\r') break;
            if (*end != ',')
                throw io_error("trajectory CSV: unexpected character on line " +
                               std::to_string(lineno));
            p = end + 1;
        }
        if (static_cast<int>(fields.size()) != dim + 1)
            throw io_error("trajectory CSV: wrong field count on line " + std::to_string(lineno));
        times.push_back(fields[0]);
        states.emplace_back(std::vector<double>(fields.begin() + 1, fields.end()));
    }
    if (times.empty()) throw io_error("trajectory CSV: no data rows");
    try {
        return Trajectory(std::move(times), std::move(states));
    } catch (const std::invalid_argument& e) {
        throw io_error(std::string("trajectory CSV: ") + e.what());
    }
}

inline std::string crossings_to_csv(const std::vector<Crossing>& crossings, int dim) {
    std::string out = "t";
    for (int i = 0; i < dim; ++i) out += ",x_" + std::to_string(i);
    out += "\n";
    for (const auto& c : crossings) {
        out += detail::format_double(c.time);
        for (int i = 0; i < dim; ++i) out += "," + detail::format_double(c.point[i]);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint
// ---------------------------------------------------------------------------

struct Checkpoint {
    OsNet net;
    std::uint64_t seed = 0;
    std::string provenance;
};

inline json activation_to_json(const ActivationSpec& act) {
    json j{{"kind", to_string(act.kind)}};
    if (act.kind == ActivationKind::snake) j["a"] = act.a;
    return j;
}

inline ActivationSpec activation_from_json(const json& j) {
    ActivationSpec act;
    act.kind = activation_kind_from_string(j.at("kind").get<std::string>());
    if (act.kind == ActivationKind::snake) act.a = j.at("a").get<double>();
    act.validate();
    return act;
}

inline json checkpoint_to_json(const Checkpoint& ckpt) {
    ckpt.net.validate();
    return json{{"n", ckpt.net.n},
                {"m", ckpt.net.m},
                {"activation", activation_to_json(ckpt.net.activation)},
                {"W", ckpt.net.W.data()},
                {"K", ckpt.net.K.data()},
                {"b", ckpt.net.b.data()},
                {"seed", ckpt.seed},
                {"provenance", ckpt.provenance}};
}

inline Checkpoint checkpoint_from_json(const json& j) {
    Checkpoint ckpt;
    ckpt.net.n = j.at("n").get<int>();
    ckpt.net.m = j.at("m").get<int>();
    ckpt.net.activation = activation_from_json(j.at("activation"));
    const int hidden = 2 * ckpt.net.m;
    ckpt.net.W = Matrix(ckpt.net.n, hidden, j.at("W").get<std::vector<double>>());
    ckpt.net.K = Matrix(hidden, hidden, j.at("K").get<std::vector<double>>());
    ckpt.net.b = Vector(j.at("b").get<std::vector<double>>());
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.provenance = j.value("provenance", "");
    ckpt.net.validate();
    return ckpt;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json train_report_to_json(const TrainReport& report) {
    json epochs = json::array();
    for (const auto& e : report.epochs) {
        epochs.push_back(json{{"epoch", e.epoch},
                              {"data_loss", e.data_loss},
                              {"reg_value", e.reg_value},
                              {"total_loss", e.total_loss},
                              {"gradient_norm", e.gradient_norm},
                              {"line_search_evals", e.line_search_evals},
                              {"line_search_failed", e.line_search_failed},
                              {"divergence_seen", e.divergence_seen}});
    }
    return json{{"epochs", std::move(epochs)},
                {"final",
                 json{{"j_a_norm", report.final.j_a_norm},
                      {"wall_time_seconds", report.final.wall_time_seconds},
                      {"omega_min", report.final.omega_min},
                      {"omega_max", report.final.omega_max}}}};
}

inline json attractor_report_to_json(const AttractorReport& report, bool include_crossings = true) {
    json period;
    switch (report.kind) {
        case PeriodKind::periodic:
            period = json{{"kind", "periodic"}, {"k", report.period_k}};
            break;
        case PeriodKind::aperiodic:
            period = json{{"kind", "aperiodic"}};
            break;
        case PeriodKind::inconclusive:
            period = json{{"kind", "inconclusive"}};
            break;
    }
    json j{{"period", std::move(period)},
           {"cluster_tolerance_used", report.cluster_tolerance_used},
           {"clusters_found", report.clusters_found},
           {"crossing_count", report.crossings.size()},
           {"bounded", report.bounded},
           {"max_norm_observed", report.max_norm_observed}};
    if (report.period_T) j["period_T"] = *report.period_T;
    if (include_crossings) {
        json rows = json::array();
        for (const auto& c : report.crossings) {
            json row = json::array();
            row.push_back(c.time);
            for (int i = 0; i < c.point.dim(); ++i) row.push_back(c.point[i]);
            rows.push_back(std::move(row));
        }
        j["crossings"] = std::move(rows);
    }
    return j;
}

inline json stability_report_to_json(const StabilityReport& report) {
    json j{{"j_a_norm", report.j_a_norm},
           {"corollary_threshold", report.corollary_threshold},
           {"corollary_satisfied", report.corollary_satisfied},
           {"notes", report.notes}};
    if (report.floquet_multipliers) {
        json rows = json::array();
        for (const auto& z : report.floquet_multipliers->eigenvalues)
            rows.push_back(json::array({z.real(), z.imag()}));
        j["floquet_multipliers"] = std::move(rows);
    }
    if (report.krein_bound) j["krein_bound"] = *report.krein_bound;
    return j;
}

// ---------------------------------------------------------------------------
// Experiment configuration and presets
// ---------------------------------------------------------------------------

struct DataConfig {
    double t0 = 0.0;
    double t1 = 10.0;
    double gen_step = 0.001;
    int snapshot_stride = 50;
    std::optional<Vector> initial_condition;         // nullopt: the stored "paper" IC
    std::optional<Vector> validation_perturbation;   // nullopt: the stored offset
};

struct ModelConfig {
    int hidden_2m = 32;
    ActivationSpec activation;
};

struct AnalysisConfig {
    double rollout_horizon = 100.0;
    double long_horizon = 10000.0;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    SystemSpec system;
    DataConfig data;
    ModelConfig model;
    TrainConfig train;
    AnalysisConfig analysis;

    void validate() const {
        require(data.t1 > data.t0, "config: data.t1 must exceed data.t0");
        require(data.gen_step > 0.0, "config: data.gen_step must be positive");
        require(data.snapshot_stride >= 1, "config: snapshot_stride must be >= 1");
        require(model.hidden_2m >= 2 && model.hidden_2m % 2 == 0,
                "config: hidden_2m must be even and >= 2");
        model.activation.validate();
        train.validate();
        require(analysis.rollout_horizon > 0.0 && analysis.long_horizon > 0.0,
                "config: analysis horizons must be positive");
    }

    /// The stored initial condition, resolving "paper" against the system.
    Vector resolve_initial_condition() const {
        if (data.initial_condition) return *data.initial_condition;
        const auto ic = paper_initial_condition(system);
        require(ic.has_value(), "config: no stored initial condition for these parameters; "
                                "set data.initial_condition explicitly");
        return *ic;
    }

    Vector resolve_validation_perturbation() const {
        if (data.validation_perturbation) return *data.validation_perturbation;
        const auto p = paper_validation_perturbation(system);
        require(p.has_value(), "config: no stored validation perturbation for these parameters");
        return *p;
    }
};

inline json experiment_config_to_json(const ExperimentConfig& cfg) {
    json data{{"t0", cfg.data.t0},
              {"t1", cfg.data.t1},
              {"gen_step", cfg.data.gen_step},
              {"snapshot_stride", cfg.data.snapshot_stride}};
    data["initial_condition"] =
        cfg.data.initial_condition ? json(cfg.data.initial_condition->data()) : json("paper");
    data["validation_perturbation"] = cfg.data.validation_perturbation
                                          ? json(cfg.data.validation_perturbation->data())
                                          : json("paper");
    return json{
        {"seed", cfg.seed},
        {"system", json{{"name", to_string(cfg.system.name)}, {"params", cfg.system.params}}},
        {"data", std::move(data)},
        {"model", json{{"hidden_2m", cfg.model.hidden_2m},
                       {"activation", activation_to_json(cfg.model.activation)}}},
        {"train", json{{"alpha", cfg.train.alpha},
                       {"epochs", cfg.train.epochs},
                       {"rollout_step", cfg.train.rollout_step},
                       {"seed", cfg.train.seed},
                       {"lbfgs", json{{"history", cfg.train.lbfgs.history},
                                      {"inner_iterations", cfg.train.lbfgs.inner_iterations},
                                      {"c1", cfg.train.lbfgs.c1},
                                      {"c2", cfg.train.lbfgs.c2},
                                      {"max_line_search", cfg.train.lbfgs.max_line_search}}}}},
        {"analysis", json{{"rollout_horizon", cfg.analysis.rollout_horizon},
                          {"long_horizon", cfg.analysis.long_horizon}}}};
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.seed = j.at("seed").get<std::uint64_t>();

    const json& sys = j.at("system");
    cfg.system.name = system_name_from_string(sys.at("name").get<std::string>());
    cfg.system.params = sys.at("params").get<std::map<std::string, double>>();

    const json& data = j.at("data");
    cfg.data.t0 = data.at("t0").get<double>();
    cfg.data.t1 = data.at("t1").get<double>();
    cfg.data.gen_step = data.at("gen_step").get<double>();
    cfg.data.snapshot_stride = data.at("snapshot_stride").get<int>();
    if (data.at("initial_condition").is_array())
        cfg.data.initial_condition = Vector(data.at("initial_condition").get<std::vector<double>>());
    if (data.at("validation_perturbation").is_array())
        cfg.data.validation_perturbation =
            Vector(data.at("validation_perturbation").get<std::vector<double>>());

    const json& model = j.at("model");
    cfg.model.hidden_2m = model.at("hidden_2m").get<int>();
    cfg.model.activation = activation_from_json(model.at("activation"));

    const json& train = j.at("train");
    cfg.train.alpha = train.at("alpha").get<double>();
    cfg.train.epochs = train.at("epochs").get<int>();
    cfg.train.rollout_step = train.at("rollout_step").get<double>();
    cfg.train.seed = train.at("seed").get<std::uint64_t>();
    const json& lbfgs = train.at("lbfgs");
    cfg.train.lbfgs.history = lbfgs.at("history").get<int>();
    cfg.train.lbfgs.inner_iterations = lbfgs.at("inner_iterations").get<int>();
    cfg.train.lbfgs.c1 = lbfgs.at("c1").get<double>();
    cfg.train.lbfgs.c2 = lbfgs.at("c2").get<double>();
    cfg.train.lbfgs.max_line_search = lbfgs.at("max_line_search").get<int>();

    const json& analysis = j.at("analysis");
    cfg.analysis.rollout_horizon = analysis.at("rollout_horizon").get<double>();
    cfg.analysis.long_horizon = analysis.at("long_horizon").get<double>();

    cfg.validate();
    return cfg;
}

/// The three built-in experiment presets.
inline std::vector<std::string> preset_names() { return {"rossler6", "rossler18", "sprott21"}; }

inline ExperimentConfig preset(const std::string& name) {
    ExperimentConfig cfg;
    cfg.seed = 1;
    cfg.train.seed = 1;
    if (name == "rossler6") {
        cfg.system = {SystemName::rossler, {{"c", 6.0}}};
        cfg.data = {0.0, 10.0, 0.001, 50, std::nullopt, std::nullopt};
        cfg.model = {32, {ActivationKind::snake, 0.2}};
        cfg.train.alpha = 0.07;
        cfg.train.epochs = 10;
        cfg.train.rollout_step = 0.005;
    } else if (name == "rossler18") {
        cfg.system = {SystemName::rossler, {{"c", 18.0}}};
        cfg.data = {0.0, 10.0, 0.001, 10, std::nullopt, std::nullopt};
        cfg.model = {64, {ActivationKind::x_plus_sin, 0.0}};
        cfg.train.alpha = 2.0;
        cfg.train.epochs = 10;
        cfg.train.rollout_step = 0.005;
    } else if (name == "sprott21") {
        cfg.system = {SystemName::sprott, {{"nu", 2.1}}};
        cfg.data = {0.0, 15.0, 0.001, 10, std::nullopt, std::nullopt};
        cfg.model = {32, {ActivationKind::snake, 0.3}};
        cfg.train.alpha = 1.0;
        cfg.train.epochs = 20;
        cfg.train.rollout_step = 0.01;
    } else {
        throw std::invalid_argument("unknown preset: " + name +
                                    " (expected rossler6, rossler18 or sprott21)");
    }
    cfg.validate();
    return cfg;
}

/// FNV-1a hash of the canonical config dump; recorded as checkpoint
/// provenance.
inline std::string config_hash(const ExperimentConfig& cfg) {
    const std::string dump = experiment_config_to_json(cfg).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << content;
    if (!out) throw io_error("write failed for " + path);
}

inline json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw io_error("JSON parse error in " + path + ": " + e.what());
    }
}

}  // namespace osnet
