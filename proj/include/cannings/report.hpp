#pragma once
// Run configuration (JSON), report assembly and serialization.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "regime_verifier.hpp"

namespace cannings {

using Json = nlohmann::ordered_json;

struct ModelEntry {
    std::string spec;
    std::vector<int> N_grid;  // empty: use the global grid
    std::optional<long> reps;
    std::optional<int> transition_N;
};

struct RunConfig {
    VerifyConfig verify;
    std::vector<int> N_grid{100, 1000, 10000, 100000};
    std::string output_dir = "verify-out";
    std::vector<ModelEntry> models;
};

namespace detail {

inline void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get_as(const Json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + ": wrong type (" + std::string(j.type_name()) + ")");
    }
}

inline std::vector<int> parse_grid(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of population sizes");
    std::vector<int> g;
    for (auto& v : j) {
        double x = get_as<double>(v, where);
        if (!(x >= 2 && x <= 1e8) || !is_integer(x)) throw ConfigError(where + ": entries must be integers in [2, 1e8]");
        g.push_back(static_cast<int>(x));
    }
    for (size_t i = 1; i < g.size(); ++i)
        if (g[i] <= g[i - 1]) throw ConfigError(where + ": must be strictly increasing");
    return g;
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& j) {
    using detail::get_as;
    detail::reject_unknown(j,
                           {"seed", "workers", "quadrature", "mc", "sample_size", "genealogy_paths",
                            "transition_steps", "N_grid", "output_dir", "models"},
                           "config");
    RunConfig c;
    auto& v = c.verify;
    if (j.contains("seed")) v.seed = get_as<std::uint64_t>(j["seed"], "seed");
    if (j.contains("workers")) {
        v.workers = get_as<int>(j["workers"], "workers");
        if (v.workers < 0) throw ConfigError("workers: must be >= 0 (0 = available parallelism)");
    } else {
        v.workers = 0;
    }
    if (j.contains("quadrature")) {
        auto& q = j["quadrature"];
        detail::reject_unknown(q, {"delta", "rel_tol", "max_subdivisions"}, "quadrature");
        if (q.contains("delta")) v.quad.delta = get_as<double>(q["delta"], "quadrature.delta");
        if (q.contains("rel_tol")) v.quad.rel_tol = get_as<double>(q["rel_tol"], "quadrature.rel_tol");
        if (q.contains("max_subdivisions"))
            v.quad.max_subdivisions = get_as<int>(q["max_subdivisions"], "quadrature.max_subdivisions");
    }
    v.quad.validate();
    if (j.contains("mc")) {
        auto& m = j["mc"];
        detail::reject_unknown(m, {"enabled", "reps", "batch", "max_draws", "plain_max_N"}, "mc");
        if (m.contains("enabled")) v.mc = get_as<bool>(m["enabled"], "mc.enabled");
        if (m.contains("reps")) v.mc_reps = get_as<long>(m["reps"], "mc.reps");
        if (m.contains("batch")) v.mc_batch = get_as<long>(m["batch"], "mc.batch");
        if (m.contains("max_draws")) v.mc_max_draws = get_as<double>(m["max_draws"], "mc.max_draws");
        if (m.contains("plain_max_N")) v.plain_max_N = get_as<int>(m["plain_max_N"], "mc.plain_max_N");
    }
    if (v.mc_reps < 2) throw ConfigError("mc.reps: need at least 2");
    if (v.mc_batch < 1) throw ConfigError("mc.batch: must be positive");
    if (!(v.mc_max_draws > 0)) throw ConfigError("mc.max_draws: must be positive");
    if (j.contains("sample_size")) v.sample_size = get_as<int>(j["sample_size"], "sample_size");
    if (v.sample_size < 1) throw ConfigError("sample_size: must be at least 1");
    if (j.contains("genealogy_paths")) v.genealogy_paths = get_as<long>(j["genealogy_paths"], "genealogy_paths");
    if (v.genealogy_paths < 0) throw ConfigError("genealogy_paths: must be >= 0");
    if (j.contains("transition_steps")) v.transition_steps = get_as<long>(j["transition_steps"], "transition_steps");
    if (v.transition_steps < 0) throw ConfigError("transition_steps: must be >= 0");
    if (j.contains("N_grid")) c.N_grid = detail::parse_grid(j["N_grid"], "N_grid");
    if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j["output_dir"], "output_dir");

    if (!j.contains("models") || !j["models"].is_array() || j["models"].empty())
        throw ConfigError("models: expected a non-empty array");
    int idx = 0;
    for (auto& m : j["models"]) {
        std::string where = "models[" + std::to_string(idx++) + "]";
        ModelEntry e;
        if (m.is_string()) {
            e.spec = m.get<std::string>();
        } else {
            detail::reject_unknown(m, {"spec", "N_grid", "reps", "transition_N"}, where);
            if (!m.contains("spec")) throw ConfigError(where + ": missing 'spec'");
            e.spec = get_as<std::string>(m["spec"], where + ".spec");
            if (m.contains("N_grid")) e.N_grid = detail::parse_grid(m["N_grid"], where + ".N_grid");
            if (m.contains("reps")) {
                e.reps = get_as<long>(m["reps"], where + ".reps");
                if (*e.reps < 2) throw ConfigError(where + ".reps: need at least 2");
            }
            if (m.contains("transition_N")) {
                e.transition_N = get_as<int>(m["transition_N"], where + ".transition_N");
                if (*e.transition_N < 4) throw ConfigError(where + ".transition_N: must be at least 4");
            }
        }
        make_model(e.spec);  // validates the spec
        c.models.push_back(std::move(e));
    }
    return c;
}

// Parse errors carry nlohmann's "at line L, column C" position.
inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_run_config(j);
}

// ---------------------------------------------------------------------------

struct ModelReport {
    ModelEntry entry;
    ModelPtr model;
    RegimePrediction prediction;
    std::vector<int> grid;
    int transition_N = 0;
    std::vector<CurveRow> rows;
    std::vector<CheckResult> checks;
    std::vector<SecondOrderPoint> second_order;
    std::optional<GenealogySummary> genealogy;
    bool pass = false;
};

struct VerificationReport {
    RunConfig config;
    std::vector<ModelReport> models;
    bool pass = false;
};

inline ModelReport verify_model(const ModelEntry& e, const RunConfig& rc, int model_index) {
    ModelReport r;
    r.entry = e;
    r.model = make_model(e.spec);
    r.prediction = classify(r.model);
    r.grid = e.N_grid.empty() ? rc.N_grid : e.N_grid;
    r.transition_N = e.transition_N.value_or(r.grid.back());
    VerifyConfig vc = rc.verify;
    if (e.reps) vc.mc_reps = *e.reps;

    r.rows = cn_curve(r.model, r.grid, vc, model_index);
    r.checks = curve_checks(r.prediction, r.rows);
    auto lt = verify_limit_transitions(r.model, r.transition_N, vc, r.grid);
    r.checks.insert(r.checks.end(), lt.begin(), lt.end());
    if (r.prediction.regime == Regime::BolthausenSznitman)
        r.second_order = bs_second_order_check(*r.model, r.grid, vc.quad);

    int N0 = r.grid.front();
    if (vc.transition_steps > 0) {
        auto tf = transition_frequency_checks(*r.model, N0, vc.sample_size, vc.transition_steps, vc,
                                              cell_stream(model_index, 0, 1));
        r.checks.insert(r.checks.end(), tf.begin(), tf.end());
    }
    if (vc.genealogy_paths > 0 && vc.sample_size <= N0)
        r.genealogy = genealogy_summary(*r.model, N0, r.rows.front().cn_exact, vc, cell_stream(model_index, 0, 2));
    r.pass = std::all_of(r.checks.begin(), r.checks.end(), [](auto& c) { return c.pass; });
    return r;
}

inline VerificationReport run_report(RunConfig rc) {
    if (rc.verify.workers <= 0) rc.verify.workers = default_workers();
    VerificationReport rep;
    rep.config = rc;
    for (size_t i = 0; i < rc.models.size(); ++i) rep.models.push_back(verify_model(rc.models[i], rc, static_cast<int>(i)));
    rep.pass = std::all_of(rep.models.begin(), rep.models.end(), [](auto& m) { return m.pass; });
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization. JSON numbers use the shortest round-trip form, CSV %.17g.

namespace detail {
inline Json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}
}  // namespace detail

inline Json config_to_json(const RunConfig& c) {
    const auto& v = c.verify;
    Json j;
    j["seed"] = v.seed;
    j["workers"] = v.workers;
    j["quadrature"] = {{"delta", v.quad.delta}, {"rel_tol", v.quad.rel_tol}, {"max_subdivisions", v.quad.max_subdivisions}};
    j["mc"] = {{"enabled", v.mc}, {"reps", v.mc_reps}, {"batch", v.mc_batch}, {"max_draws", v.mc_max_draws}, {"plain_max_N", v.plain_max_N}};
    j["sample_size"] = v.sample_size;
    j["genealogy_paths"] = v.genealogy_paths;
    j["transition_steps"] = v.transition_steps;
    j["N_grid"] = c.N_grid;
    j["output_dir"] = c.output_dir;
    Json ms = Json::array();
    for (auto& m : c.models) {
        Json e;
        e["spec"] = m.spec;
        e["N_grid"] = m.N_grid.empty() ? c.N_grid : m.N_grid;
        e["reps"] = m.reps.value_or(v.mc_reps);
        e["transition_N"] = m.transition_N.value_or((m.N_grid.empty() ? c.N_grid : m.N_grid).back());
        ms.push_back(e);
    }
    j["models"] = ms;
    return j;
}

inline Json check_to_json(const CheckResult& c) {
    return {{"name", c.name},          {"query", c.query},   {"N", c.N},
            {"observed", detail::num(c.observed)}, {"target", detail::num(c.target)},
            {"tolerance", c.tolerance}, {"rule", c.rule},     {"method", c.method},
            {"pass", c.pass}};
}

inline Json report_to_json(const VerificationReport& rep) {
    using detail::num;
    Json j;
    j["config"] = config_to_json(rep.config);
    Json ms = Json::array();
    for (auto& m : rep.models) {
        Json e;
        e["spec"] = m.entry.spec;
        e["model"] = m.model->id();
        e["regime"] = regime_key(m.prediction.regime);
        e["label"] = m.prediction.label;
        e["alpha"] = m.prediction.alpha ? Json(*m.prediction.alpha) : Json(nullptr);
        e["mu"] = num(m.model->mu());
        e["rho"] = num(m.model->rho());
        e["N_grid"] = m.grid;
        e["transition_N"] = m.transition_N;
        Json rows = Json::array();
        for (auto& r : m.rows) {
            Json x;
            x["N"] = r.N;
            x["cn_exact"] = num(r.cn_exact);
            x["cn_exact_error"] = num(r.cn_exact_error);
            x["cn_exact_method"] = "integral";
            if (r.mc_run) {
                x["cn_mc"] = num(r.cn_mc);
                x["cn_mc_se"] = num(r.cn_mc_se);
                x["cn_mc_reps"] = r.cn_mc_reps;
                x["cn_mc_method"] = r.mc_method;
                x["z"] = num(r.z);
            }
            if (r.plain_run) {
                x["cn_plain"] = num(r.cn_plain);
                x["cn_plain_se"] = num(r.cn_plain_se);
                x["cn_plain_method"] = "monte-carlo";
                x["z_plain"] = num(r.z_plain);
            }
            x["cn_predicted"] = num(r.cn_predicted);
            x["ratio"] = num(r.ratio);
            rows.push_back(x);
        }
        e["curve"] = rows;
        if (!m.second_order.empty()) {
            Json so = Json::array();
            for (auto& p : m.second_order) so.push_back({{"N", p.N}, {"phi22_over_cN2", num(p.value)}, {"error", num(p.error)}});
            e["second_order"] = so;
        }
        Json cs = Json::array();
        for (auto& c : m.checks) cs.push_back(check_to_json(c));
        e["checks"] = cs;
        if (m.genealogy) {
            auto& g = *m.genealogy;
            e["genealogy"] = {{"N", g.N},
                              {"n", g.n},
                              {"paths", g.paths},
                              {"absorbed", g.absorbed},
                              {"horizon", g.horizon},
                              {"mean_mrca", num(g.mean_mrca)},
                              {"se_mrca", num(g.se_mrca)},
                              {"mean_mrca_times_cN", num(g.mean_mrca_scaled)},
                              {"method", "simulation"}};
        }
        e["pass"] = m.pass;
        ms.push_back(e);
    }
    j["models"] = ms;
    j["pass"] = rep.pass;
    return j;
}

inline std::string csv_num(double v) { return std::isfinite(v) ? fmt_g(v, 17) : std::string(); }

inline std::string curves_csv(const VerificationReport& rep) {
    std::string s = "model,N,cn_exact,cn_mc,cn_mc_se,cn_predicted,ratio,regime\n";
    for (auto& m : rep.models)
        for (auto& r : m.rows) {
            // ids contain commas, so quote them
            s += "\"" + r.model + "\"," + std::to_string(r.N) + "," + csv_num(r.cn_exact) + "," +
                 (r.mc_run ? csv_num(r.cn_mc) : "") + "," + (r.mc_run ? csv_num(r.cn_mc_se) : "") + "," +
                 csv_num(r.cn_predicted) + "," + csv_num(r.ratio) + "," + r.regime + "\n";
        }
    return s;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + p.string());
}

inline void write_report(const VerificationReport& rep, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text(dir / "report.json", report_to_json(rep).dump(2) + "\n");
    write_text(dir / "curves.csv", curves_csv(rep));
}

}  // namespace cannings
