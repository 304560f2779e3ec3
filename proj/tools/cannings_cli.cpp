// cannings: command-line front end for the mixed multinomial Cannings toolkit.
//
// Exit codes: 0 success / all checks pass, 1 check failure or empty result,
// 2 usage, configuration or execution error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cannings/report.hpp"

using namespace cannings;

namespace {

std::vector<int> parse_query(const std::string& q, int& j) {
    auto colon = q.find(':');
    if (colon == std::string::npos) throw UsageError("query must look like j:k1,k2,... (got '" + q + "')");
    try {
        j = std::stoi(q.substr(0, colon));
        std::vector<int> k;
        std::stringstream ss(q.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            size_t used = 0;
            int v = std::stoi(tok, &used);
            if (used != tok.size()) throw UsageError("bad group size '" + tok + "'");
            k.push_back(v);
        }
        detail::check_query({j, k});
        return k;
    } catch (const std::logic_error& e) {
        if (dynamic_cast<const UsageError*>(&e)) throw;
        throw UsageError("query must look like j:k1,k2,... (got '" + q + "')");
    }
}

std::string num(double v) { return fmt_g(v, 12); }

std::string params_text(const DistributionModel& m) {
    std::string s;
    for (auto& [k, v] : m.params()) s += " " + k + "=" + fmt_short(v);
    return s;
}

std::string opt_num(double v) { return std::isfinite(v) ? num(v) : "inf"; }

int cmd_catalog(bool as_json, const std::string& filter) {
    Json arr = Json::array();
    std::vector<std::string> lines;
    for (auto& spec : catalog_specs()) {
        auto m = make_model(spec);
        if (!filter.empty() && m->id().find(filter) == std::string::npos) continue;
        auto pred = classify(m);
        auto a = m->alpha();
        if (as_json) {
            Json e;
            e["spec"] = spec;
            e["model"] = m->id();
            e["alpha"] = a ? Json(*a) : Json(nullptr);
            e["mu"] = std::isfinite(m->mu()) ? Json(m->mu()) : Json(nullptr);
            e["rho"] = std::isfinite(m->rho()) ? Json(m->rho()) : Json(nullptr);
            e["regime"] = regime_key(pred.regime);
            e["label"] = pred.label;
            arr.push_back(e);
        } else {
            lines.push_back(m->name() + params_text(*m) + " → " + pred.label + "  [alpha=" +
                            (a ? num(*a) : std::string("n/a")) + " mu=" + opt_num(m->mu()) + " rho=" +
                            opt_num(m->rho()) + " regime=" + regime_key(pred.regime) + "]");
        }
    }
    if ((as_json && arr.empty()) || (!as_json && lines.empty())) {
        std::cerr << "no catalog entry matches '" << filter << "'\n";
        return 1;
    }
    if (as_json)
        std::cout << arr.dump(2) << "\n";
    else
        for (auto& l : lines) std::cout << l << "\n";
    return 0;
}

struct MomentsArgs {
    std::string model, query = "1:2", method = "exact", estimator = "auto";
    int N = 0;
    long reps = 10000;
    std::uint64_t seed = 1;
    double delta = 1.0, tol = 1e-9;
    int workers = 0;
    bool json = false;
};

int cmd_moments(const MomentsArgs& a) {
    auto m = make_model(a.model);
    int j = 0;
    auto k = parse_query(a.query, j);
    QuadratureConfig q{a.delta, a.tol, 4000};
    q.validate();
    McOptions o;
    o.reps = a.reps;
    o.seed = a.seed;
    o.workers = a.workers > 0 ? a.workers : default_workers();
    std::string qs = "Phi_" + std::to_string(j) + "(" + a.query.substr(a.query.find(':') + 1) + ")";
    Json out;
    out["model"] = m->id();
    out["N"] = a.N;
    out["query"] = a.query;
    std::optional<MomentResult> ex;
    std::optional<EstimateCI> mc;
    if (a.method == "exact" || a.method == "both") {
        ex = phi_exact(*m, a.N, j, k, q);
        out["exact"] = {{"value", ex->value}, {"error", ex->error}, {"method", ex->method},
                        {"tail_bounded", ex->tail_bounded}};
        if (!a.json)
            std::cout << qs << " N=" << a.N << " model=" << m->id() << " value=" << num(ex->value)
                      << " error=" << num(ex->error) << " method=" << ex->method << "\n";
    }
    if (a.method == "mc" || a.method == "both") {
        bool conditional = a.estimator == "conditional";
        if (a.estimator == "auto") {
            // plain power sums are unreliable once E X^{2 max k} is infinite
            int kmax = *std::max_element(k.begin(), k.end());
            conditional = !std::isfinite(m->raw_moment(2.0 * kmax));
        }
        mc = conditional ? estimate_phi_conditional(*m, a.N, j, k, o) : estimate_phi(*m, a.N, j, k, o);
        out["mc"] = {{"value", mc->value}, {"se", mc->se}, {"reps", mc->replicates}, {"seed", mc->seed},
                     {"method", mc->method}};
        if (!a.json)
            std::cout << qs << " N=" << a.N << " model=" << m->id() << " value=" << num(mc->value)
                      << " se=" << num(mc->se) << " reps=" << mc->replicates << " seed=" << mc->seed
                      << " method=" << mc->method << "\n";
    }
    if (ex && mc) {
        double s = std::hypot(mc->se, ex->error);
        double z = s > 0 ? (mc->value - ex->value) / s : 0.0;
        out["z"] = z;
        if (!a.json) std::cout << "agreement z=" << num(z) << " method=integral-vs-monte-carlo\n";
    }
    if (a.json) std::cout << out.dump(2) << "\n";
    return 0;
}

struct SimulateArgs {
    std::string model, out;
    int N = 0, n = 2;
    long horizon = 1000000, paths = 1;
    std::uint64_t seed = 1;
    int workers = 0;
};

int cmd_simulate(const SimulateArgs& a) {
    auto m = make_model(a.model);
    if (a.n < 1 || a.n > a.N) throw UsageError("simulate: need 1 <= n <= N");
    if (a.paths < 1 || a.horizon < 0) throw UsageError("simulate: need paths >= 1 and horizon >= 0");
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out);
        if (!file) throw std::runtime_error("cannot write " + a.out);
        os = &file;
    }
    int workers = a.workers > 0 ? a.workers : default_workers();
    if (a.paths == 1) {
        Rng rng = make_stream(a.seed, {0});
        auto p = simulate_coalescent(*m, a.N, a.n, a.horizon, rng, true);
        *os << "generation,blocks,partition\n";
        for (size_t r = 0; r < p.states.size(); ++r)
            *os << r << "," << p.block_counts[r] << ",\"" << p.states[r].str() << "\"\n";
        std::cerr << "model=" << m->id() << " N=" << a.N << " n=" << a.n << " seed=" << a.seed << " mrca="
                  << (p.absorption ? std::to_string(*p.absorption) : "not reached within horizon " +
                                                                          std::to_string(a.horizon))
                  << " method=simulation\n";
        return 0;
    }
    std::vector<long> t(a.paths, -1);
    parallel_for(a.paths, workers, [&](long i) {
        Rng rng = make_stream(a.seed, {0, static_cast<std::uint64_t>(i)});
        auto p = simulate_coalescent(*m, a.N, a.n, a.horizon, rng, false);
        if (p.absorption) t[i] = *p.absorption;
    });
    *os << "path,mrca\n";
    detail::Welford w;
    for (long i = 0; i < a.paths; ++i) {
        *os << i << "," << (t[i] >= 0 ? std::to_string(t[i]) : "") << "\n";
        if (t[i] >= 0) w.add(static_cast<double>(t[i]));
    }
    double se = w.n > 1 ? std::sqrt(w.m2 / (w.n - 1) / w.n) : 0.0;
    std::cerr << "model=" << m->id() << " N=" << a.N << " n=" << a.n << " paths=" << a.paths
              << " absorbed=" << w.n << " mean_mrca=" << num(w.mean) << " se=" << num(se)
              << " method=simulation\n";
    return 0;
}

struct CurveArgs {
    std::string model, grid = "100,1000,10000";
    long reps = 2000;
    std::uint64_t seed = 20240601;
    double delta = 1.0, tol = 1e-9;
    int workers = 0;
    bool no_mc = false;
};

int cmd_cn_curve(const CurveArgs& a) {
    auto m = make_model(a.model);
    std::vector<int> grid;
    std::stringstream ss(a.grid);
    std::string tok;
    while (std::getline(ss, tok, ',')) grid.push_back(static_cast<int>(std::stod(tok)));
    VerifyConfig vc;
    vc.quad = {a.delta, a.tol, 4000};
    vc.quad.validate();
    vc.seed = a.seed;
    vc.mc = !a.no_mc;
    vc.mc_reps = a.reps;
    vc.workers = a.workers > 0 ? a.workers : default_workers();
    auto rows = cn_curve(m, grid, vc);
    std::cout << "model,N,cn_exact,cn_exact_error,cn_mc,cn_mc_se,cn_mc_reps,cn_predicted,ratio,regime\n";
    for (auto& r : rows)
        std::cout << "\"" << r.model << "\"," << r.N << "," << csv_num(r.cn_exact) << "," << csv_num(r.cn_exact_error)
                  << "," << (r.mc_run ? csv_num(r.cn_mc) : "") << "," << (r.mc_run ? csv_num(r.cn_mc_se) : "") << ","
                  << r.cn_mc_reps << "," << csv_num(r.cn_predicted) << "," << csv_num(r.ratio) << "," << r.regime
                  << "\n";
    std::set<std::string> methods;
    for (auto& r : rows)
        if (r.mc_run) methods.insert(r.mc_method);
    std::string ms;
    for (auto& x : methods) ms += (ms.empty() ? "" : ",") + x;
    std::cerr << "cn_exact method=integral";
    if (!ms.empty()) std::cerr << "; cn_mc method=" << ms << " (seed " << a.seed << ")";
    std::cerr << "\n";
    return 0;
}

struct VerifyArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<long> reps;
    std::optional<double> delta, tol;
};

int cmd_verify(const VerifyArgs& a) {
    RunConfig rc = load_run_config(a.config);
    if (a.seed) rc.verify.seed = *a.seed;
    if (a.workers) rc.verify.workers = *a.workers;
    if (a.reps) rc.verify.mc_reps = *a.reps;
    if (a.delta) rc.verify.quad.delta = *a.delta;
    if (a.tol) rc.verify.quad.rel_tol = *a.tol;
    rc.verify.quad.validate();
    if (!a.out.empty()) rc.output_dir = a.out;
    VerificationReport rep = run_report(rc);
    write_report(rep, rc.output_dir);
    int failed = 0;
    for (auto& m : rep.models) {
        int nf = 0;
        for (auto& c : m.checks)
            if (!c.pass) {
                ++nf;
                std::cout << "  FAIL " << m.model->id() << " " << c.name << " [" << c.query << "] N=" << c.N
                          << " observed=" << num(c.observed) << " target=" << num(c.target) << " tol=" << num(c.tolerance)
                          << " rule=" << c.rule << " method=" << c.method << "\n";
            }
        std::cout << (nf ? "FAIL " : "PASS ") << m.model->id() << " -> " << m.prediction.label << " ("
                  << m.checks.size() - nf << "/" << m.checks.size() << " checks)\n";
        failed += nf;
    }
    std::cout << "report: " << (std::filesystem::path(rc.output_dir) / "report.json").string() << "\n";
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed multinomial Cannings models: exact moments, simulation and regime verification"};
    app.require_subcommand(1);

    bool cat_json = false;
    std::string cat_filter;
    auto* cat = app.add_subcommand("catalog", "List catalog models with regime metadata");
    cat->add_flag("--json", cat_json, "Machine-readable listing");
    cat->add_option("--filter", cat_filter, "Substring of the model id");

    MomentsArgs ma;
    auto* mom = app.add_subcommand("moments", "Evaluate Phi_j(k) for one model and population size");
    mom->add_option("--model", ma.model, "Model spec, e.g. pareto:alpha=1.5")->required();
    mom->add_option("--N", ma.N, "Population size")->required()->check(CLI::PositiveNumber);
    mom->add_option("--query", ma.query, "j:k1,...,kj")->capture_default_str();
    mom->add_option("--method", ma.method, "exact, mc or both")->capture_default_str()->check(CLI::IsMember({"exact", "mc", "both"}));
    mom->add_option("--estimator", ma.estimator, "Monte Carlo estimator: auto, plain or conditional")
        ->capture_default_str()
        ->check(CLI::IsMember({"auto", "plain", "conditional"}));
    mom->add_option("--reps", ma.reps, "Monte Carlo replicates")->capture_default_str();
    mom->add_option("--seed", ma.seed, "Seed")->capture_default_str();
    mom->add_option("--delta", ma.delta, "Quadrature split point")->capture_default_str();
    mom->add_option("--tol", ma.tol, "Quadrature relative tolerance")->capture_default_str();
    mom->add_option("--workers", ma.workers, "Worker threads (0 = available)")->capture_default_str();
    mom->add_flag("--json", ma.json, "JSON output");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Simulate the ancestral partition process of a sample");
    sim->add_option("--model", sa.model, "Model spec")->required();
    sim->add_option("--N", sa.N, "Population size")->required()->check(CLI::PositiveNumber);
    sim->add_option("--n", sa.n, "Sample size")->capture_default_str();
    sim->add_option("--horizon", sa.horizon, "Maximum number of generations")->capture_default_str();
    sim->add_option("--paths", sa.paths, "Independent paths; >1 prints MRCA times only")->capture_default_str();
    sim->add_option("--seed", sa.seed, "Seed")->capture_default_str();
    sim->add_option("--workers", sa.workers, "Worker threads (0 = available)")->capture_default_str();
    sim->add_option("--out", sa.out, "CSV output file (default stdout)");

    CurveArgs ca;
    auto* cur = app.add_subcommand("cn-curve", "c_N along an N grid: exact, Monte Carlo and predicted");
    cur->add_option("--model", ca.model, "Model spec")->required();
    cur->add_option("--N", ca.grid, "Comma-separated population sizes")->capture_default_str();
    cur->add_option("--reps", ca.reps, "Monte Carlo replicates per N")->capture_default_str();
    cur->add_option("--seed", ca.seed, "Seed")->capture_default_str();
    cur->add_option("--delta", ca.delta, "Quadrature split point")->capture_default_str();
    cur->add_option("--tol", ca.tol, "Quadrature relative tolerance")->capture_default_str();
    cur->add_option("--workers", ca.workers, "Worker threads (0 = available)")->capture_default_str();
    cur->add_flag("--no-mc", ca.no_mc, "Skip the Monte Carlo column");

    VerifyArgs va;
    auto* ver = app.add_subcommand("verify", "Run a verification config; writes report.json and curves.csv");
    ver->add_option("config", va.config, "JSON run configuration")->required();
    ver->add_option("--out", va.out, "Output directory (overrides output_dir)");
    ver->add_option("--seed", va.seed, "Seed override");
    ver->add_option("--workers", va.workers, "Worker threads override (0 = available)");
    ver->add_option("--reps", va.reps, "Monte Carlo replicates override");
    ver->add_option("--delta", va.delta, "Quadrature split point override");
    ver->add_option("--tol", va.tol, "Quadrature relative tolerance override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cat) return cmd_catalog(cat_json, cat_filter);
        if (*mom) return cmd_moments(ma);
        if (*sim) return cmd_simulate(sa);
        if (*cur) return cmd_cn_curve(ca);
        if (*ver) return cmd_verify(va);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
