#pragma once
// Regime classification, c_N curves against the predicted rates, and the
// one-step limit-transition battery.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cannings_sim.hpp"
#include "dist_catalog.hpp"
#include "limit_coalescents.hpp"
#include "moments_exact.hpp"
#include "partitions.hpp"

namespace cannings {

struct RegimePrediction {
    Regime regime = Regime::KingmanMoment;
    std::string label;
    std::optional<double> alpha;
    std::optional<LambdaSpec> lambda;  // time-scaled regimes only
    // Table-1 rate for c_N
    std::function<double(double)> predicted_cN;
    // time-scaled regimes: limit of Phi_1(k)/c_N; discrete-time: limit of Phi_j(k)
    std::function<double(int, const std::vector<int>&)> limit;
    bool time_scaled() const { return regime != Regime::PoissonDirichlet && regime != Regime::StarShaped; }
};

namespace detail {
inline std::string short_num(double v) { return fmt_g(v, 10); }
}  // namespace detail

inline RegimePrediction classify(const ModelPtr& model) {
    RegimePrediction r;
    r.regime = regime_of(*model);
    r.alpha = model->alpha();
    ModelPtr keep = model;
    r.predicted_cN = [keep](double N) { return predicted_cN(*keep, N).value; };
    auto lambda_limit = [](LambdaSpec L) {
        return [L](int j, const std::vector<int>& k) {
            if (j != 1 || k.size() != 1) throw UsageError("time-scaled limits are defined for Phi_1(k)/c_N only");
            return lambda_moment(L, k[0]);
        };
    };
    switch (r.regime) {
        case Regime::KingmanMoment:
        case Regime::KingmanAlpha2:
            r.label = "Kingman";
            r.lambda = LambdaSpec::kingman();
            break;
        case Regime::Beta:
            r.label = "Beta(" + detail::short_num(2.0 - *r.alpha) + "," + detail::short_num(*r.alpha) + ")";
            r.lambda = LambdaSpec::beta(*r.alpha);
            break;
        case Regime::BolthausenSznitman:
            r.label = "Bolthausen-Sznitman";
            r.lambda = LambdaSpec::uniform();
            break;
        case Regime::PoissonDirichlet: {
            double a = *r.alpha;
            r.label = "PD(" + detail::short_num(a) + ",0)";
            r.limit = [a](int j, const std::vector<int>& k) { return pd_transition(a, j, k); };
            break;
        }
        case Regime::StarShaped:
            r.label = "star-shaped";
            r.limit = [](int j, const std::vector<int>& k) {
                if (static_cast<int>(k.size()) != j) throw UsageError("limit: need j group sizes");
                return j == 1 ? 1.0 : 0.0;
            };
            break;
    }
    if (r.lambda) r.limit = lambda_limit(*r.lambda);
    return r;
}

// ---------------------------------------------------------------------------
// Report pieces

struct VerifyConfig {
    QuadratureConfig quad;
    std::uint64_t seed = 20240601;
    int workers = 1;
    bool mc = true;
    long mc_reps = 2000;
    long mc_batch = 250;
    double mc_max_draws = 2e8;  // caps reps * N per cell
    int plain_max_N = 10000;    // plain power-sum cross-check up to this N
    int sample_size = 4;
    long genealogy_paths = 200;
    long transition_steps = 20000;
};

struct CurveRow {
    std::string model;
    int N = 0;
    double cn_exact = kNaN, cn_exact_error = kNaN;
    bool mc_run = false;
    std::string mc_method;
    double cn_mc = kNaN, cn_mc_se = kNaN;
    long cn_mc_reps = 0;
    bool plain_run = false;  // plain power-sum estimate alongside
    double cn_plain = kNaN, cn_plain_se = kNaN, z_plain = kNaN;
    double cn_predicted = kNaN, ratio = kNaN;
    double z = kNaN;
    std::string regime;
};

// Every check is re-derivable from (observed, target, tolerance, rule):
//   rel  |observed/target - 1| <= tolerance
//   abs  |observed - target| <= tolerance
//   max  observed <= tolerance (target is the limit, recorded for reference)
//   min  observed >= target - tolerance
//   lt   observed < target
//   le   observed <= target + tolerance
struct CheckResult {
    std::string name;
    std::string query;
    int N = 0;
    double observed = kNaN, target = kNaN, tolerance = 0.0;
    std::string rule;
    std::string method;
    bool pass = false;
};

inline bool evaluate_rule(const std::string& rule, double obs, double target, double tol) {
    if (!std::isfinite(obs)) return false;
    if (rule == "rel") return std::fabs(obs / target - 1.0) <= tol;
    if (rule == "abs") return std::fabs(obs - target) <= tol;
    if (rule == "max") return obs <= tol;
    if (rule == "min") return obs >= target - tol;
    if (rule == "lt") return obs < target;
    if (rule == "le") return obs <= target + tol;
    throw UsageError("unknown check rule '" + rule + "'");
}

inline CheckResult make_check(std::string name, std::string query, int N, double obs, double target, double tol,
                              std::string rule, std::string method) {
    CheckResult c{std::move(name), std::move(query), N, obs, target, tol, std::move(rule), std::move(method), false};
    c.pass = evaluate_rule(c.rule, obs, target, tol);
    return c;
}

inline std::string query_str(int j, const std::vector<int>& k) {
    std::string s = std::to_string(j) + ":";
    for (size_t i = 0; i < k.size(); ++i) s += (i ? "," : "") + std::to_string(k[i]);
    return s;
}

inline long mc_reps_for(const VerifyConfig& cfg, int N) {
    double cap = std::floor(cfg.mc_max_draws / N);
    return std::max<long>(20, std::min<long>(cfg.mc_reps, static_cast<long>(std::min(cap, 1e15))));
}

inline McOptions mc_options(const VerifyConfig& cfg, int N, std::uint64_t stream) {
    McOptions o;
    o.reps = mc_reps_for(cfg, N);
    o.batch = cfg.mc_batch;
    o.seed = cfg.seed;
    o.stream = stream;
    o.workers = cfg.workers;
    return o;
}

// stream tags: (model index, N index, purpose)
inline std::uint64_t cell_stream(int model_index, int n_index, int purpose) {
    return (static_cast<std::uint64_t>(model_index) << 20) | (static_cast<std::uint64_t>(n_index) << 4) |
           static_cast<std::uint64_t>(purpose);
}

inline std::vector<CurveRow> cn_curve(const ModelPtr& model, const std::vector<int>& grid, const VerifyConfig& cfg,
                                      int model_index = 0) {
    RegimePrediction pred = classify(model);
    std::vector<CurveRow> rows;
    for (size_t i = 0; i < grid.size(); ++i) {
        int N = grid[i];
        if (N < 2) throw ConfigError("N grid entries must be at least 2");
        if (i && N <= grid[i - 1]) throw ConfigError("N grid must be strictly increasing");
        CurveRow r;
        r.model = model->id();
        r.N = N;
        r.regime = regime_key(pred.regime);
        MomentResult ex = cN_exact(*model, N, cfg.quad);
        r.cn_exact = ex.value;
        r.cn_exact_error = ex.error;
        if (cfg.mc) {
            // c_N -> 0 regimes: rare huge X carry c_N, so condition them out
            auto o = mc_options(cfg, N, cell_stream(model_index, static_cast<int>(i), 0));
            EstimateCI mc = pred.time_scaled() ? estimate_cN_conditional(*model, N, o) : estimate_cN(*model, N, o);
            r.mc_run = true;
            r.mc_method = mc.method;
            r.cn_mc = mc.value;
            r.cn_mc_se = mc.se;
            r.cn_mc_reps = mc.replicates;
            double s = std::hypot(mc.se, ex.error);
            r.z = s > 0 ? (mc.value - ex.value) / s : 0.0;
            if (pred.time_scaled() && N <= cfg.plain_max_N) {
                EstimateCI pl = estimate_cN(*model, N, mc_options(cfg, N, cell_stream(model_index, static_cast<int>(i), 3)));
                r.plain_run = true;
                r.cn_plain = pl.value;
                r.cn_plain_se = pl.se;
                double sp = std::hypot(pl.se, ex.error);
                r.z_plain = sp > 0 ? (pl.value - ex.value) / sp : 0.0;
            }
        }
        r.cn_predicted = pred.predicted_cN(N);
        r.ratio = r.cn_exact / r.cn_predicted;
        rows.push_back(r);
    }
    return rows;
}

// Phi_2(2,2)/c_N^2 along the grid (target 1/6 in the alpha = 1 regime)
struct SecondOrderPoint {
    int N = 0;
    double value = kNaN;
    double error = kNaN;
};

inline std::vector<SecondOrderPoint> bs_second_order_check(const DistributionModel& model, const std::vector<int>& grid,
                                                           const QuadratureConfig& q = {}) {
    std::vector<SecondOrderPoint> out;
    for (int N : grid) {
        MomentResult c = cN_exact(model, N, q);
        MomentResult f = phi_exact(model, N, 2, {2, 2}, q);
        double v = f.value / (c.value * c.value);
        out.push_back({N, v, v * (f.error / f.value + 2.0 * c.error / c.value)});
    }
    return out;
}

inline std::vector<CheckResult> verify_limit_transitions(const ModelPtr& model, int N, const VerifyConfig& cfg,
                                                         const std::vector<int>& grid = {}) {
    RegimePrediction pred = classify(model);
    const auto& q = cfg.quad;
    std::vector<CheckResult> out;
    auto phi = [&](int j, const std::vector<int>& k, int n = -1) { return phi_exact(*model, n < 0 ? N : n, j, k, q); };
    MomentResult c = phi(1, {2});
    auto ratio_k = [&](int k) { return phi(1, {k}).value / c.value; };
    const std::string ex = "integral";

    switch (pred.regime) {
        case Regime::KingmanMoment:
            out.push_back(make_check("triple merger vanishes", "Phi(1:3)/c_N", N, ratio_k(3), 0.0, 0.01, "max", ex));
            break;
        case Regime::KingmanAlpha2: {
            out.push_back(make_check("triple merger vanishes", "Phi(1:3)/c_N", N, ratio_k(3), 0.0, 0.1, "max", ex));
            if (grid.size() >= 2) {
                int viol = 0;
                double prev = kInf;
                for (int n : grid) {
                    double v = phi(1, {3}, n).value / phi(1, {2}, n).value;
                    if (!(v < prev)) ++viol;
                    prev = v;
                }
                out.push_back(make_check("triple merger ratio decreasing", "violations", N, viol, 0.0, 0.0, "abs", ex));
            }
            break;
        }
        case Regime::Beta:
        case Regime::BolthausenSznitman: {
            for (int k : {3, 4, 5})
                out.push_back(make_check("Lambda moment", "Phi(1:" + std::to_string(k) + ")/c_N", N, ratio_k(k),
                                         lambda_moment(*pred.lambda, k), 0.10, "rel", ex));
            MomentResult f22 = phi(2, {2, 2});
            if (pred.regime == Regime::Beta) {
                out.push_back(make_check("no simultaneous mergers", "Phi(2:2,2)/c_N", N, f22.value / c.value, 0.0, 0.05,
                                         "max", ex));
            } else {
                out.push_back(make_check("second order", "Phi(2:2,2)/c_N^2", N, f22.value / (c.value * c.value),
                                         1.0 / 6.0, 0.20, "rel", ex));
                MomentResult f11 = phi(2, {1, 1});
                out.push_back(make_check("pair identity", "Phi(2:1,1)", N, f11.value, 1.0 - c.value,
                                         f11.error + c.error + 1e-15, "abs", ex));
                if (grid.size() >= 2) {
                    auto curve = bs_second_order_check(*model, {grid.front(), grid.back()}, q);
                    out.push_back(make_check("second order trend", "|Phi(2:2,2)/c_N^2 - 1/6| top vs bottom",
                                             grid.back(), std::fabs(curve.back().value - 1.0 / 6.0),
                                             std::fabs(curve.front().value - 1.0 / 6.0), 0.0, "le", ex));
                }
            }
            break;
        }
        case Regime::PoissonDirichlet: {
            for (auto [j, k] : std::vector<std::pair<int, std::vector<int>>>{{1, {2}}, {1, {3}}, {2, {2, 2}}, {3, {1, 1, 1}}}) {
                double tol = (j == 1 && k[0] == 2) ? 0.05 : 0.10;
                out.push_back(make_check("PD transition", "Phi(" + query_str(j, k) + ")", N, phi(j, k).value,
                                         pred.limit(j, k), tol, "rel", ex));
            }
            break;
        }
        case Regime::StarShaped:
            out.push_back(make_check("star limit", "N*E(W^3) = Phi(1:3)", N, phi(1, {3}).value, 1.0, 0.10, "rel", ex));
            out.push_back(make_check("star limit", "Phi(1:2)", N, c.value, 1.0, 0.10, "rel", ex));
            break;
    }
    return out;
}

// Checks on a c_N curve: MC agreement, lower bound, rate and trend tests.
inline std::vector<CheckResult> curve_checks(const RegimePrediction& pred, const std::vector<CurveRow>& rows) {
    std::vector<CheckResult> out;
    if (rows.empty()) return out;
    for (auto& r : rows) {
        out.push_back(make_check("c_N >= 1/N", "Phi(1:2)", r.N, r.cn_exact, 1.0 / r.N, r.cn_exact_error, "min", "integral"));
        if (r.mc_run)
            out.push_back(make_check("exact vs Monte Carlo", "z(Phi(1:2))", r.N, std::fabs(r.z), 0.0, 4.0, "max",
                                     "integral+" + r.mc_method));
        if (r.plain_run)
            out.push_back(make_check("exact vs Monte Carlo", "z(Phi(1:2))", r.N, std::fabs(r.z_plain), 0.0, 4.0, "max",
                                     "integral+monte-carlo"));
    }
    const CurveRow& lo = rows.front();
    const CurveRow& hi = rows.back();
    auto dev = [](double r) { return std::fabs(r - 1.0); };
    auto count_violations = [&](auto&& bad) {
        int v = 0;
        for (size_t i = 1; i < rows.size(); ++i) v += bad(rows[i - 1], rows[i]) ? 1 : 0;
        return static_cast<double>(v);
    };
    const std::string tag = "integral";
    switch (pred.regime) {
        case Regime::KingmanMoment:
            out.push_back(make_check("rate", "c_N/predicted", hi.N, hi.ratio, 1.0, 0.05, "rel", tag));
            break;
        case Regime::KingmanAlpha2:
            out.push_back(make_check("rate", "c_N/predicted", hi.N, hi.ratio, 1.0, 0.20, "rel", tag));
            break;
        case Regime::Beta:
            out.push_back(make_check("rate", "c_N/predicted", hi.N, hi.ratio, 1.0, 0.10, "rel", tag));
            break;
        case Regime::BolthausenSznitman:
            out.push_back(make_check("rate", "c_N/predicted", hi.N, hi.ratio, 1.0, 0.15, "rel", tag));
            out.push_back(make_check("ratio approaches 1 monotonically", "violations", hi.N,
                                     count_violations([&](auto& a, auto& b) { return dev(b.ratio) > dev(a.ratio); }), 0.0,
                                     0.0, "abs", tag));
            break;
        case Regime::PoissonDirichlet:
            out.push_back(make_check("limit", "c_N", hi.N, hi.cn_exact, 1.0 - *pred.alpha, 0.05, "rel", tag));
            out.push_back(make_check("improves along grid", "|c_N - (1-alpha)| top vs bottom", hi.N,
                                     std::fabs(hi.cn_exact - (1.0 - *pred.alpha)),
                                     std::fabs(lo.cn_exact - (1.0 - *pred.alpha)), hi.cn_exact_error + lo.cn_exact_error,
                                     "le", tag));
            break;
        case Regime::StarShaped:
            out.push_back(make_check("c_N increasing", "violations", hi.N,
                                     count_violations([](auto& a, auto& b) { return !(b.cn_exact > a.cn_exact); }), 0.0,
                                     0.0, "abs", tag));
            break;
    }
    if (rows.size() >= 2) {
        if (pred.time_scaled())
            out.push_back(make_check("c_N decreasing", "violations", hi.N,
                                     count_violations([](auto& a, auto& b) { return !(b.cn_exact < a.cn_exact); }), 0.0,
                                     0.0, "abs", tag));
        if (pred.regime == Regime::KingmanAlpha2)
            out.push_back(make_check("ratio closer to 1 at top", "|ratio-1| top vs bottom", hi.N, dev(hi.ratio),
                                     dev(lo.ratio), 0.0, "lt", tag));
        else if (pred.time_scaled())
            out.push_back(make_check("ratio closer to 1 at top", "|ratio-1| top vs bottom", hi.N, dev(hi.ratio),
                                     dev(lo.ratio), 1e-9, "le", tag));
    }
    return out;
}

struct GenealogySummary {
    int N = 0, n = 0;
    long paths = 0, absorbed = 0, horizon = 0;
    double mean_mrca = kNaN, se_mrca = kNaN;
    double mean_mrca_scaled = kNaN;  // mean MRCA time * c_N
};

inline GenealogySummary genealogy_summary(const DistributionModel& model, int N, double cN, const VerifyConfig& cfg,
                                          std::uint64_t stream) {
    GenealogySummary g;
    g.N = N;
    g.n = std::min(cfg.sample_size, N);
    g.paths = cfg.genealogy_paths;
    g.horizon = static_cast<long>(std::ceil(std::min(1e7, 60.0 / cN)));
    std::vector<long> t(g.paths, -1);
    parallel_for(g.paths, cfg.workers, [&](long i) {
        Rng rng = make_stream(cfg.seed, {stream, static_cast<std::uint64_t>(i)});
        auto p = simulate_coalescent(model, N, g.n, g.horizon, rng, false);
        if (p.absorption) t[i] = *p.absorption;
    });
    detail::Welford w;
    for (long x : t)
        if (x >= 0) w.add(static_cast<double>(x));
    g.absorbed = w.n;
    if (w.n > 0) {
        g.mean_mrca = w.mean;
        g.se_mrca = w.n > 1 ? std::sqrt(w.m2 / (w.n - 1) / w.n) : 0.0;
        g.mean_mrca_scaled = w.mean * cN;
    }
    return g;
}

// One-step ancestral transitions of a sample of n <= 4 singletons versus Phi.
// Partitions with fewer than 10 expected hits are pooled into one cell.
inline std::vector<CheckResult> transition_frequency_checks(const DistributionModel& model, int N, int n, long steps,
                                                            const VerifyConfig& cfg, std::uint64_t stream) {
    n = std::min({n, N, 4});
    std::vector<CheckResult> out;
    if (n < 2 || steps < 1) return out;
    auto parts = enumerate_partitions(n);
    std::sort(parts.begin(), parts.end());
    std::vector<double> prob(parts.size());
    for (size_t i = 0; i < parts.size(); ++i) {
        std::vector<int> k;
        for (auto& b : parts[i].blocks()) k.push_back(static_cast<int>(b.size()));
        prob[i] = phi_exact(model, N, static_cast<int>(k.size()), k, cfg.quad).value;
    }
    const long batch = 1000;
    long nb = (steps + batch - 1) / batch;
    std::vector<std::vector<long>> hits(nb, std::vector<long>(parts.size(), 0));
    Partition start = Partition::singletons(n);
    parallel_for(nb, cfg.workers, [&](long b) {
        Rng rng = make_stream(cfg.seed, {stream, static_cast<std::uint64_t>(b)});
        long here = std::min(batch, steps - b * batch);
        for (long s = 0; s < here; ++s) {
            WeightVector wv = sample_weights(model, N, rng);
            Partition next = step_genealogy(start, wv, rng);
            auto it = std::lower_bound(parts.begin(), parts.end(), next);
            ++hits[b][it - parts.begin()];
        }
    });
    std::vector<long> total(parts.size(), 0);
    for (auto& h : hits)
        for (size_t i = 0; i < h.size(); ++i) total[i] += h[i];
    double pooled_p = 0;
    long pooled_hits = 0;
    auto push = [&](const std::string& q, double p, long h) {
        double f = static_cast<double>(h) / steps;
        double se = std::sqrt(std::max(p * (1 - p), 1e-300) / steps);
        out.push_back(make_check("one-step transition frequency", q, N, std::fabs(f - p) / se, 0.0, 4.0, "max",
                                 "simulation+integral"));
    };
    for (size_t i = 0; i < parts.size(); ++i) {
        if (prob[i] * steps >= 10) {
            push(parts[i].str(), prob[i], total[i]);
        } else {
            pooled_p += prob[i];
            pooled_hits += total[i];
        }
    }
    if (pooled_p > 0) push("pooled rare partitions", pooled_p, pooled_hits);
    return out;
}

}  // namespace cannings
