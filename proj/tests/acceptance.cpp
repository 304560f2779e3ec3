// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,3,...] [--known-fail 6,...]
//
// Exit status is non-zero when any criterion fails, unless every failing
// criterion is listed in --known-fail (those lines still print FAIL).

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cannings/report.hpp"

using namespace cannings;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (detail.tellp() > 0) detail << "; ";
        detail << (ok ? "" : "!") << what;
    }
};

std::string g(double v, int digits = 6) { return fmt_g(v, digits); }

double rel(double a, double b) { return std::fabs(a / b - 1.0); }

int total(const std::vector<int>& k) {
    int p = 0;
    for (int v : k) p += v;
    return p;
}

const std::vector<PhiQuery> kQueries = {{1, {2}}, {1, {3}}, {2, {2, 2}}, {2, {1, 1}}};

int run_cli(const std::string& args, std::string* out = nullptr) {
    std::string cmd = std::string(CANNINGS_CLI) + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return -1;
    std::array<char, 4096> buf;
    std::string text;
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) text.append(buf.data(), n);
    int st = pclose(p);
    if (out) *out = text;
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// ---------------------------------------------------------------------------

void closed_forms(Outcome& o) {
    double worst_deg = 0, worst_gamma = 0;
    for (int N : {10, 100, 1000}) {
        auto deg = make_model("degenerate:c=1");
        for (auto& q : kQueries) {
            double expect = falling_factorial(N, q.j) * std::pow(N, -total(q.k));
            worst_deg = std::max(worst_deg, rel(phi_exact(*deg, N, q.j, q.k).value, expect));
        }
        for (double r : {0.5, 1.0, 2.0}) {
            auto m = make_model("gamma:r=" + fmt_g(r));
            for (auto& q : kQueries) {
                double expect = falling_factorial(N, q.j);
                for (int ki : q.k) expect *= rising_factorial(r, ki);
                expect /= rising_factorial(r * N, total(q.k));
                worst_gamma = std::max(worst_gamma, rel(phi_exact(*m, N, q.j, q.k).value, expect));
            }
        }
    }
    o.require(worst_deg <= 1e-8, "degenerate max rel err " + g(worst_deg, 3));
    o.require(worst_gamma <= 1e-8, "gamma(0.5,1,2) max rel err " + g(worst_gamma, 3));
}

void brute_force(Outcome& o) {
    auto m = make_model("two-point:x1=1,x2=2,p=0.5");
    McOptions mc;
    mc.reps = 40000;
    mc.batch = 1000;
    mc.seed = 77;
    double worst_exact = 0, worst_z = 0;
    for (auto& q : kQueries) {
        double e = 0;
        for (double x1 : {1.0, 2.0})
            for (double x2 : {1.0, 2.0}) {
                double w[2] = {x1 / (x1 + x2), x2 / (x1 + x2)};
                double v = 0.25 * falling_factorial(2, q.j);
                for (int i = 0; i < q.j; ++i) v *= std::pow(w[i], q.k[i]);
                e += v;
            }
        worst_exact = std::max(worst_exact, std::fabs(phi_exact(*m, 2, q.j, q.k).value - e));
        auto est = estimate_phi(*m, 2, q.j, q.k, mc);
        worst_z = std::max(worst_z, std::fabs(est.value - e) / est.se);
    }
    o.require(worst_exact <= 1e-10, "exact max abs err " + g(worst_exact, 3));
    o.require(worst_z <= 4, "MC max |z| " + g(worst_z, 3));
}

void regime_i(Outcome& o) {
    auto m = make_model("pareto:alpha=3");
    double v = 1e4 * cN_exact(*m, 10000).value;
    o.require(rel(v, 4.0 / 3.0) <= 0.05, "N c_N(1e4) = " + g(v) + " vs 4/3");
    double t = phi_exact(*m, 100000, 1, {3}).value / cN_exact(*m, 100000).value;
    o.require(t <= 0.01, "Phi1(3)/c_N(1e5) = " + g(t, 3));
}

void regime_ii(Outcome& o) {
    auto m = make_model("pareto:alpha=2");
    auto ratio = [&](double N) { return cN_exact(*m, static_cast<int>(N)).value / (std::log(N) / (2 * N)); };
    double hi = ratio(1e6), lo = ratio(1e3);
    o.require(hi >= 0.8 && hi <= 1.2, "ratio(1e6) = " + g(hi));
    o.require(std::fabs(hi - 1) < std::fabs(lo - 1), "ratio(1e3) = " + g(lo));
}

void regime_iii(Outcome& o) {
    auto m = make_model("pareto:alpha=1.5");
    const int N = 100000;
    double c = cN_exact(*m, N).value;
    double scaled = c * std::sqrt(N) * std::pow(3.0, 1.5) / (std::tgamma(0.5) * std::tgamma(2.5));
    o.require(rel(scaled, 1) <= 0.10, "scaled c_N = " + g(scaled));
    for (int k : {3, 4, 5}) {
        double r = phi_exact(*m, N, 1, {k}).value / c;
        double target = std::tgamma(k - 1.5) / (std::tgamma(k) * std::tgamma(0.5));
        o.require(rel(r, target) <= 0.10, "Phi1(" + std::to_string(k) + ")/c_N = " + g(r) + " vs " + g(target));
    }
    double s = phi_exact(*m, N, 2, {2, 2}).value / c;
    o.require(s <= 0.05, "Phi2(2,2)/c_N = " + g(s, 3));
}

void regime_iv(Outcome& o) {
    auto m = make_model("pareto:alpha=1");
    double prev = 0;
    bool increasing = true;
    std::string curve;
    for (int N : {1000, 10000, 100000, 1000000}) {
        double v = cN_exact(*m, N).value * std::log(N);
        increasing = increasing && v > prev;
        prev = v;
        curve += (curve.empty() ? "" : ",") + g(v, 4);
    }
    o.require(increasing, "c_N log N trend-increasing (" + curve + ")");
    o.require(rel(prev, 1) <= 0.15, "final c_N log N = " + g(prev, 4) + " within 15%");
    const int N = 1000000;
    double c = cN_exact(*m, N).value;
    for (int k : {3, 4, 5}) {
        double r = phi_exact(*m, N, 1, {k}).value / c;
        o.require(rel(r, 1.0 / (k - 1)) <= 0.10, "Phi1(" + std::to_string(k) + ")/c_N = " + g(r, 4));
    }
    double s = phi_exact(*m, N, 2, {2, 2}).value / (c * c);
    o.require(rel(s, 1.0 / 6) <= 0.20, "Phi2(2,2)/c_N^2 = " + g(s, 4));
}

void regime_v(Outcome& o) {
    for (auto spec : {"pareto:alpha=0.5", "sibuya:alpha=0.5"}) {
        auto m = make_model(spec);
        std::string id = m->id();
        double prev = kInf;
        bool improving = true;
        double c = 0;
        for (int N : {100, 1000, 10000}) {
            c = cN_exact(*m, N).value;
            improving = improving && std::fabs(c - 0.5) < prev;
            prev = std::fabs(c - 0.5);
        }
        o.require(rel(c, 0.5) <= 0.05 && improving, id + " c_N(1e4) = " + g(c) + (improving ? "" : " not improving"));
        double f22 = phi_exact(*m, 10000, 2, {2, 2}).value;
        double f111 = phi_exact(*m, 10000, 3, {1, 1, 1}).value;
        o.require(rel(f22, 1.0 / 48) <= 0.10, id + " Phi2(2,2) = " + g(f22));
        o.require(rel(f111, 0.25) <= 0.10, id + " Phi3(1,1,1) = " + g(f111));
    }
}

void regime_vi(Outcome& o) {
    auto m = make_model("log-tail:beta=2");
    double prev = 0;
    bool increasing = true;
    std::string curve;
    for (int N : {100, 1000, 10000, 100000}) {
        double c = cN_exact(*m, N).value;
        increasing = increasing && c > prev && c < 1;
        prev = c;
        curve += (curve.empty() ? "" : ",") + g(c, 4);
    }
    o.require(increasing, "c_N increasing below 1 (" + curve + ")");
    double w3 = phi_exact(*m, 100000, 1, {3}).value;
    o.require(rel(w3, 1) <= 0.10, "N E(W^3) at 1e5 = " + g(w3, 4));
}

void structural(Outcome& o) {
    auto specs = catalog_specs();
    Rng rng = make_stream(909, {0});
    int bad_cons = 0, n_cons = 0;
    double worst_cons = 0;
    for (auto& spec : specs) {
        auto m = make_model(spec);
        for (int t = 0; t < 25; ++t) {
            int j = 1 + static_cast<int>(rng() % 3);
            std::vector<int> k(j);
            for (auto& v : k) v = 1 + static_cast<int>(rng() % 3);
            auto r = consistency_residual(*m, 100, j, k);
            ++n_cons;
            if (std::fabs(r.residual) > r.bound) ++bad_cons;
            worst_cons = std::max(worst_cons, std::fabs(r.residual) / std::max(r.bound, 1e-300));
        }
    }
    o.require(bad_cons == 0, std::to_string(n_cons - bad_cons) + "/" + std::to_string(n_cons) +
                                 " consistency residuals within bound (max |res|/bound " + g(worst_cons, 3) + ")");

    int bad_mono = 0;
    for (int t = 0; t < 25; ++t) {
        auto m = make_model(specs[rng() % specs.size()]);
        int N = 5 + static_cast<int>(rng() % 5000);
        int l = 1 + static_cast<int>(rng() % 2);
        std::vector<int> small(l);
        for (auto& v : small) v = 1 + static_cast<int>(rng() % 2);
        std::vector<int> big = small;
        for (auto& v : big) v += static_cast<int>(rng() % 2);
        if (rng() % 2) big.push_back(1 + static_cast<int>(rng() % 2));
        if (big == small) ++big[0];
        auto a = phi_exact(*m, N, static_cast<int>(big.size()), big);
        auto b = phi_exact(*m, N, l, small);
        if (a.value > b.value + a.error + b.error) ++bad_mono;
    }
    o.require(bad_mono == 0, std::to_string(25 - bad_mono) + "/25 dominating pairs ordered");

    int bad_lb = 0;
    for (auto& spec : specs) {
        auto m = make_model(spec);
        for (int N : {2, 10, 100, 1000, 10000, 100000, 1000000}) {
            auto c = cN_exact(*m, N);
            if (c.value < 1.0 / N - c.error) ++bad_lb;
        }
    }
    o.require(bad_lb == 0, "c_N >= 1/N on 7 sizes x " + std::to_string(specs.size()) + " models");

    VerifyConfig vc;
    vc.workers = default_workers();
    int n_freq = 0, bad_freq = 0;
    double worst_z = 0;
    for (size_t i = 0; i < specs.size(); ++i) {
        auto cs = transition_frequency_checks(*make_model(specs[i]), 50, 4, 100000, vc, 5000 + i);
        for (auto& c : cs) {
            ++n_freq;
            if (!c.pass) ++bad_freq;
            worst_z = std::max(worst_z, c.observed);
        }
    }
    o.require(bad_freq == 0, std::to_string(n_freq - bad_freq) + "/" + std::to_string(n_freq) +
                                 " n=4 one-step frequencies at N=50 within 4 SE (max |z| " + g(worst_z, 3) + ")");
}

void appendix(Outcome& o) {
    const double xN = 1e-6;
    double r1 = karamata_quadrature_check([](double x) { return std::pow(x, -0.5) * (1 + 1 / std::log(1 / x)); },
                                          -0.5, [](double t) { return t * std::exp(-t); }, xN);
    o.require(rel(r1, 1) <= 0.02, "karamata log-perturbed power " + g(r1));
    double r2 = karamata_quadrature_check([](double x) { return std::pow(x, -0.5) * std::log(1 / x); }, -0.5,
                                          [](double t) { return t < 1e6 ? t * std::exp(-t) : 0.0; }, xN);
    o.require(rel(r2, 1) <= 0.02, "karamata truncated exponential " + g(r2));

    double worst = 0;
    for (double a : {0.5, 1.5, 3.0}) {
        auto m = make_model("pareto:alpha=" + fmt_g(a));
        auto G = [&](double x) { return m->tail(x); };
        auto dens = [&](double x) {
            double h = 1e-4 * x;
            return (m->tail(x - h) - m->tail(x + h)) / (2 * h);
        };
        for (auto& p : monotone_density_check(G, dens, a, [](double) { return 1.0; }, geometric_grid(1e2, 1e6, 2)))
            worst = std::max(worst, rel(p.g_ratio, a));
    }
    o.require(worst <= 0.05, "Pareto(0.5,1.5,3) density recovers rho, max rel err " + g(worst, 3));

    auto p2 = make_model("pareto:alpha=2");
    auto pts = monotone_density_check([&](double u) { return p2->mixed_moment(2, u); },
                                      [&](double u) { return p2->mixed_moment(3, u); }, 0.0,
                                      [&](double u) { return p2->mixed_moment(2, u); }, geometric_grid(1e-10, 1e-2, 2));
    bool down = true;
    for (size_t i = 1; i < pts.size(); ++i) down = down && pts[i - 1].g_ratio < pts[i].g_ratio;
    o.require(down, "Pareto(2) -u psi'''/psi'' decreasing to " + g(pts.front().g_ratio, 3) + " at u=1e-10");
}

void determinism(Outcome& o) {
    auto base = fs::temp_directory_path() / "cannings_acceptance_det";
    fs::remove_all(base);
    std::string cfg = std::string(CANNINGS_SOURCE_DIR) + "/configs/smoke.json";
    int a = run_cli("verify " + cfg + " --workers 1 --out " + (base / "a").string());
    int b = run_cli("verify " + cfg + " --workers 1 --out " + (base / "b").string());
    int c = run_cli("verify " + cfg + " --workers 4 --out " + (base / "c").string());
    std::string ca = slurp(base / "a" / "curves.csv");
    o.require(a == 0 && b == 0 && c == 0, "exit codes " + std::to_string(a) + "," + std::to_string(b) + "," +
                                              std::to_string(c));
    o.require(!ca.empty() && ca == slurp(base / "b" / "curves.csv"), "rerun curves.csv identical");
    o.require(!ca.empty() && ca == slurp(base / "c" / "curves.csv"), "workers 1 vs 4 curves.csv identical");
    fs::remove_all(base);
}

void full_config(Outcome& o) {
    auto out = fs::temp_directory_path() / "cannings_acceptance_six";
    fs::remove_all(out);
    auto t0 = std::chrono::steady_clock::now();
    std::string text;
    int code = run_cli("verify " + std::string(CANNINGS_SOURCE_DIR) + "/configs/six_regimes.json --out " + out.string(),
                       &text);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(code == 0, "exit code " + std::to_string(code));
    o.require(secs < 600, "wall time " + g(secs, 4) + " s");
    std::set<std::string> regimes;
    if (fs::exists(out / "report.json")) {
        auto rep = Json::parse(slurp(out / "report.json"));
        for (auto& m : rep["models"]) regimes.insert(m["regime"].get<std::string>());
    }
    o.require(regimes.size() == 6, std::to_string(regimes.size()) + " regime labels");
    if (code != 0) std::cerr << text;
    fs::remove_all(out);
}

struct Criterion {
    int id;
    std::string title;
    std::function<void(Outcome&)> run;
    double max_seconds = 0;  // 0: no runtime bound
};

std::set<int> parse_ids(const std::string& s) {
    std::set<int> ids;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ','))
        if (!tok.empty()) ids.insert(std::stoi(tok));
    return ids;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only, known;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            only = parse_ids(argv[++i]);
        } else if (a == "--known-fail" && i + 1 < argc) {
            known = parse_ids(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--only ids] [--known-fail ids]\n";
            return 2;
        }
    }

    std::vector<Criterion> all = {
        {1, "closed-form oracles (degenerate, gamma)", closed_forms, 60},
        {2, "two-point brute-force enumeration at N=2", brute_force},
        {3, "regime (i) pareto alpha=3", regime_i, 120},
        {4, "regime (ii) pareto alpha=2", regime_ii},
        {5, "regime (iii) pareto alpha=1.5", regime_iii},
        {6, "regime (iv) pareto alpha=1", regime_iv},
        {7, "regime (v) pareto/sibuya alpha=0.5", regime_v},
        {8, "regime (vi) log-tail beta=2", regime_vi},
        {9, "structural properties", structural},
        {10, "appendix numerics", appendix},
        {11, "determinism of verify", determinism},
        {12, "bundled six-regime config", full_config},
    };

    int failed = 0, unexpected = 0;
    for (auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        Outcome o;
        auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.max_seconds > 0) o.require(secs < c.max_seconds, "runtime < " + g(c.max_seconds) + " s");
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " -- "
                  << o.detail.str() << " [" << g(secs, 3) << " s]" << std::endl;
        if (!o.pass) {
            ++failed;
            if (!known.count(c.id)) ++unexpected;
        }
    }
    std::cout << "acceptance: " << failed << " failed";
    if (!known.empty()) std::cout << ", " << unexpected << " outside the known-failure list";
    std::cout << std::endl;
    return (known.empty() ? failed : unexpected) ? 1 : 0;
}
