#pragma once
// Monte Carlo side: weights W_i = X_i / S_N, multinomial offspring, the
// discrete-time ancestral process and conditional (given W) estimators.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dist_catalog.hpp"
#include "parallel.hpp"
#include "partitions.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace cannings {

struct WeightVector {
    std::vector<double> w;
    std::vector<double> log_w;
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(w.size()); }
    // p_m = sum_i w_i^m
    double power_sum(double m) const {
        double s = 0;
        for (double lw : log_w) s += std::exp(m * lw);
        return s;
    }
};

inline WeightVector sample_weights(const DistributionModel& model, int N, Rng& rng, std::uint64_t seed = 0) {
    if (N < 1) throw UsageError("sample_weights: N must be at least 1");
    WeightVector wv;
    wv.seed = seed;
    wv.log_w.resize(N);
    double mx = -kInf;
    for (int i = 0; i < N; ++i) {
        wv.log_w[i] = model.sample_log(rng);
        mx = std::max(mx, wv.log_w[i]);
    }
    double acc = 0;
    for (double lx : wv.log_w) acc += std::exp(lx - mx);
    double lS = mx + std::log(acc);
    wv.w.resize(N);
    for (int i = 0; i < N; ++i) {
        wv.log_w[i] -= lS;
        wv.w[i] = std::exp(wv.log_w[i]);
    }
    return wv;
}

// multinomial(N, w) through sequential conditional binomials
inline std::vector<long> sample_offspring(const WeightVector& wv, Rng& rng) {
    int N = wv.size();
    std::vector<double> suffix(N + 1, 0.0);
    for (int i = N - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + wv.w[i];
    std::vector<long> nu(N, 0);
    long left = N;
    for (int i = 0; i < N && left > 0; ++i) {
        if (i == N - 1) {
            nu[i] = left;
            break;
        }
        double p = suffix[i] > 0 ? std::min(1.0, wv.w[i] / suffix[i]) : 0.0;
        std::binomial_distribution<long> bin(left, p);
        nu[i] = bin(rng);
        left -= nu[i];
    }
    return nu;
}

// Vose alias table for categorical draws
class AliasTable {
public:
    explicit AliasTable(const std::vector<double>& w) {
        int n = static_cast<int>(w.size());
        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        double total = 0;
        for (double x : w) total += x;
        std::vector<double> scaled(n);
        std::vector<int> small, large;
        for (int i = 0; i < n; ++i) {
            scaled[i] = w[i] * n / total;
            (scaled[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            int s = small.back(), l = large.back();
            small.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (int i : large) prob_[i] = 1.0;
        for (int i : small) prob_[i] = 1.0;
    }
    int draw(Rng& rng) const {
        int n = static_cast<int>(prob_.size());
        double u = uniform01(rng) * n;
        int i = std::min(n - 1, static_cast<int>(u));
        return (u - i) < prob_[i] ? i : alias_[i];
    }

private:
    std::vector<double> prob_;
    std::vector<int> alias_;
};

// every block picks a parent i with probability w_i; equal parents merge
inline Partition step_genealogy(const Partition& pi, const AliasTable& parents, Rng& rng) {
    if (pi.size() <= 1) return pi;
    std::vector<int> labels(pi.size());
    for (auto& l : labels) l = parents.draw(rng);
    return merge_by_parent(pi, labels);
}

inline Partition step_genealogy(const Partition& pi, const WeightVector& wv, Rng& rng) {
    if (pi.size() > wv.size()) throw UsageError("step_genealogy: more blocks than individuals");
    if (pi.size() <= 1) return pi;
    return step_genealogy(pi, AliasTable(wv.w), rng);
}

struct GenealogyPath {
    std::vector<Partition> states;  // r = 0, 1, ...
    std::vector<int> block_counts;
    std::optional<long> absorption;  // MRCA generation
};

inline GenealogyPath simulate_coalescent(const DistributionModel& model, int N, int n, long horizon, Rng& rng,
                                         bool keep_states = true) {
    if (n < 1 || n > N) throw UsageError("simulate_coalescent: need 1 <= n <= N");
    GenealogyPath path;
    Partition cur = Partition::singletons(n);
    if (keep_states) path.states.push_back(cur);
    path.block_counts.push_back(cur.size());
    if (cur.size() == 1) {
        path.absorption = 0;
        return path;
    }
    for (long r = 1; r <= horizon; ++r) {
        WeightVector wv = sample_weights(model, N, rng);
        cur = step_genealogy(cur, wv, rng);
        if (keep_states) path.states.push_back(cur);
        path.block_counts.push_back(cur.size());
        if (cur.size() == 1) {
            path.absorption = r;
            break;
        }
    }
    return path;
}

// ---------------------------------------------------------------------------
// Estimators

struct EstimateCI {
    double value = 0.0;
    double se = 0.0;
    long replicates = 0;
    std::uint64_t seed = 0;
    std::string method = "monte-carlo";
};

struct McOptions {
    long reps = 10000;
    long batch = 256;           // replicates per rng stream
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;   // distinguishes independent cells sharing a seed
    int workers = 1;
};

struct PhiQuery {
    int j = 1;
    std::vector<int> k{2};
};

namespace detail {

struct Welford {
    long n = 0;
    double mean = 0, m2 = 0;
    void add(double x) {
        ++n;
        double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    void merge(const Welford& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        long t = n + o.n;
        double d = o.mean - mean;
        mean += d * o.n / t;
        m2 += o.m2 + d * d * static_cast<double>(n) * o.n / t;
        n = t;
    }
};

// sum over set partitions of the query's index set with Moebius weights:
// sum_{distinct i_1..i_j} prod w_{i_r}^{k_r} = sum_sigma prod_B mu(B) p_{k(B)}
struct PowerSumFormula {
    struct Term {
        double coef;
        std::vector<int> orders;
    };
    std::vector<Term> terms;
    std::vector<int> orders_needed;

    explicit PowerSumFormula(const std::vector<int>& k) {
        int j = static_cast<int>(k.size());
        for (const auto& sigma : enumerate_partitions(j)) {
            Term t{1.0, {}};
            for (auto& B : sigma.blocks()) {
                int sz = static_cast<int>(B.size());
                double fact = std::tgamma(static_cast<double>(sz));
                t.coef *= (sz % 2 ? 1.0 : -1.0) * fact;
                int m = 0;
                for (int i : B) m += k[i - 1];
                t.orders.push_back(m);
                orders_needed.push_back(m);
            }
            terms.push_back(std::move(t));
        }
        std::sort(orders_needed.begin(), orders_needed.end());
        orders_needed.erase(std::unique(orders_needed.begin(), orders_needed.end()), orders_needed.end());
    }
};

// smallest w on a unit grid beyond which h(origin -/+ expm1(w)) e^w is negligible
template <class H>
double tail_extent(H&& h, double origin, int dir, double scale) {
    double peak = std::fabs(scale);
    for (int w = 1; w <= 64; ++w) {
        double s = origin + dir * std::expm1(static_cast<double>(w));
        if (dir > 0 && s > 745.0) return w;
        double v = std::fabs(h(s)) * std::exp(static_cast<double>(w));
        if (!std::isfinite(v)) continue;
        peak = std::max(peak, v);
        if (w >= 3 && v < 1e-32 * peak) return w;
    }
    return 64.0;
}

inline void check_query(const PhiQuery& q) {
    if (q.j < 1 || static_cast<int>(q.k.size()) != q.j) throw UsageError("query: need j >= 1 and exactly j group sizes");
    for (int k : q.k)
        if (k < 1) throw UsageError("query: group sizes must be >= 1");
    if (q.j > 10) throw UsageError("query: j > 10 is not supported");
}

}  // namespace detail

// Conditional-on-W estimators for several queries from the same weight draws.
inline std::vector<EstimateCI> estimate_phis(const DistributionModel& model, int N, const std::vector<PhiQuery>& qs,
                                             const McOptions& opt) {
    if (opt.reps < 2) throw UsageError("estimate: need at least 2 replicates");
    std::vector<detail::PowerSumFormula> forms;
    std::vector<int> orders;
    for (auto& q : qs) {
        detail::check_query(q);
        forms.emplace_back(q.k);
        orders.insert(orders.end(), forms.back().orders_needed.begin(), forms.back().orders_needed.end());
    }
    std::sort(orders.begin(), orders.end());
    orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
    int max_order = orders.empty() ? 1 : orders.back();

    long batch = std::max<long>(1, opt.batch);
    long nb = (opt.reps + batch - 1) / batch;
    std::vector<std::vector<detail::Welford>> acc(nb, std::vector<detail::Welford>(qs.size()));
    parallel_for(nb, opt.workers, [&](long b) {
        Rng rng = make_stream(opt.seed, {opt.stream, static_cast<std::uint64_t>(b)});
        long n_here = std::min(batch, opt.reps - b * batch);
        std::vector<double> p(max_order + 1, 0.0);
        std::vector<double> lx(N);
        for (long r = 0; r < n_here; ++r) {
            double mx = -kInf;
            for (int i = 0; i < N; ++i) {
                lx[i] = model.sample_log(rng);
                mx = std::max(mx, lx[i]);
            }
            double a = 0;
            for (double v : lx) a += std::exp(v - mx);
            double lS = mx + std::log(a);
            std::fill(p.begin(), p.end(), 0.0);
            for (double v : lx) {
                double lw = v - lS;
                for (int m : orders) p[m] += std::exp(m * lw);
            }
            for (size_t qi = 0; qi < qs.size(); ++qi) {
                double est = 0;
                if (qs[qi].j <= N) {
                    for (auto& t : forms[qi].terms) {
                        double prod = t.coef;
                        for (int m : t.orders) prod *= p[m];
                        est += prod;
                    }
                }
                acc[b][qi].add(est);
            }
        }
    });
    std::vector<EstimateCI> out(qs.size());
    for (size_t qi = 0; qi < qs.size(); ++qi) {
        detail::Welford w;
        for (long b = 0; b < nb; ++b) w.merge(acc[b][qi]);
        out[qi].value = w.mean;
        out[qi].se = w.n > 1 ? std::sqrt(std::max(0.0, w.m2 / (w.n - 1)) / w.n) : 0.0;
        out[qi].replicates = w.n;
        out[qi].seed = opt.seed;
    }
    return out;
}

inline EstimateCI estimate_phi(const DistributionModel& model, int N, int j, const std::vector<int>& k,
                               const McOptions& opt) {
    if (j > N) {
        detail::check_query({j, k});
        return {0.0, 0.0, opt.reps, opt.seed, "monte-carlo"};
    }
    return estimate_phis(model, N, {PhiQuery{j, k}}, opt).front();
}

inline EstimateCI estimate_cN(const DistributionModel& model, int N, const McOptions& opt) {
    return estimate_phi(model, N, 1, {2}, opt);
}

// Phi_j(k) = (N)_j E[g(S'')] with S'' = X_{j+1} + ... + X_N and X_1..X_j integrated out:
//   g(S'') = E[prod X_i^{k_i} / (X_1 + ... + X_j + S'')^p | S'']
//          = 1/Gamma(p) int exp(-u S'') prod E[(uX)^{k_i} e^{-uX}] d(log u).
// The plain power-sum estimator misses the rare huge X that carry Phi when
// E(X^p) is infinite or barely finite; conditioning removes that variance.
inline EstimateCI estimate_phi_conditional(const DistributionModel& model, int N, int j, const std::vector<int>& k,
                                           const McOptions& opt) {
    if (opt.reps < 2) throw UsageError("estimate: need at least 2 replicates");
    if (N < 1) throw UsageError("estimate: N must be at least 1");
    detail::check_query({j, k});
    if (j >= N) {
        auto e = estimate_phi(model, N, j, k, opt);
        e.method = "monte-carlo";
        return e;
    }
    int p = 0;
    for (int v : k) p += v;
    const double F = falling_factorial(N, j) / std::tgamma(static_cast<double>(p));
    EstimateCI out{0.0, 0.0, opt.reps, opt.seed, "monte-carlo-conditional"};
    long batch = std::max<long>(1, opt.batch);
    long nb = (opt.reps + batch - 1) / batch;
    std::vector<detail::Welford> acc(nb);
    parallel_for(nb, opt.workers, [&](long b) {
        Rng rng = make_stream(opt.seed, {opt.stream, static_cast<std::uint64_t>(b)});
        long n_here = std::min(batch, opt.reps - b * batch);
        std::vector<double> lx(N - j);
        for (long r = 0; r < n_here; ++r) {
            double mx = -kInf;
            for (auto& v : lx) mx = std::max(mx, v = model.sample_log(rng));
            double a = 0;
            for (double v : lx) a += std::exp(v - mx);
            double lS = mx + std::log(a);
            // sigma = log(u S'')
            auto f = [&](double sigma) {
                double lg = -std::exp(sigma);
                for (int ki : k) {
                    double m = model.scaled_moment(ki, sigma - lS);
                    if (!(m > 0)) return 0.0;
                    lg += std::log(m);
                }
                return std::exp(lg);
            };
            quad::Integrator in;
            in.add_left_tail(-3.0, detail::tail_extent(f, -3.0, -1, f(-3.0)));
            in.add_interval(-3.0, 4.0, 7);
            quad::Result res = in.run(f, {1e-7, 0.0, 2000});
            if (!res.converged || !std::isfinite(res.value))
                throw std::runtime_error("estimate_phi_conditional: inner integral did not converge for " + model.id());
            acc[b].add(F * res.value);
        }
    });
    detail::Welford w;
    for (auto& x : acc) w.merge(x);
    out.value = w.mean;
    out.se = w.n > 1 ? std::sqrt(std::max(0.0, w.m2 / (w.n - 1)) / w.n) : 0.0;
    out.replicates = w.n;
    return out;
}

inline EstimateCI estimate_cN_conditional(const DistributionModel& model, int N, const McOptions& opt) {
    if (N == 1) {
        if (opt.reps < 2) throw UsageError("estimate: need at least 2 replicates");
        return {1.0, 0.0, opt.reps, opt.seed, "monte-carlo-conditional"};
    }
    return estimate_phi_conditional(model, N, 1, {2}, opt);
}

// P(S_N <= a N)
inline EstimateCI estimate_small_sum_probability(const DistributionModel& model, int N, double a,
                                                 const McOptions& opt) {
    long batch = std::max<long>(1, opt.batch);
    long nb = (opt.reps + batch - 1) / batch;
    std::vector<detail::Welford> acc(nb);
    double la = std::log(a * N);
    parallel_for(nb, opt.workers, [&](long b) {
        Rng rng = make_stream(opt.seed, {opt.stream, static_cast<std::uint64_t>(b)});
        long n_here = std::min(batch, opt.reps - b * batch);
        std::vector<double> lx(N);
        for (long r = 0; r < n_here; ++r) {
            double mx = -kInf;
            for (int i = 0; i < N; ++i) mx = std::max(mx, lx[i] = model.sample_log(rng));
            double s = 0;
            for (double v : lx) s += std::exp(v - mx);
            acc[b].add(mx + std::log(s) <= la ? 1.0 : 0.0);
        }
    });
    detail::Welford w;
    for (auto& x : acc) w.merge(x);
    return {w.mean, w.n > 1 ? std::sqrt(w.m2 / (w.n - 1) / w.n) : 0.0, w.n, opt.seed, "monte-carlo"};
}

}  // namespace cannings
