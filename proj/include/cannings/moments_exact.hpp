#pragma once
// Phi_j^(N)(k_1..k_j) = (N)_j / Gamma(p) int_0^inf u^{p-1} psi(u)^{N-j} prod_i phi_{k_i}(u) du,
// p = sum k_i, evaluated in s = log u:
//   (N)_j / Gamma(p) int exp((N-j) log psi(e^s)) prod_i [u^{k_i} phi_{k_i}(u)] ds.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "cannings_sim.hpp"
#include "dist_catalog.hpp"
#include "quadrature.hpp"

namespace cannings {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureConfig {
    double delta = 1.0;
    double rel_tol = 1e-9;
    int max_subdivisions = 4000;

    void validate() const {
        if (!(delta > 0) || !std::isfinite(delta)) throw ConfigError("quadrature: delta must be finite and positive");
        if (!(rel_tol > 0) || rel_tol >= 1) throw ConfigError("quadrature: rel_tol must lie in (0,1)");
        if (max_subdivisions < 1) throw ConfigError("quadrature: max_subdivisions must be positive");
    }
};

struct MomentResult {
    double value = 0.0;
    double error = 0.0;
    std::string method = "integral";
    int N = 0;
    int j = 0;
    std::vector<int> k;
    int evaluations = 0;
    bool tail_bounded = false;  // beyond-delta part bounded, not integrated
};

namespace detail {

class PhiIntegrand {
public:
    PhiIntegrand(const DistributionModel& m, int N, const std::vector<int>& k) : m_(m), M_(N - static_cast<int>(k.size())) {
        for (int ki : k) ++mult_[ki];
    }
    // integrand without the (N)_j / Gamma(p) factor; with_psi=false drops psi^{N-j}
    double operator()(double s, bool with_psi = true) const {
        double lg = 0;
        for (auto& [ki, c] : mult_) {
            double v = m_.scaled_moment(ki, s);
            if (!(v > 0)) return v == 0 ? 0.0 : kNaN;
            lg += c * std::log(v);
        }
        if (with_psi && M_ > 0) {
            double lp = m_.log_laplace_at(s);
            if (lp == -kInf) return 0.0;
            lg += M_ * lp;
        }
        return std::exp(lg);
    }
    int M() const { return M_; }

private:
    const DistributionModel& m_;
    int M_;
    std::map<int, int> mult_;
};

// s where 1 - psi(e^s) = target
inline double laplace_level(const DistributionModel& m, double target) {
    double lo = -1.0, hi = 1.0;
    while (m.laplace_complement_at(lo) > target) {
        lo *= 2.0;
        if (lo < -1e300) break;
    }
    while (m.laplace_complement_at(hi) < target && hi < 700) hi *= 2.0;
    for (int it = 0; it < 80 && hi - lo > 1e-6 * (1.0 + std::fabs(lo)); ++it) {
        double mid = 0.5 * (lo + hi);
        (m.laplace_complement_at(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

inline MomentResult phi_exact(const DistributionModel& model, int N, int j, const std::vector<int>& k,
                              const QuadratureConfig& cfg = {}) {
    cfg.validate();
    detail::check_query({j, k});
    if (N < 1) throw UsageError("phi_exact: N must be at least 1");
    MomentResult res;
    res.N = N;
    res.j = j;
    res.k = k;
    if (j > N) {
        res.method = "closed-form";
        return res;
    }
    int p = 0;
    for (int ki : k) p += ki;
    const double F = falling_factorial(N, j) / std::tgamma(static_cast<double>(p));
    detail::PhiIntegrand g(model, N, k);
    const int M = g.M();

    double s_mid = detail::laplace_level(model, 1.0 / (M + 1.0));
    if (M == 0) s_mid = std::min(s_mid, 0.0);
    double s_d = std::log(cfg.delta);
    auto f = [&](double s) { return g(s); };
    double g_mid = g(s_mid);

    quad::Options opt{0.5 * cfg.rel_tol, 0.0, cfg.max_subdivisions};
    auto check = [&](const quad::Result& r, const char* part) {
        if (!r.converged || !std::isfinite(r.value))
            throw QuadratureError("phi_exact(" + model.id() + ", N=" + std::to_string(N) + ", j=" + std::to_string(j) +
                                  "): " + part + " integral did not converge (estimate " + fmt_g(r.value, 6) +
                                  ", error " + fmt_g(r.error, 3) + ", " + std::to_string(r.evaluations) +
                                  " evaluations)");
    };

    // part A: s < log delta
    quad::Integrator A;
    if (s_mid < s_d) {
        A.add_left_tail(s_mid, detail::tail_extent(f, s_mid, -1, g_mid));
        A.add_interval(s_mid, s_d, static_cast<int>(std::clamp(std::ceil(s_d - s_mid), 1.0, 64.0)));
    } else {
        A.add_left_tail(s_d, detail::tail_extent(f, s_d, -1, std::max(g_mid, g(s_d))));
    }
    quad::Result ra = A.run(f, opt);
    check(ra, "lower");
    res.evaluations += ra.evaluations;

    // part B: s > log delta, first bounded by psi(delta)^{N-j} int prod phi
    auto f0 = [&](double s) { return g(s, false); };
    quad::Integrator C;
    C.add_right_tail(s_d, detail::tail_extent(f0, s_d, +1, f0(s_d)));
    quad::Result rc = C.run(f0, {1e-6, 0.0, cfg.max_subdivisions});
    check(rc, "tail-bound");
    res.evaluations += rc.evaluations;
    double bound = (M > 0 ? std::exp(M * model.log_laplace_at(s_d)) : 1.0) * (rc.value + rc.error);

    double total = ra.value, err = ra.error;
    if (bound <= 0.1 * cfg.rel_tol * std::fabs(ra.value)) {
        err += bound;
        res.tail_bounded = true;
    } else {
        quad::Integrator B;
        if (s_mid > s_d) {
            B.add_interval(s_d, s_mid, static_cast<int>(std::clamp(std::ceil(s_mid - s_d), 1.0, 64.0)));
            B.add_right_tail(s_mid, detail::tail_extent(f, s_mid, +1, g_mid));
        } else {
            B.add_right_tail(s_d, detail::tail_extent(f, s_d, +1, std::max(g_mid, g(s_d))));
        }
        quad::Options ob = opt;
        ob.abs_tol = 0.25 * cfg.rel_tol * std::fabs(ra.value);
        quad::Result rb = B.run(f, ob);
        check(rb, "upper");
        res.evaluations += rb.evaluations;
        total += rb.value;
        err += rb.error;
    }
    // heuristic allowance for the model's own evaluation error, amplified by
    // the exponent (N-j) log psi near the integrand's bulk
    double model_rel = model.closed_form_laplace() ? 2e-14 : 1e-12;
    res.value = F * total;
    res.error = F * err + model_rel * (1.0 + std::log1p(static_cast<double>(N))) * std::fabs(res.value);
    return res;
}

inline MomentResult cN_exact(const DistributionModel& model, int N, const QuadratureConfig& cfg = {}) {
    return phi_exact(model, N, 1, {2}, cfg);
}

struct ConsistencyResult {
    double residual = 0.0;  // Phi_j(k) - Phi_{j+1}(k,1) - sum_i Phi_j(k + e_i)
    double bound = 0.0;     // sum of the reported errors of all terms
};

inline ConsistencyResult consistency_residual(const DistributionModel& model, int N, int j, const std::vector<int>& k,
                                              const QuadratureConfig& cfg = {}) {
    if (j + 1 > N) throw UsageError("consistency_residual: need j + 1 <= N");
    ConsistencyResult out;
    MomentResult lhs = phi_exact(model, N, j, k, cfg);
    out.residual = lhs.value;
    out.bound = lhs.error;
    std::vector<int> ext = k;
    ext.push_back(1);
    MomentResult r = phi_exact(model, N, j + 1, ext, cfg);
    out.residual -= r.value;
    out.bound += r.error;
    for (int i = 0; i < j; ++i) {
        std::vector<int> ki = k;
        ++ki[i];
        MomentResult t = phi_exact(model, N, j, ki, cfg);
        out.residual -= t.value;
        out.bound += t.error;
    }
    return out;
}

}  // namespace cannings
