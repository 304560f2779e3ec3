#pragma once
// Fitness laws X > 0 for the mixed multinomial Cannings model.
//
// All hot-path quantities are evaluated at s = log u so that they stay
// finite for u far outside the double range:
//   laplace_complement_at(s) = 1 - psi(e^s)
//   log_laplace_at(s)        = log psi(e^s)
//   scaled_moment(p, s)      = E((uX)^p e^{-uX}) = u^p phi_p(u)

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "quadrature.hpp"
#include "rng.hpp"
#include "rv_calculus.hpp"
#include "special.hpp"

namespace cannings {

using ParamList = std::vector<std::pair<std::string, double>>;

inline std::string fmt_short(double v) {
    for (int prec = 1; prec <= 17; ++prec) {
        std::string s = fmt_g(v, prec);
        if (std::strtod(s.c_str(), nullptr) == v) return s;
    }
    return fmt_g(v, 17);
}

class DistributionModel {
public:
    virtual ~DistributionModel() = default;

    const std::string& name() const { return name_; }
    const ParamList& params() const { return params_; }
    double param(const std::string& key) const {
        for (auto& [k, v] : params_)
            if (k == key) return v;
        throw UsageError("model " + name_ + " has no parameter " + key);
    }
    std::string id() const {
        std::string s = name_;
        for (size_t i = 0; i < params_.size(); ++i)
            s += (i ? "," : ":") + params_[i].first + "=" + fmt_short(params_[i].second);
        return s;
    }

    // tail index; empty means "finite second moment" without a tail claim
    std::optional<double> alpha() const { return alpha_; }
    double mu() const { return mu_; }
    double rho() const { return rho_; }
    bool finite_mean() const { return std::isfinite(mu_); }
    bool finite_second_moment() const { return std::isfinite(rho_); }
    const std::optional<SlowlyVaryingFn>& ell() const { return ell_; }
    bool closed_form_laplace() const { return closed_laplace_; }

    virtual double sample_log(Rng& rng) const = 0;
    double sample(Rng& rng) const {
        double x = std::exp(sample_log(rng));
        return integer_valued_ && x < 4e15 ? std::round(x) : x;
    }

    virtual double tail(double x) const = 0;

    virtual double laplace_complement_at(double s) const = 0;
    virtual double log_laplace_at(double s) const {
        double c = laplace_complement_at(s);
        return c < 0.5 ? std::log1p(-c) : std::log(1.0 - c);
    }
    virtual double scaled_moment(double p, double s) const = 0;
    virtual double raw_moment(double p) const = 0;

    double laplace(double u) const {
        if (u < 0) throw DomainError("laplace: u must be non-negative");
        if (u == 0) return 1.0;
        return std::exp(log_laplace_at(std::log(u)));
    }

    double mixed_moment(double p, double u) const {
        if (!(p > 0)) throw DomainError("mixed_moment: p must be positive");
        if (u < 0) throw DomainError("mixed_moment: u must be non-negative");
        if (u == 0) {
            double m = raw_moment(p);
            if (!std::isfinite(m)) throw DivergenceError("mixed_moment: E(X^p) diverges at u=0");
            return m;
        }
        double s = std::log(u);
        double m = scaled_moment(p, s);
        if (m == 0) return 0.0;
        return std::exp(std::log(m) - p * s);
    }

    // (psi', psi'', psi''') truncated to `order` entries
    std::vector<double> laplace_derivs(double u, int order) const {
        if (order < 1 || order > 3) throw DomainError("laplace_derivs: order must be 1, 2 or 3");
        std::vector<double> d;
        for (int k = 1; k <= order; ++k) d.push_back((k % 2 ? -1.0 : 1.0) * mixed_moment(k, u));
        return d;
    }

protected:
    std::string name_;
    ParamList params_;
    std::optional<double> alpha_;
    double mu_ = kInf, rho_ = kInf;
    std::optional<SlowlyVaryingFn> ell_;
    bool closed_laplace_ = false;
    bool integer_valued_ = false;
};

using ModelPtr = std::shared_ptr<const DistributionModel>;

namespace detail {

inline quad::Options inner_opts() { return {1e-13, 0.0, 600}; }

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

inline void require_integer_order(double p, int max_p, const std::string& who) {
    if (!is_integer(p) || p < 1 || p > max_p)
        throw DomainError(who + ": only integer orders 1.." + std::to_string(max_p) + " are supported");
}

// backward geometric breakpoints from `peak` down to `lo`, then up to `hi`
inline std::vector<double> peak_breakpoints(double lo, double peak, double hi) {
    std::vector<double> pts;
    if (peak > lo) {
        double step = 1.0;
        double x = peak;
        std::vector<double> back;
        while (x > lo) {
            back.push_back(x);
            x = peak - step;
            step *= 2.0;
        }
        back.push_back(lo);
        pts.assign(back.rbegin(), back.rend());
    } else {
        pts.push_back(lo);
    }
    double start = pts.back(), step = 1.0;
    while (start + step < hi) {
        pts.push_back(start + step);
        step *= 2.0;
    }
    if (hi > pts.back()) pts.push_back(hi);
    return pts;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Closed-form laws

class Degenerate final : public DistributionModel {
public:
    explicit Degenerate(double c) : c_(c) {
        detail::require(c > 0 && std::isfinite(c), "degenerate: c must be positive");
        name_ = "degenerate";
        params_ = {{"c", c}};
        mu_ = c;
        rho_ = c * c;
        closed_laplace_ = true;
    }
    double sample_log(Rng&) const override { return std::log(c_); }
    double tail(double x) const override { return x < c_ ? 1.0 : 0.0; }
    double laplace_complement_at(double s) const override { return -std::expm1(-c_ * std::exp(s)); }
    double log_laplace_at(double s) const override { return -c_ * std::exp(s); }
    double scaled_moment(double p, double s) const override {
        double z = std::log(c_) + s;
        return std::exp(p * z - std::exp(z));
    }
    double raw_moment(double p) const override { return std::pow(c_, p); }

private:
    double c_;
};

class GammaLaw final : public DistributionModel {
public:
    explicit GammaLaw(double r) : r_(r) {
        detail::require(r > 0 && std::isfinite(r), "gamma: r must be positive");
        name_ = "gamma";
        params_ = {{"r", r}};
        mu_ = r;
        rho_ = r * (r + 1.0);
        closed_laplace_ = true;
    }
    double sample_log(Rng& rng) const override { return log_gamma_variate(r_, rng); }
    double tail(double x) const override { return x <= 0 ? 1.0 : boost::math::gamma_q(r_, x); }
    double laplace_complement_at(double s) const override { return -std::expm1(log_laplace_at(s)); }
    double log_laplace_at(double s) const override { return -r_ * log1pexp(s); }
    double scaled_moment(double p, double s) const override {
        return std::exp(p * s + std::lgamma(r_ + p) - std::lgamma(r_) - (r_ + p) * log1pexp(s));
    }
    double raw_moment(double p) const override { return std::exp(std::lgamma(r_ + p) - std::lgamma(r_)); }

private:
    double r_;
};

// X = x1 with probability p, x2 otherwise
class TwoPoint final : public DistributionModel {
public:
    TwoPoint(double x1, double x2, double p) : x_{x1, x2}, w_{p, 1.0 - p} {
        detail::require(x1 > 0 && x2 > 0 && p > 0 && p < 1, "two-point: need x1,x2 > 0 and p in (0,1)");
        name_ = "two-point";
        params_ = {{"x1", x1}, {"x2", x2}, {"p", p}};
        mu_ = p * x1 + (1 - p) * x2;
        rho_ = p * x1 * x1 + (1 - p) * x2 * x2;
        closed_laplace_ = true;
    }
    double sample_log(Rng& rng) const override { return std::log(uniform01(rng) < w_[0] ? x_[0] : x_[1]); }
    double tail(double x) const override {
        double t = 0;
        for (int i = 0; i < 2; ++i)
            if (x_[i] > x) t += w_[i];
        return t;
    }
    double laplace_complement_at(double s) const override {
        double u = std::exp(s);
        return -w_[0] * std::expm1(-x_[0] * u) - w_[1] * std::expm1(-x_[1] * u);
    }
    double log_laplace_at(double s) const override {
        double c = laplace_complement_at(s);
        if (c < 0.5) return std::log1p(-c);
        double u = std::exp(s);
        return logsumexp(std::log(w_[0]) - x_[0] * u, std::log(w_[1]) - x_[1] * u);
    }
    double scaled_moment(double p, double s) const override {
        double m = 0;
        for (int i = 0; i < 2; ++i) {
            double z = std::log(x_[i]) + s;
            m += w_[i] * std::exp(p * z - std::exp(z));
        }
        return m;
    }
    double raw_moment(double p) const override {
        return w_[0] * std::pow(x_[0], p) + w_[1] * std::pow(x_[1], p);
    }

private:
    std::array<double, 2> x_, w_;
};

// One-sided stable law with psi(u) = exp(-u^alpha)
class PositiveStable final : public DistributionModel {
public:
    static constexpr int kMaxOrder = 10;

    explicit PositiveStable(double a) : a_(a) {
        detail::require(a > 0 && a < 1, "stable: alpha must lie in (0,1)");
        name_ = "stable";
        params_ = {{"alpha", a}};
        alpha_ = a;
        ell_ = constant_ell(1.0 / std::tgamma(1.0 - a));
        closed_laplace_ = true;
        // u^k phi_k(u) = e^{-u^a} sum_j c[k][j] u^{j a}
        coef_.assign(kMaxOrder + 1, std::vector<double>(kMaxOrder + 2, 0.0));
        coef_[1][1] = a;
        for (int k = 1; k < kMaxOrder; ++k)
            for (int j = 1; j <= k; ++j) {
                double c = coef_[k][j];
                coef_[k + 1][j + 1] += a * c;
                coef_[k + 1][j] += (k - j * a) * c;
            }
    }
    double sample_log(Rng& rng) const override {
        // Kanter's representation
        double U = M_PI * uniform01(rng), E = std_exponential(rng);
        return (1.0 - a_) / a_ * (log_A(U) - std::log(E));
    }
    double tail(double x) const override {
        if (x <= 0) return 1.0;
        double lx = -a_ / (1.0 - a_) * std::log(x);
        auto f = [&](double th) { return -std::expm1(-std::exp(log_A(th) + lx)); };
        quad::Integrator in;
        in.add_interval(0.0, M_PI, 8);
        double v = in.run(f, {1e-12, 1e-300, 2000}).value / M_PI;
        return std::clamp(v, 0.0, 1.0);
    }
    double laplace_complement_at(double s) const override { return -std::expm1(-std::exp(a_ * s)); }
    double log_laplace_at(double s) const override { return -std::exp(a_ * s); }
    double scaled_moment(double p, double s) const override {
        detail::require_integer_order(p, kMaxOrder, "stable scaled_moment");
        int k = static_cast<int>(p);
        double ua = std::exp(a_ * s), m = 0;
        for (int j = 1; j <= k; ++j) m += coef_[k][j] * std::exp(j * a_ * s - ua);
        return m;
    }
    double raw_moment(double p) const override {
        if (p >= a_) return kInf;
        return std::exp(std::lgamma(1.0 - p / a_) - std::lgamma(1.0 - p));
    }

private:
    double log_A(double th) const {
        return a_ / (1.0 - a_) * std::log(std::sin(a_ * th)) - std::log(std::sin(th)) / (1.0 - a_) +
               std::log(std::sin((1.0 - a_) * th));
    }
    double a_;
    std::vector<std::vector<double>> coef_;
};

// ---------------------------------------------------------------------------
// Continuous laws given through the law of Y = log X on [y0, inf), plus an
// optional atom at y_atom.

class LogScaleLaw : public DistributionModel {
public:
    double tail(double x) const override {
        if (x <= 0) return 1.0;
        return tail_y(std::log(x));
    }

    double laplace_complement_at(double s) const override {
        // integrate in z = s + y
        double z0 = y0_ + s;
        double z_hi = std::log(50.0);
        double v = atom_ > 0 ? atom_ * -std::expm1(-std::exp(y_atom_ + s)) : 0.0;
        if (z0 >= z_hi) return v + (1.0 - atom_);
        auto f = [&](double z) { return -std::expm1(-std::exp(z)) * std::exp(log_density_y(z - s)); };
        quad::Integrator in;
        in.add_breakpoints(detail::peak_breakpoints(z0, std::max(z0, 0.0), z_hi));
        v += in.run(f, detail::inner_opts()).value;
        return v + tail_y(z_hi - s);
    }

    double log_laplace_at(double s) const override {
        double c = laplace_complement_at(s);
        if (c < 0.5) return std::log1p(-c);
        // psi = e^{-e^{z0}} (atom + int e^{-(e^z - e^{z0})} density), directly
        double z0 = y0_ + s, e0 = std::exp(z0);
        auto f = [&](double z) { return std::exp(-(std::exp(z) - e0) + log_density_y(z - s)); };
        quad::Integrator in;
        in.add_breakpoints(detail::peak_breakpoints(z0, z0, std::log(e0 + 60.0)));
        return -e0 + std::log(atom_ + in.run(f, detail::inner_opts()).value);
    }

    double scaled_moment(double p, double s) const override {
        if (!(p > 0)) throw DomainError("scaled_moment: p must be positive");
        double z0 = y0_ + s;
        double z_hi = std::log(std::exp(z0) + 8.0 * p + 60.0);
        double v = 0;
        if (atom_ > 0) {
            double z = y_atom_ + s;
            v += atom_ * std::exp(p * z - std::exp(z));
        }
        if (z0 >= z_hi) return v;
        auto f = [&](double z) { return std::exp(p * z - std::exp(z) + log_density_y(z - s)); };
        quad::Integrator in;
        in.add_breakpoints(detail::peak_breakpoints(z0, std::max(z0, std::log(p)), z_hi));
        return v + in.run(f, detail::inner_opts()).value;
    }

    double raw_moment(double p) const override {
        if (!alpha_ || p >= *alpha_) return kInf;
        double rate = *alpha_ - p;
        double v = atom_ > 0 ? atom_ * std::exp(p * y_atom_) : 0.0;
        auto f = [&](double y) { return std::exp(p * y + log_density_y(y)); };
        quad::Integrator in;
        in.add_right_tail(y0_, std::log1p(80.0 / rate + 20.0));
        return v + in.run(f, {1e-12, 0.0, 4000}).value;
    }

protected:
    virtual double log_density_y(double y) const = 0;  // y >= y0
    virtual double tail_y(double y) const = 0;         // P(Y > y)

    double y0_ = 0.0;
    double y_atom_ = 0.0, atom_ = 0.0;
};

class Pareto final : public LogScaleLaw {
public:
    explicit Pareto(double a) : a_(a) {
        detail::require(a > 0 && std::isfinite(a), "pareto: alpha must be positive");
        name_ = "pareto";
        params_ = {{"alpha", a}};
        alpha_ = a;
        mu_ = a > 1 ? a / (a - 1) : kInf;
        rho_ = a > 2 ? a / (a - 2) : kInf;
        ell_ = constant_ell(1.0);
    }
    double sample_log(Rng& rng) const override { return -std::log(uniform01(rng)) / a_; }
    double raw_moment(double p) const override { return p < a_ ? a_ / (a_ - p) : kInf; }

protected:
    double log_density_y(double y) const override { return std::log(a_) - a_ * y; }
    double tail_y(double y) const override { return y <= 0 ? 1.0 : std::exp(-a_ * y); }

private:
    double a_;
};

// P(X > x) = 1 / (1 + log x)^beta for x >= 1
class LogTail final : public LogScaleLaw {
public:
    explicit LogTail(double b) : b_(b) {
        detail::require(b > 0 && std::isfinite(b), "log-tail: beta must be positive");
        name_ = "log-tail";
        params_ = {{"beta", b}};
        alpha_ = 0.0;
        ell_ = SlowlyVaryingFn{[b](double x) { return std::pow(1.0 + std::log(x), -b); }, {}, 1.0,
                               "(1+log x)^-" + fmt_short(b), [b](double y) { return std::pow(1.0 + y, -b); }};
    }
    double sample_log(Rng& rng) const override { return std::pow(uniform01(rng), -1.0 / b_) - 1.0; }

protected:
    double log_density_y(double y) const override { return std::log(b_) - (b_ + 1.0) * std::log1p(y); }
    double tail_y(double y) const override { return y <= 0 ? 1.0 : std::pow(1.0 + y, -b_); }

private:
    double b_;
};

// P(X > x) = c x^{-alpha} (log x)^{beta-1} beyond the point x_c where the
// right side first becomes a valid (<= 1, non-increasing) tail; an atom at
// x_c carries the remaining mass.
class ParetoLog final : public LogScaleLaw {
public:
    ParetoLog(double a, double c, double b) : a_(a), c_(c), b_(b) {
        detail::require(a >= 0 && std::isfinite(a), "pareto-log: alpha must be non-negative");
        detail::require(c > 0 && std::isfinite(c), "pareto-log: c must be positive");
        detail::require(b > 0 && std::isfinite(b), "pareto-log: beta must be positive");
        detail::require(a > 0 || b < 1, "pareto-log: alpha=0 needs beta<1 for a valid tail");
        name_ = "pareto-log";
        params_ = {{"alpha", a}, {"c", c}, {"beta", b}};
        alpha_ = a;
        ell_ = log_power_ell(c, b);

        // g(y) = c e^{-a y} y^{b-1} is non-increasing beyond ym
        double ym = b > 1 ? (b - 1) / a : 0.0;
        double g_m = b > 1 ? std::exp(log_g(ym)) : (b == 1 ? c : kInf);
        if (g_m <= 1.0) {
            y0_ = ym;
            atom_ = 1.0 - g_m;
        } else {
            // root of g(y) = 1 on (ym, inf), g decreasing there
            double lo = ym, hi = std::max(1.0, 2.0 * ym);
            while (log_g(hi) > 0) hi *= 2.0;
            for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
                double mid = 0.5 * (lo + hi);
                (log_g(mid) > 0 ? lo : hi) = mid;
            }
            y0_ = hi;
            atom_ = 0.0;
        }
        y_atom_ = y0_;
        g0_ = atom_ > 0 ? 1.0 - atom_ : 1.0;
        if (a > 1) mu_ = raw_moment(1.0);
        if (a > 2) rho_ = raw_moment(2.0);
    }

    double sample_log(Rng& rng) const override {
        double U = uniform01(rng);
        if (U >= g0_) return y0_;
        double lu = std::log(U);
        if (a_ == 0) return std::exp((lu - std::log(c_)) / (b_ - 1.0));
        if (b_ == 1) return (std::log(c_) - lu) / a_;
        // Newton with bisection fallback on log g(y) = log U, y > y0
        double lo = y0_, hi = std::max(y0_ + 1.0, 2.0 * y0_);
        while (log_g(hi) > lu) {
            lo = hi;
            hi *= 2.0;
        }
        double y = 0.5 * (lo + hi);
        for (int i = 0; i < 100; ++i) {
            double h = log_g(y) - lu;
            if (h > 0) lo = y; else hi = y;
            double dh = -a_ + (b_ - 1.0) / y;
            double yn = y - h / dh;
            if (!(yn > lo && yn < hi)) yn = 0.5 * (lo + hi);
            if (std::fabs(yn - y) < 1e-14 * y) return yn;
            y = yn;
        }
        return y;
    }

protected:
    double log_g(double y) const { return std::log(c_) - a_ * y + (b_ - 1.0) * std::log(y); }
    double log_density_y(double y) const override {
        return log_g(y) + std::log(a_ - (b_ - 1.0) / y);
    }
    double tail_y(double y) const override {
        if (y < y0_) return 1.0;
        return std::exp(log_g(y));
    }

private:
    double a_, c_, b_;
    double g0_ = 1.0;
};

// ---------------------------------------------------------------------------
// Discrete laws on {1, 2, ...}

namespace detail {

// log(1 - e^{-u}) at u = e^s
inline double log_t_at(double s) {
    if (s < -40.0) return s - 0.5 * std::exp(s);
    return log1mexp(-std::exp(s));
}

// Terms coef * z^m * t^e with z = e^{-u}, t = 1 - z
struct PgfTerm {
    double coef;
    int m;
    double e;
};
using PgfPoly = std::vector<PgfTerm>;

// theta = z d/dz, term-wise: theta(z^m t^e) = m z^m t^e - e z^{m+1} t^{e-1}
inline PgfPoly theta(const PgfPoly& p) {
    std::map<std::pair<int, long long>, PgfTerm> acc;
    auto add = [&](double c, int m, double e) {
        if (c == 0) return;
        auto k = std::make_pair(m, std::llround(e * 1e9));
        auto it = acc.find(k);
        if (it == acc.end())
            acc.emplace(k, PgfTerm{c, m, e});
        else
            it->second.coef += c;
    };
    for (auto& t : p) {
        add(t.coef * t.m, t.m, t.e);
        add(-t.coef * t.e, t.m + 1, t.e - 1.0);
    }
    PgfPoly out;
    for (auto& kv : acc) out.push_back(kv.second);
    return out;
}

// u^k * sum coef z^m t^e
inline double eval_scaled(const PgfPoly& p, int k, double s) {
    double u = std::exp(s), lt = log_t_at(s), v = 0;
    for (auto& t : p) v += t.coef * std::exp(k * s - t.m * u + t.e * lt);
    return v;
}

// Stirling numbers of the second kind S(p, k), k = 0..p
inline std::vector<double> stirling2_row(int p) {
    std::vector<std::vector<double>> S(p + 1, std::vector<double>(p + 1, 0.0));
    S[0][0] = 1.0;
    for (int n = 1; n <= p; ++n)
        for (int k = 1; k <= n; ++k) S[n][k] = k * S[n - 1][k] + S[n - 1][k - 1];
    return S[p];
}

// V ~ Beta(a, b), X | V geometric on {1, 2, ...}: P(X > k | V) = (1 - V)^k
struct BetaGeometric {
    double a, b;

    double log_sample(Rng& rng) const {
        double lg1 = log_gamma_variate(a, rng), lg2 = log_gamma_variate(b, rng);
        double log1mv = -log1pexp(lg1 - lg2);  // log(1 - V)
        double ratio = std::log(uniform01(rng)) / log1mv;
        if (!(ratio < 4e15)) return std::log(ratio);
        return std::log(std::max(1.0, std::ceil(ratio)));
    }
    // P(X > k), k >= 0 integer
    double tail_int(double k) const {
        if (k <= 0) return 1.0;
        return std::exp(std::lgamma(a + b) - std::lgamma(b) - lgamma_ratio(b + k, a));
    }
    // E (X)_k = k! B(a-k, b+k-1) / B(a, b)
    double factorial_moment(int k) const {
        if (a <= k) return kInf;
        double lb = std::lgamma(a - k) + std::lgamma(b + k - 1) - std::lgamma(a + b - 1);
        double lb0 = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
        return std::exp(std::lgamma(k + 1.0) + lb - lb0);
    }
    double raw_moment(double p) const {
        if (p >= a) return kInf;
        if (!is_integer(p)) throw DomainError("beta-geometric raw_moment: integer orders only");
        auto S = stirling2_row(static_cast<int>(p));
        double m = 0;
        for (int k = 1; k <= static_cast<int>(p); ++k) m += S[k] * factorial_moment(k);
        return m;
    }

    // E_V[exp(log_h(lv, l1v))] for an integrand concentrated near V ~ e^s
    template <class LogH>
    double expect(LogH&& log_h, double s) const {
        const double ln2 = std::log(2.0);
        double lB = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
        // V = e^{-tau} on (0, 1/2]
        auto lower = [&](double tau) {
            double lv = -tau, l1v = log1mexp(-tau);
            return std::exp(a * lv + (b - 1.0) * l1v + log_h(lv, l1v) - lB);
        };
        // 1 - V = e^{-sigma} on [1/2, 1)
        auto upper = [&](double sigma) {
            double l1v = -sigma, lv = log1mexp(-sigma);
            return std::exp((a - 1.0) * lv + b * l1v + log_h(lv, l1v) - lB);
        };
        double peak = std::max(ln2, -s);
        double tau_hi = peak + 36.0 / std::min(a, 1.0) + 36.0;
        quad::Integrator lo;
        lo.add_breakpoints(peak_breakpoints(ln2, peak, tau_hi));
        double sigma_hi = ln2 + 36.0 / std::min(b, 1.0) + 8.0;
        quad::Integrator hi;
        hi.add_breakpoints(peak_breakpoints(ln2, ln2, sigma_hi));
        return lo.run(lower, inner_opts()).value + hi.run(upper, inner_opts()).value;
    }
};

}  // namespace detail

class YuleSimon final : public DistributionModel {
public:
    static constexpr int kMaxOrder = 12;

    explicit YuleSimon(double a) : bg_{a, 1.0} {
        detail::require(a > 0 && std::isfinite(a), "yule-simon: alpha must be positive");
        name_ = "yule-simon";
        integer_valued_ = true;
        params_ = {{"alpha", a}};
        alpha_ = a;
        mu_ = a > 1 ? a / (a - 1) : kInf;
        rho_ = a > 2 ? a * a / ((a - 1) * (a - 2)) : kInf;
        ell_ = constant_ell(std::tgamma(a + 1.0));
        for (int p = 0; p <= kMaxOrder; ++p) eulerian_.push_back(eulerian_row(p));
    }
    double sample_log(Rng& rng) const override { return bg_.log_sample(rng); }
    double tail(double x) const override { return x < 1 ? 1.0 : bg_.tail_int(std::floor(x)); }

    double laplace_complement_at(double s) const override {
        double u = std::exp(s), lt = detail::log_t_at(s);
        // 1 - E(z^X | v) = t / (t + v z)
        return bg_.expect([&](double lv, double) { return lt - logsumexp(lt, lv - u); }, s);
    }
    double log_laplace_at(double s) const override {
        double c = laplace_complement_at(s);
        if (c < 0.5) return std::log1p(-c);
        double u = std::exp(s), lt = detail::log_t_at(s);
        double psi = bg_.expect([&](double lv, double) { return lv - u - logsumexp(lt, lv - u); }, s);
        return std::log(psi);
    }
    double scaled_moment(double p, double s) const override {
        detail::require_integer_order(p, kMaxOrder, "yule-simon scaled_moment");
        int k = static_cast<int>(p);
        const auto& A = eulerian_[k];
        double u = std::exp(s), lt = detail::log_t_at(s);
        // u^k E(X^k z^X | v) = u^k v z A_k(q) / (1 - q)^{k+1}, q = (1 - v) z, 1 - q = t + v z
        return bg_.expect(
            [&](double lv, double l1v) {
                double q = std::exp(l1v - u);
                return k * s + lv - u + std::log(polyval(A, q)) - (k + 1) * logsumexp(lt, lv - u);
            },
            s);
    }
    double raw_moment(double p) const override { return bg_.raw_moment(p); }

private:
    detail::BetaGeometric bg_;
    std::vector<std::vector<double>> eulerian_;
};

// pgf f(z) = 1 - (1 - z)^alpha
class Sibuya final : public DistributionModel {
public:
    static constexpr int kMaxOrder = 12;

    explicit Sibuya(double a) : a_(a), bg_{a, 1.0 - a} {
        detail::require(a > 0 && a < 1, "sibuya: alpha must lie in (0,1)");
        name_ = "sibuya";
        integer_valued_ = true;
        params_ = {{"alpha", a}};
        alpha_ = a;
        ell_ = constant_ell(1.0 / std::tgamma(1.0 - a));
        closed_laplace_ = true;
        polys_.push_back({});
        polys_.push_back({{a, 1, a - 1.0}});
        for (int k = 2; k <= kMaxOrder; ++k) polys_.push_back(detail::theta(polys_.back()));
    }
    double sample_log(Rng& rng) const override { return bg_.log_sample(rng); }
    double tail(double x) const override { return x < 1 ? 1.0 : bg_.tail_int(std::floor(x)); }
    double laplace_complement_at(double s) const override { return std::exp(a_ * detail::log_t_at(s)); }
    double log_laplace_at(double s) const override { return log1mexp(a_ * detail::log_t_at(s)); }
    double scaled_moment(double p, double s) const override {
        detail::require_integer_order(p, kMaxOrder, "sibuya scaled_moment");
        int k = static_cast<int>(p);
        return detail::eval_scaled(polys_[k], k, s);
    }
    double raw_moment(double p) const override {
        if (p >= a_) return kInf;
        throw DomainError("sibuya raw_moment: only orders >= alpha (divergent) are supported");
    }
    const detail::BetaGeometric& mixture() const { return bg_; }

private:
    double a_;
    detail::BetaGeometric bg_;
    std::vector<detail::PgfPoly> polys_;
};

// pgf f(z) = (b+1) z + b ((1 - z)^alpha - 1), alpha in (1,2), 0 < b <= 1/(alpha-1)
class PgfFamily final : public DistributionModel {
public:
    static constexpr int kMaxOrder = 12;

    PgfFamily(double a, double b) : a_(a), b_(b), bg_{a, 2.0 - a} {
        detail::require(a > 1 && a < 2, "pgf: alpha must lie in (1,2)");
        detail::require(b > 0 && b <= 1.0 / (a - 1.0) * (1 + 1e-15), "pgf: b must lie in (0, 1/(alpha-1)]");
        name_ = "pgf";
        integer_valued_ = true;
        params_ = {{"alpha", a}, {"b", b}};
        alpha_ = a;
        mu_ = b + 1.0;
        ell_ = constant_ell(b / -std::tgamma(1.0 - a));
        closed_laplace_ = true;
        p_one_ = std::max(0.0, 1.0 - b * (a - 1.0));
        polys_.push_back({});
        polys_.push_back({{b + 1.0, 1, 0.0}, {-b * a, 1, a - 1.0}});
        for (int k = 2; k <= kMaxOrder; ++k) polys_.push_back(detail::theta(polys_.back()));
    }
    double sample_log(Rng& rng) const override {
        if (uniform01(rng) < p_one_) return 0.0;
        return std::log1p(std::exp(bg_.log_sample(rng)));
    }
    double tail(double x) const override {
        if (x < 1) return 1.0;
        double k = std::floor(x);
        return b_ * (a_ - 1.0) * std::exp(lgamma_ratio(k + 1.0, -a_) - std::lgamma(2.0 - a_));
    }
    double laplace_complement_at(double s) const override {
        double lt = detail::log_t_at(s);
        return std::exp(lt) * ((b_ + 1.0) - b_ * std::exp((a_ - 1.0) * lt));
    }
    double log_laplace_at(double s) const override {
        double c = laplace_complement_at(s);
        if (c < 0.5) return std::log1p(-c);
        double u = std::exp(s), lt = detail::log_t_at(s);
        return std::log((b_ + 1.0) * std::exp(-u) + b_ * std::expm1(a_ * lt));
    }
    double scaled_moment(double p, double s) const override {
        detail::require_integer_order(p, kMaxOrder, "pgf scaled_moment");
        int k = static_cast<int>(p);
        return detail::eval_scaled(polys_[k], k, s);
    }
    double raw_moment(double p) const override {
        if (p == 1.0) return mu_;
        if (p >= a_) return kInf;
        throw DomainError("pgf raw_moment: only integer orders are supported");
    }

private:
    double a_, b_, p_one_;
    detail::BetaGeometric bg_;
    std::vector<detail::PgfPoly> polys_;
};

// phi_p(u) through the tail integral E h(X) = h(x0) + int_{x0}^inf h'(x) P(X > x) dx
// with h(x) = x^p e^{-ux} and x0 the lower end of the support (read off the
// tail); an independent route for continuous laws
inline double mixed_moment_from_tail(const DistributionModel& m, double p, double u) {
    double lu = std::log(u);
    double lo = -60.0, hi = 60.0;
    if (m.tail(std::exp(lo)) < 1.0) {
        lo = -kInf;
    } else {
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            (m.tail(std::exp(mid)) >= 1.0 ? lo : hi) = mid;
        }
    }
    auto f = [&](double z) {
        double ez = std::exp(z);
        return std::exp(p * z - ez) * (p - ez) * m.tail(std::exp(z - lu));
    };
    quad::Integrator in;
    double zp = std::log(p);
    double v = 0;
    if (lo == -kInf || lo + lu < zp) {
        double z_hi = std::log(8.0 * p + 60.0);
        if (lo == -kInf)
            in.add_left_tail(zp, std::log1p(800.0 / p));
        else
            in.add_interval(lo + lu, zp, 4);
        in.add_interval(zp, z_hi, 4);
        if (lo != -kInf) v = std::exp(p * (lo + lu) - std::exp(lo + lu));
    } else {
        double z0 = lo + lu, e0 = std::exp(z0);
        in.add_interval(z0, std::log(e0 + 8.0 * p + 60.0), 8);
        v = std::exp(p * z0 - e0);
    }
    return (v + in.run(f, {1e-12, 0.0, 6000}).value) / std::exp(p * lu);
}

// ---------------------------------------------------------------------------
// Model specs: "name:key=value,key=value"

inline ModelPtr make_model(std::string_view spec) {
    std::string s(spec);
    std::string name = s.substr(0, s.find(':'));
    std::map<std::string, double> kv;
    if (auto pos = s.find(':'); pos != std::string::npos) {
        std::stringstream ss(s.substr(pos + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError("model spec '" + s + "': expected key=value, got '" + item + "'");
            std::string key = item.substr(0, eq), val = item.substr(eq + 1);
            char* end = nullptr;
            double v = std::strtod(val.c_str(), &end);
            if (val.empty() || *end != '\0') throw ConfigError("model spec '" + s + "': bad number '" + val + "'");
            kv[key] = v;
        }
    }
    auto take = [&](const std::string& key, std::optional<double> def = std::nullopt) {
        auto it = kv.find(key);
        if (it == kv.end()) {
            if (def) return *def;
            throw ConfigError("model spec '" + s + "': missing parameter " + key);
        }
        double v = it->second;
        kv.erase(it);
        return v;
    };
    ModelPtr m;
    if (name == "degenerate") m = std::make_shared<Degenerate>(take("c", 1.0));
    else if (name == "gamma") m = std::make_shared<GammaLaw>(take("r"));
    else if (name == "two-point") {
        double x1 = take("x1", 1.0), x2 = take("x2", 2.0), p = take("p", 0.5);
        m = std::make_shared<TwoPoint>(x1, x2, p);
    } else if (name == "pareto") m = std::make_shared<Pareto>(take("alpha"));
    else if (name == "pareto-log") {
        double a = take("alpha"), c = take("c", 1.0), b = take("beta");
        m = std::make_shared<ParetoLog>(a, c, b);
    } else if (name == "yule-simon") m = std::make_shared<YuleSimon>(take("alpha"));
    else if (name == "sibuya") m = std::make_shared<Sibuya>(take("alpha"));
    else if (name == "pgf") {
        double a = take("alpha"), b = take("b");
        m = std::make_shared<PgfFamily>(a, b);
    } else if (name == "log-tail") m = std::make_shared<LogTail>(take("beta"));
    else if (name == "stable") m = std::make_shared<PositiveStable>(take("alpha"));
    else throw ConfigError("unknown model '" + name + "'");
    if (!kv.empty()) throw ConfigError("model spec '" + s + "': unknown parameter " + kv.begin()->first);
    return m;
}

// representative instances of every family, spanning all regimes
inline std::vector<std::string> catalog_specs() {
    return {"degenerate:c=1",      "gamma:r=1",          "two-point:x1=1,x2=2,p=0.5",
            "pareto:alpha=3",      "pareto:alpha=2",     "pareto:alpha=1.5",
            "pareto:alpha=1",      "pareto:alpha=0.5",   "pareto-log:alpha=2,c=1,beta=2",
            "pareto-log:alpha=1,c=1,beta=2", "yule-simon:alpha=3", "yule-simon:alpha=2",
            "yule-simon:alpha=1.5", "sibuya:alpha=0.5",  "pgf:alpha=1.5,b=1",
            "log-tail:beta=2",     "stable:alpha=0.5"};
}

}  // namespace cannings
