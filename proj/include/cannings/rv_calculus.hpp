#pragma once
// Regular-variation helpers: l*, de Haan increments, a_N and two numerical
// lemma checks (Karamata-type integrals, monotone density).

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "quadrature.hpp"
#include "special.hpp"

namespace cannings {

struct SlowlyVaryingFn {
    std::function<double(double)> ell;
    std::function<double(double)> ell_star_closed;  // optional
    double x_min = 1.0;
    std::string label;
    std::function<double(double)> ell_of_log;  // optional y -> l(e^y), accurate near y = 0

    double operator()(double x) const { return ell(x); }
    bool has_closed_star() const { return static_cast<bool>(ell_star_closed); }
};

inline SlowlyVaryingFn constant_ell(double C) {
    return {[C](double) { return C; }, [C](double x) { return C * std::log(x); }, 1.0,
            "const(" + fmt_g(C, 6) + ")", [C](double) { return C; }};
}

// l(x) = c (log x)^(beta-1)
inline SlowlyVaryingFn log_power_ell(double c, double beta) {
    return {[c, beta](double x) { return c * std::pow(std::log(x), beta - 1.0); },
            [c, beta](double x) { return c / beta * std::pow(std::log(x), beta); }, 1.0,
            "log-power(c=" + fmt_g(c, 6) + ",beta=" + fmt_g(beta, 6) + ")",
            [c, beta](double y) { return c * std::pow(y, beta - 1.0); }};
}

namespace detail {

// int_{y0}^{y1} l(e^y) dy, y1 > y0 >= 0; the l(e^y) may blow up integrably at y=0
inline quad::Result log_scale_integral(const SlowlyVaryingFn& L, double y0, double y1) {
    quad::Options opt{1e-12, 0.0, 4000};
    auto f = [&](double y) {
        if (L.ell_of_log) return L.ell_of_log(y);
        double v = L.ell(std::exp(y));
        return std::isfinite(v) ? v : 0.0;
    };
    quad::Integrator in;
    double split = y0;
    if (y0 < 1.0) {
        // near y=0 integrate in w with y = y_lo * exp(-w)
        double y_lo = std::min(1.0, y1);
        auto near = [&](double w) {
            double y = y_lo * std::exp(-w);
            if (y <= y0) return 0.0;
            return f(y) * y;
        };
        quad::Integrator n;
        double w_max = y0 > 0 ? std::log(y_lo / y0) : 745.0;
        n.add_right_tail(0.0, std::log1p(w_max));
        quad::Result r0 = n.run(near, opt);
        split = y_lo;
        if (split >= y1) return r0;
        int pieces = static_cast<int>(std::min(200.0, std::ceil((y1 - split) / 4.0)));
        in.add_interval(split, y1, pieces);
        quad::Result r1 = in.run(f, opt);
        r1.value += r0.value;
        r1.error += r0.error;
        r1.converged = r1.converged && r0.converged;
        return r1;
    }
    int pieces = static_cast<int>(std::min(200.0, std::ceil((y1 - split) / 4.0)));
    in.add_interval(split, y1, pieces);
    return in.run(f, opt);
}

}  // namespace detail

// l*(x) = int_1^x l(t)/t dt
inline double ell_star(const SlowlyVaryingFn& L, double x) {
    if (!(x > 1.0)) throw DomainError("ell_star: x must exceed 1");
    if (L.has_closed_star()) return L.ell_star_closed(x);
    return detail::log_scale_integral(L, 0.0, std::log(x)).value;
}

inline double ell_star_quadrature(const SlowlyVaryingFn& L, double x) {
    if (!(x > 1.0)) throw DomainError("ell_star: x must exceed 1");
    return detail::log_scale_integral(L, 0.0, std::log(x)).value;
}

// (l*(lambda x) - l*(x)) / l(x); tends to log(lambda)
inline double de_haan_check(const SlowlyVaryingFn& L, double lambda, double x) {
    if (!(lambda > 0)) throw DomainError("de_haan_check: lambda must be positive");
    if (lambda == 1.0) return 0.0;
    double lo = std::min(x, lambda * x), hi = std::max(x, lambda * x);
    if (!(lo > 1.0)) throw DomainError("de_haan_check: lambda*x and x must exceed 1");
    double inc;
    if (L.has_closed_star())
        inc = L.ell_star_closed(hi) - L.ell_star_closed(lo);
    else
        inc = detail::log_scale_integral(L, std::log(lo), std::log(hi)).value;
    if (lambda < 1.0) inc = -inc;
    return inc / L.ell(x);
}

// exact root of l*(a) = a/N with a > N, by bisection on log a
inline double solve_aN(const SlowlyVaryingFn& L, double N) {
    if (!(N >= 2)) throw DomainError("solve_aN: N must be at least 2");
    auto h = [&](double y) {
        double a = std::exp(y);
        return std::log(ell_star(L, a) * N) - y;  // log(l*(a) N / a)
    };
    double lo = std::log(N), hi = lo + 1.0;
    if (!(h(lo) > 0)) throw SolverError("solve_aN: no sign change above a=N (N too small for this l)");
    while (h(hi) > 0) {
        lo = hi;
        hi = lo + 2.0 * (hi - std::log(N));
        if (hi > 700) throw SolverError("solve_aN: root not bracketed below 1e304");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (h(mid) > 0 ? lo : hi) = mid;
    }
    double a = std::exp(0.5 * (lo + hi));
    double resid = std::fabs(ell_star(L, a) * N / a - 1.0);
    if (!(resid < 1e-8)) throw SolverError("solve_aN: residual " + fmt_g(resid, 3) + " above 1e-8");
    return a;
}

// int phi(x_N t) f(t) dt / (phi(x_N) int t^gamma f(t) dt)
inline double karamata_quadrature_check(const std::function<double(double)>& phi, double gamma,
                                        const std::function<double(double)>& f, double x_N) {
    quad::Options opt{1e-11, 0.0, 6000};
    auto run = [&](auto&& g) {
        // substitute t = e^y
        auto h = [&](double y) {
            double t = std::exp(y);
            double v = g(t) * t;
            return std::isfinite(v) ? v : 0.0;
        };
        quad::Integrator in;
        in.add_left_tail(0.0, std::log1p(700.0));
        in.add_right_tail(0.0, std::log1p(700.0));
        quad::Result r = in.run(h, opt);
        // a convergent integral does not notice halving the log-scale range
        quad::Integrator half;
        half.add_left_tail(0.0, std::log1p(350.0));
        half.add_right_tail(0.0, std::log1p(350.0));
        quad::Result r2 = half.run(h, opt);
        if (!r.converged || !std::isfinite(r.value) || !(r.value > 0) ||
            !(std::fabs(r.value - r2.value) <= 1e-6 * r.value))
            throw DivergenceError("karamata_quadrature_check: integral does not converge");
        return r.value;
    };
    double num = run([&](double t) { return phi(x_N * t) * f(t); });
    double den = run([&](double t) { return std::pow(t, gamma) * f(t); });
    return num / (phi(x_N) * den);
}

struct MonotoneDensityPoint {
    double x;
    double G_ratio;  // x^rho G(x) / l(x)
    double g_ratio;  // x^(rho+1) g(x) / l(x), tends to rho
};

inline std::vector<MonotoneDensityPoint> monotone_density_check(const std::function<double(double)>& G,
                                                                const std::function<double(double)>& g,
                                                                double rho,
                                                                const std::function<double(double)>& ell,
                                                                const std::vector<double>& x_grid) {
    std::vector<MonotoneDensityPoint> out;
    out.reserve(x_grid.size());
    for (double x : x_grid) {
        double l = ell(x);
        out.push_back({x, std::pow(x, rho) * G(x) / l, std::pow(x, rho + 1.0) * g(x) / l});
    }
    return out;
}

// geometric grid with the given number of points per decade, from lo to hi inclusive
inline std::vector<double> geometric_grid(double lo, double hi, int per_decade = 10) {
    std::vector<double> g;
    double step = 1.0 / per_decade;
    double d0 = std::log10(lo), d1 = std::log10(hi);
    int n = static_cast<int>(std::lround((d1 - d0) / step));
    for (int i = 0; i <= n; ++i) g.push_back(std::pow(10.0, d0 + i * step));
    return g;
}

}  // namespace cannings
