#pragma once
// Globally adaptive 21-point Gauss-Kronrod integration over a union of panels,
// some of which are exponentially stretched half-lines.

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "special.hpp"

namespace cannings::quad {

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    int max_subdivisions = 4000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    int subdivisions = 0;
    bool converged = true;
};

enum class Map { identity, right_tail, left_tail };

namespace detail {

inline constexpr double xgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr double wgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525452978, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr double wg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
    double a, b;
    Map map;
    double origin;
    double value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
double eval_mapped(F& f, Map map, double origin, double w) {
    switch (map) {
        case Map::identity:
            return f(w);
        case Map::right_tail: {
            double e = std::exp(w);
            return f(origin + (e - 1.0)) * e;
        }
        case Map::left_tail: {
            double e = std::exp(w);
            return f(origin - (e - 1.0)) * e;
        }
    }
    return 0.0;
}

template <class F>
void gk21(F& f, Panel& p, int& evals) {
    double c = 0.5 * (p.a + p.b), h = 0.5 * (p.b - p.a);
    double fc = eval_mapped(f, p.map, p.origin, c);
    double rk = fc * wgk[10], rg = 0.0;
    for (int i = 0; i < 10; ++i) {
        double dx = h * xgk[i];
        double f1 = eval_mapped(f, p.map, p.origin, c - dx);
        double f2 = eval_mapped(f, p.map, p.origin, c + dx);
        rk += wgk[i] * (f1 + f2);
        if (i % 2 == 1) rg += wg[i / 2] * (f1 + f2);
    }
    evals += 21;
    p.value = rk * h;
    p.error = std::fabs((rk - rg) * h);
    if (!std::isfinite(p.value)) p.error = kInf;
}

}  // namespace detail

// Collects panels, then refines globally by bisecting the panel with the
// largest error estimate.
class Integrator {
public:
    void add_interval(double a, double b, int pieces = 1) {
        if (!(b > a)) return;
        for (int i = 0; i < pieces; ++i) {
            double lo = a + (b - a) * i / pieces;
            double hi = (i + 1 == pieces) ? b : a + (b - a) * (i + 1) / pieces;
            panels_.push_back({lo, hi, Map::identity, 0.0, 0.0, 0.0});
        }
    }
    void add_breakpoints(const std::vector<double>& pts) {
        for (size_t i = 0; i + 1 < pts.size(); ++i) add_interval(pts[i], pts[i + 1]);
    }
    // [origin, origin + expm1(w_max)] in the stretched variable w
    void add_right_tail(double origin, double w_max) { add_tail(Map::right_tail, origin, w_max); }
    // [origin - expm1(w_max), origin]
    void add_left_tail(double origin, double w_max) { add_tail(Map::left_tail, origin, w_max); }

    template <class F>
    Result run(F&& f, const Options& opt = {}) const {
        Result res;
        double frozen_err = 0.0;
        std::priority_queue<detail::Panel> heap;
        double total = 0.0, err = 0.0;
        for (auto p : panels_) {
            detail::gk21(f, p, res.evaluations);
            total += p.value;
            err += p.error;
            heap.push(p);
        }
        auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::fabs(total)); };
        while (!heap.empty() && err > target()) {
            if (res.subdivisions >= opt.max_subdivisions) {
                res.converged = false;
                break;
            }
            detail::Panel p = heap.top();
            double mid = 0.5 * (p.a + p.b);
            if (!(mid > p.a && mid < p.b) || std::fabs(p.b - p.a) < 1e-14 * (1.0 + std::fabs(mid))) {
                // cannot refine further; accept the panel as is
                res.converged = res.converged && std::isfinite(p.error);
                heap.pop();
                frozen_err += p.error;
                continue;
            }
            heap.pop();
            detail::Panel l{p.a, mid, p.map, p.origin, 0, 0}, r{mid, p.b, p.map, p.origin, 0, 0};
            detail::gk21(f, l, res.evaluations);
            detail::gk21(f, r, res.evaluations);
            total += l.value + r.value - p.value;
            err += l.error + r.error - p.error;
            heap.push(l);
            heap.push(r);
            ++res.subdivisions;
        }
        // re-sum to shed accumulated cancellation in the running totals
        double v = 0.0, e = frozen_err;
        auto copy = heap;
        while (!copy.empty()) {
            v += copy.top().value;
            e += copy.top().error;
            copy.pop();
        }
        res.value = v;
        res.error = e + 1e-15 * std::fabs(v);
        if (!std::isfinite(res.value) || !std::isfinite(res.error)) res.converged = false;
        return res;
    }

private:
    void add_tail(Map m, double origin, double w_max) {
        static constexpr double grid[] = {0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0,
                                          6.0, 7.0, 8.0, 10.0, 12.0, 15.0, 18.0, 22.0, 27.0, 33.0};
        double prev = 0.0;
        for (double g : grid) {
            if (g <= prev) continue;
            double hi = std::min(g, w_max);
            panels_.push_back({prev, hi, m, origin, 0.0, 0.0});
            prev = hi;
            if (hi >= w_max) break;
        }
        if (prev < w_max) panels_.push_back({prev, w_max, m, origin, 0.0, 0.0});
    }
    std::vector<detail::Panel> panels_;
};

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}, int pieces = 1) {
    Integrator in;
    in.add_interval(a, b, pieces);
    return in.run(f, opt);
}

}  // namespace cannings::quad
