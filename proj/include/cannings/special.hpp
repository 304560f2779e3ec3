#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace cannings {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// log(1 - e^x) for x <= 0
inline double log1mexp(double x) {
    if (x > -0.6931471805599453)
        return std::log(-std::expm1(x));
    return std::log1p(-std::exp(x));
}

// log(1 + e^x)
inline double log1pexp(double x) {
    if (x > 35.0) return x + std::exp(-x);
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double logsumexp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// lgamma(x + a) - lgamma(x), without the cancellation of the direct difference
inline double lgamma_ratio(double x, double a) {
    if (a == 0) return 0.0;
    if (x > 1e15 && std::fabs(a) < 1e3) return a * std::log(x) + a * (a - 1) / (2 * x);
    if (x > 0 && x + a > 0) {
        try {
            double r = boost::math::tgamma_delta_ratio(x, a);  // Gamma(x) / Gamma(x + a)
            if (r > 0 && std::isfinite(r)) return -std::log(r);
        } catch (const std::exception&) {
        }
    }
    return std::lgamma(x + a) - std::lgamma(x);
}

// (N)_j = N (N-1) ... (N-j+1)
inline double falling_factorial(double N, int j) {
    double r = 1.0;
    for (int i = 0; i < j; ++i) r *= (N - i);
    return r;
}

// [r]_k = r (r+1) ... (r+k-1)
inline double rising_factorial(double r, int k) {
    double v = 1.0;
    for (int i = 0; i < k; ++i) v *= (r + i);
    return v;
}

// Eulerian polynomial coefficients: sum_{x>=1} x^p q^x = q A_p(q) / (1-q)^{p+1}
inline std::vector<double> eulerian_row(int p) {
    std::vector<double> a{1.0};
    for (int n = 1; n <= p; ++n) {
        std::vector<double> b(static_cast<size_t>(n), 0.0);
        for (int m = 0; m < n; ++m) {
            double left = m < static_cast<int>(a.size()) ? a[m] : 0.0;
            double right = (m >= 1 && m - 1 < static_cast<int>(a.size())) ? a[m - 1] : 0.0;
            b[m] = (m + 1) * left + (n - m) * right;
        }
        a = std::move(b);
    }
    return a;
}

inline double polyval(const std::vector<double>& c, double x) {
    double r = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
    return r;
}

inline bool is_integer(double p) { return std::floor(p) == p; }

inline std::string fmt_g(double v, int prec = 17) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

}  // namespace cannings
