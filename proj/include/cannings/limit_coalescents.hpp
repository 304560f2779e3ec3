#pragma once
// Limiting objects: Lambda moments for Kingman / Beta / Bolthausen-Sznitman /
// star-shaped, and the discrete-time PD(alpha, 0) transition law.

#include <cmath>
#include <string>
#include <vector>

#include "dist_catalog.hpp"
#include "rv_calculus.hpp"

namespace cannings {

struct LambdaSpec {
    enum class Variant { DiracAt0, Beta, Uniform, DiracAt1 };
    Variant variant = Variant::DiracAt0;
    double alpha = 0.0;  // Beta(2 - alpha, alpha)

    static LambdaSpec kingman() { return {Variant::DiracAt0, 0.0}; }
    static LambdaSpec beta(double a) {
        if (!(a > 0 && a < 2)) throw DomainError("Beta(2-alpha, alpha) needs alpha in (0,2)");
        return {Variant::Beta, a};
    }
    static LambdaSpec uniform() { return {Variant::Uniform, 1.0}; }
    static LambdaSpec star() { return {Variant::DiracAt1, 0.0}; }
};

// int x^{k-2} Lambda(dx)
inline double lambda_moment(const LambdaSpec& L, int k) {
    if (k < 2) throw DomainError("lambda_moment: k must be at least 2");
    switch (L.variant) {
        case LambdaSpec::Variant::DiracAt0:
            return k == 2 ? 1.0 : 0.0;
        case LambdaSpec::Variant::Beta:
            return std::exp(std::lgamma(k - L.alpha) - std::lgamma(k) - std::lgamma(2.0 - L.alpha));
        case LambdaSpec::Variant::Uniform:
            return 1.0 / (k - 1);
        case LambdaSpec::Variant::DiracAt1:
            return 1.0;
    }
    return kNaN;
}

// continuous-time rate lambda_{b,k} = int x^{k-2} (1-x)^{b-k} Lambda(dx)
inline double lambda_rate(const LambdaSpec& L, int b, int k) {
    if (k < 2 || k > b) throw DomainError("lambda_rate: need 2 <= k <= b");
    auto lbeta = [](double x, double y) { return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y); };
    switch (L.variant) {
        case LambdaSpec::Variant::DiracAt0:
            return k == 2 ? 1.0 : 0.0;
        case LambdaSpec::Variant::Beta:
            return std::exp(lbeta(k - L.alpha, b - k + L.alpha) - lbeta(2.0 - L.alpha, L.alpha));
        case LambdaSpec::Variant::Uniform:
            return std::exp(lbeta(k - 1.0, b - k + 1.0));
        case LambdaSpec::Variant::DiracAt1:
            return k == b ? 1.0 : 0.0;
    }
    return kNaN;
}

// phi_j(k) = alpha^{j-1} Gamma(j) / Gamma(k) prod Gamma(k_i - alpha) / Gamma(1 - alpha)
inline double pd_transition(double alpha, int j, const std::vector<int>& k) {
    if (!(alpha > 0 && alpha < 1)) throw DomainError("pd_transition: alpha must lie in (0,1)");
    if (j < 1 || static_cast<int>(k.size()) != j) throw UsageError("pd_transition: need j group sizes");
    int p = 0;
    double l = (j - 1) * std::log(alpha) + std::lgamma(j);
    for (int ki : k) {
        if (ki < 1) throw UsageError("pd_transition: group sizes must be >= 1");
        p += ki;
        l += std::lgamma(ki - alpha) - std::lgamma(1.0 - alpha);
    }
    return std::exp(l - std::lgamma(p));
}

// phi_j(k) - phi_{j+1}(k, 1) - sum_i phi_j(k + e_i)
inline double pd_consistency_check(double alpha, int j, const std::vector<int>& k) {
    double r = pd_transition(alpha, j, k);
    std::vector<int> ext = k;
    ext.push_back(1);
    r -= pd_transition(alpha, j + 1, ext);
    for (int i = 0; i < j; ++i) {
        std::vector<int> ki = k;
        ++ki[i];
        r -= pd_transition(alpha, j, ki);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Regime branches

enum class Regime { KingmanMoment, KingmanAlpha2, Beta, BolthausenSznitman, PoissonDirichlet, StarShaped };

inline std::string regime_key(Regime r) {
    switch (r) {
        case Regime::KingmanMoment: return "KingmanMoment";
        case Regime::KingmanAlpha2: return "KingmanAlpha2";
        case Regime::Beta: return "Beta";
        case Regime::BolthausenSznitman: return "BolthausenSznitman";
        case Regime::PoissonDirichlet: return "PD";
        case Regime::StarShaped: return "StarShaped";
    }
    return "?";
}

inline Regime regime_of(const DistributionModel& m) {
    auto a = m.alpha();
    if (m.finite_second_moment()) {
        if (a && *a < 2) throw ConfigError(m.id() + ": tail index below 2 contradicts a finite second moment");
        return Regime::KingmanMoment;
    }
    if (!a) throw ConfigError(m.id() + ": neither a finite second moment nor a tail index is declared");
    double al = *a;
    if (al > 2) throw ConfigError(m.id() + ": tail index above 2 forces a finite second moment");
    if (al == 2) return Regime::KingmanAlpha2;
    if (al > 1) return Regime::Beta;
    if (al == 1) return Regime::BolthausenSznitman;
    if (al > 0) return Regime::PoissonDirichlet;
    if (al == 0) return Regime::StarShaped;
    throw ConfigError(m.id() + ": negative tail index");
}

struct CnPrediction {
    double value = kNaN;
    Regime regime = Regime::KingmanMoment;
    double a_N = kNaN;  // only for the alpha = 1 branch
};

inline CnPrediction predicted_cN(const DistributionModel& m, double N) {
    CnPrediction p;
    p.regime = regime_of(m);
    auto need_mu = [&] {
        if (!m.finite_mean()) throw ConfigError(m.id() + ": predicted c_N needs a finite mean");
    };
    auto need_ell = [&]() -> const SlowlyVaryingFn& {
        if (!m.ell()) throw ConfigError(m.id() + ": predicted c_N needs the slowly varying factor");
        return *m.ell();
    };
    switch (p.regime) {
        case Regime::KingmanMoment:
            need_mu();
            p.value = m.rho() / (m.mu() * m.mu() * N);
            break;
        case Regime::KingmanAlpha2:
            need_mu();
            p.value = 2.0 * ell_star(need_ell(), N) / (m.mu() * m.mu() * N);
            break;
        case Regime::Beta: {
            need_mu();
            double a = *m.alpha();
            p.value = std::tgamma(2.0 - a) * std::tgamma(a + 1.0) * need_ell()(N) /
                      (std::pow(m.mu(), a) * std::pow(N, a - 1.0));
            break;
        }
        case Regime::BolthausenSznitman: {
            const auto& L = need_ell();
            p.a_N = solve_aN(L, N);
            p.value = L(p.a_N) / ell_star(L, p.a_N);
            break;
        }
        case Regime::PoissonDirichlet:
            p.value = 1.0 - *m.alpha();
            break;
        case Regime::StarShaped:
            p.value = 1.0;
            break;
    }
    return p;
}

}  // namespace cannings
