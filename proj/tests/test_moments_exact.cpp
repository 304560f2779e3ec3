#include <gtest/gtest.h>

#include <cmath>

#include "cannings/cannings_sim.hpp"
#include "cannings/moments_exact.hpp"

using namespace cannings;

namespace {

int total(const std::vector<int>& k) {
    int p = 0;
    for (int v : k) p += v;
    return p;
}

// symmetric Dirichlet(r): (N)_j prod [r]_{k_i} / [rN]_p
double dirichlet_phi(double r, int N, const std::vector<int>& k) {
    double v = falling_factorial(N, static_cast<int>(k.size()));
    for (int ki : k) v *= rising_factorial(r, ki);
    return v / rising_factorial(r * N, total(k));
}

}  // namespace

TEST(PhiExact, DegenerateClosedForm) {
    auto m = make_model("degenerate:c=1.7");
    EXPECT_NEAR(phi_exact(*m, 10, 1, {2}).value, 0.1, 1e-12);
    for (int N : {3, 10, 1000, 100000})
        for (std::vector<int> k : {std::vector<int>{2}, {3}, {1, 1}, {2, 2}, {2, 1, 1}}) {
            if (static_cast<int>(k.size()) > N) continue;
            auto r = phi_exact(*m, N, static_cast<int>(k.size()), k);
            double expect = falling_factorial(N, static_cast<int>(k.size())) * std::pow(N, -total(k));
            EXPECT_NEAR(r.value, expect, 1e-10 * expect + r.error) << N;
            EXPECT_GE(r.error, 0.0);
        }
}

TEST(PhiExact, GammaDirichletMoments) {
    EXPECT_NEAR(phi_exact(*make_model("gamma:r=1"), 10, 1, {2}).value, 2.0 / 11.0, 1e-10);
    for (double r : {0.5, 1.0, 2.5})
        for (int N : {2, 10, 300, 50000})
            for (std::vector<int> k : {std::vector<int>{2}, {3}, {1, 1}, {2, 2}, {3, 1}, {1, 1, 1}}) {
                if (static_cast<int>(k.size()) > N) continue;
                auto m = make_model("gamma:r=" + fmt_g(r));
                auto res = phi_exact(*m, N, static_cast<int>(k.size()), k);
                double expect = dirichlet_phi(r, N, k);
                EXPECT_NEAR(res.value / expect, 1.0, 1e-8) << "r=" << r << " N=" << N << " j=" << k.size();
                EXPECT_LE(std::fabs(res.value - expect), res.error + 1e-15) << "r=" << r << " N=" << N;
            }
}

TEST(PhiExact, NormalizationForEveryModel) {
    for (auto& spec : catalog_specs()) {
        auto m = make_model(spec);
        for (int N : {2, 100, 100000}) {
            auto r = phi_exact(*m, N, 1, {1});
            EXPECT_NEAR(r.value, 1.0, 1e-8) << spec << " N=" << N;
            EXPECT_LE(r.value, 1.0 + r.error) << spec;
        }
    }
}

TEST(PhiExact, ProbabilityRangeAndMethodTag) {
    for (auto& spec : catalog_specs()) {
        auto r = phi_exact(*make_model(spec), 500, 2, {2, 1});
        EXPECT_GE(r.value, 0.0) << spec;
        EXPECT_LE(r.value, 1.0) << spec;
        EXPECT_EQ(r.method, "integral");
        EXPECT_EQ(r.N, 500);
        EXPECT_EQ(r.j, 2);
        EXPECT_EQ(r.k, (std::vector<int>{2, 1}));
    }
}

TEST(PhiExact, MoreGroupsThanIndividualsVanish) {
    auto r = phi_exact(*make_model("pareto:alpha=1"), 2, 3, {1, 1, 1});
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.error, 0.0);
}

TEST(PhiExact, ErrorsAndConfigValidation) {
    auto m = make_model("gamma:r=1");
    EXPECT_THROW(phi_exact(*m, 10, 2, {1}), UsageError);
    EXPECT_THROW(phi_exact(*m, 0, 1, {1}), UsageError);
    QuadratureConfig bad;
    bad.delta = 0;
    EXPECT_THROW(phi_exact(*m, 10, 1, {2}, bad), ConfigError);
    bad.delta = kInf;
    EXPECT_THROW(phi_exact(*m, 10, 1, {2}, bad), ConfigError);
    QuadratureConfig tight;
    // unreachable tolerance with almost no refinement budget
    tight.max_subdivisions = 2;
    tight.rel_tol = 1e-30;
    EXPECT_THROW(phi_exact(*make_model("log-tail:beta=2"), 100000, 2, {2, 2}, tight), QuadratureError);
    try {
        phi_exact(*make_model("pareto:alpha=0.5"), 1000, 1, {2}, tight);
        ADD_FAILURE() << "no exception";
    } catch (const QuadratureError& e) {
        EXPECT_NE(std::string(e.what()).find("pareto:alpha=0.5"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("evaluations"), std::string::npos) << e.what();
    }
}

TEST(CNExact, Examples) {
    for (int N : {1, 7, 1000}) EXPECT_NEAR(cN_exact(*make_model("degenerate:c=1"), N).value, 1.0 / N, 1e-12);
    EXPECT_NEAR(cN_exact(*make_model("gamma:r=1"), 99).value, 0.02, 1e-8);
    // rho / mu^2 = (alpha - 1)^2 / (alpha (alpha - 2)) = 4/3 for alpha = 3
    EXPECT_NEAR(1e4 * cN_exact(*make_model("pareto:alpha=3"), 10000).value / (4.0 / 3.0), 1.0, 0.05);
}

TEST(CNExact, TwoPointLawEnumeration) {
    for (double p : {0.5, 0.2}) {
        auto m = make_model("two-point:x1=1,x2=2,p=" + fmt_g(p));
        double c = 0, d = 0, e = 0;
        for (double x1 : {1.0, 2.0})
            for (double x2 : {1.0, 2.0}) {
                double pr = (x1 == 1 ? p : 1 - p) * (x2 == 1 ? p : 1 - p);
                double w1 = x1 / (x1 + x2), w2 = 1 - w1;
                c += pr * 2 * w1 * w1;
                d += pr * 2 * w1 * w2;
                e += pr * 2 * std::pow(w1, 3) * w2;
            }
        EXPECT_NEAR(cN_exact(*m, 2).value, c, 1e-10);
        EXPECT_NEAR(phi_exact(*m, 2, 2, {1, 1}).value, d, 1e-10);
        EXPECT_NEAR(phi_exact(*m, 2, 2, {3, 1}).value, e, 1e-10);
    }
}

TEST(Consistency, Examples) {
    auto d = consistency_residual(*make_model("degenerate:c=1"), 10, 1, {2});
    EXPECT_NEAR(d.residual, 0.0, 1e-14);
    auto g = consistency_residual(*make_model("gamma:r=1"), 10, 1, {2});
    EXPECT_NEAR(g.residual, 0.0, 1e-8);
    auto p = consistency_residual(*make_model("pareto:alpha=1.5"), 100, 2, {2, 2});
    EXPECT_LE(std::fabs(p.residual), 10 * p.bound);
    EXPECT_GT(p.bound, 0.0);
    EXPECT_THROW(consistency_residual(*make_model("gamma:r=1"), 2, 2, {1, 1}), UsageError);
}

TEST(Consistency, RandomQueriesWithinReportedError) {
    Rng rng = make_stream(31, {0});
    auto specs = catalog_specs();
    for (int t = 0; t < 30; ++t) {
        const auto& spec = specs[rng() % specs.size()];
        int N = 10 + static_cast<int>(rng() % 2000);
        int j = 1 + static_cast<int>(rng() % 2);
        std::vector<int> k(j);
        for (auto& v : k) v = 1 + static_cast<int>(rng() % 3);
        auto r = consistency_residual(*make_model(spec), N, j, k);
        EXPECT_LE(std::fabs(r.residual), 10 * r.bound) << spec << " N=" << N << " j=" << j;
    }
}

TEST(Monotonicity, DominatingQueryPairs) {
    // Phi_j(k) <= Phi_l(m) when j >= l and k dominates m componentwise on the first l groups
    Rng rng = make_stream(32, {0});
    auto specs = catalog_specs();
    for (int t = 0; t < 30; ++t) {
        const auto& spec = specs[rng() % specs.size()];
        auto m = make_model(spec);
        int N = 5 + static_cast<int>(rng() % 5000);
        int l = 1 + static_cast<int>(rng() % 2);
        std::vector<int> small(l);
        for (auto& v : small) v = 1 + static_cast<int>(rng() % 2);
        std::vector<int> big = small;
        for (auto& v : big) v += static_cast<int>(rng() % 2);
        if (rng() % 2 && l < 3) big.push_back(1 + static_cast<int>(rng() % 2));
        if (big == small) ++big[0];
        auto a = phi_exact(*m, N, static_cast<int>(big.size()), big);
        auto b = phi_exact(*m, N, l, small);
        EXPECT_LE(a.value, b.value + a.error + b.error) << spec << " N=" << N;
    }
}

TEST(Delta, HalvingDeltaWithinReportedError) {
    QuadratureConfig half;
    half.delta = 0.5;
    for (auto& spec : catalog_specs()) {
        auto m = make_model(spec);
        for (int N : {50, 20000}) {
            auto a = phi_exact(*m, N, 1, {2});
            auto b = phi_exact(*m, N, 1, {2}, half);
            EXPECT_LE(std::fabs(a.value - b.value), a.error) << spec << " N=" << N;
            auto c = phi_exact(*m, N, 2, {2, 2});
            auto d = phi_exact(*m, N, 2, {2, 2}, half);
            EXPECT_LE(std::fabs(c.value - d.value), c.error) << spec << " N=" << N;
        }
    }
}

const std::vector<PhiQuery> kCrossQueries = {{1, {2}}, {1, {3}}, {2, {2, 2}}, {2, {1, 1}}};

// power sums lose ~1e-13 relative to cancellation when the SE is zero (degenerate law).
// Beyond N = 100 the plain estimator misses the rare X ~ N draws that carry
// Phi_1(3) when E X^3 is infinite; the conditional estimator covers the grid.
TEST(CrossMethod, ExactInsideFourSEOfPowerSumMonteCarlo) {
    std::uint64_t stream = 0;
    for (auto& spec : catalog_specs()) {
        auto m = make_model(spec);
        for (int N : {100}) {
            McOptions o;
            o.reps = 2000;
            o.batch = 250;
            o.seed = 2024;
            o.stream = stream++;
            auto mc = estimate_phis(*m, N, kCrossQueries, o);
            for (size_t i = 0; i < kCrossQueries.size(); ++i) {
                auto ex = phi_exact(*m, N, kCrossQueries[i].j, kCrossQueries[i].k);
                EXPECT_LE(std::fabs(ex.value - mc[i].value), 4 * mc[i].se + ex.error + 1e-12 * ex.value)
                    << spec << " N=" << N << " query " << i << " exact " << ex.value << " mc " << mc[i].value
                    << " se " << mc[i].se;
            }
        }
    }
}

TEST(CrossMethod, ExactInsideFourSEOfConditionalMonteCarlo) {
    std::uint64_t stream = 100;
    for (auto& spec : catalog_specs()) {
        auto m = make_model(spec);
        for (int N : {100, 1000, 10000}) {
            McOptions o;
            o.reps = 200;
            o.batch = 50;
            o.seed = 2025;
            for (auto& q : kCrossQueries) {
                o.stream = stream++;
                auto mc = estimate_phi_conditional(*m, N, q.j, q.k, o);
                auto ex = phi_exact(*m, N, q.j, q.k);
                EXPECT_LE(std::fabs(ex.value - mc.value), 4 * mc.se + ex.error + 1e-12 * ex.value)
                    << spec << " N=" << N << " j=" << q.j << " exact " << ex.value << " mc " << mc.value
                    << " se " << mc.se;
            }
        }
    }
}
