#include <gtest/gtest.h>

#include <map>
#include <set>

#include "cannings/partitions.hpp"
#include "cannings/rng.hpp"

using namespace cannings;

namespace {

Partition P(const std::string& s) { return Partition::parse(s); }

// Bell numbers from the Bell triangle
std::vector<long> bell_triangle(int n) {
    std::vector<long> bell{1}, row{1};
    for (int i = 1; i <= n; ++i) {
        std::vector<long> next{row.back()};
        for (long v : row) next.push_back(next.back() + v);
        bell.push_back(next.front());
        row = next;
    }
    return bell;
}

}  // namespace

TEST(Partition, CanonicalOrderAndRoundTrip) {
    Partition p(4, {{4, 2}, {3}, {1}});
    EXPECT_EQ(p.str(), "{1}{2,4}{3}");
    EXPECT_EQ(Partition::parse(p.str()), p);
    EXPECT_EQ(Partition::singletons(3).str(), "{1}{2}{3}");
    EXPECT_EQ(P("{2}{1,3}").str(), "{1,3}{2}");
}

TEST(Partition, ParseRejectsMalformedText) {
    for (auto bad : {"{1,2", "{1}{1}", "{1}{3}", "{}", "1,2", "{0}", "{1}x"})
        EXPECT_THROW(Partition::parse(bad), UsageError) << bad;
}

TEST(MergeByParent, Examples) {
    auto s3 = Partition::singletons(3);
    EXPECT_EQ(merge_by_parent(s3, std::vector<int>{7, 7, 7}).str(), "{1,2,3}");
    EXPECT_EQ(merge_by_parent(s3, std::vector<int>{1, 2, 1}).str(), "{1,3}{2}");
    auto p = P("{1,2}{3}");
    EXPECT_EQ(merge_by_parent(p, std::vector<int>{5, 9}), p);
    EXPECT_THROW(merge_by_parent(p, std::vector<int>{1, 2, 3}), UsageError);
}

TEST(Coarsening, Examples) {
    auto p = P("{1,2}{3}");
    EXPECT_TRUE(is_coarsening(p, p));
    EXPECT_TRUE(is_coarsening(P("{1}{2}"), P("{1,2}")));
    EXPECT_FALSE(is_coarsening(P("{1,2}{3}"), P("{1,3}{2}")));
    EXPECT_FALSE(is_coarsening(P("{1,2}"), P("{1}{2}")));
    EXPECT_THROW(is_coarsening(P("{1}{2}"), P("{1}{2}{3}")), UsageError);
}

TEST(MergerSpec, Examples) {
    auto m = merger_spec(Partition::singletons(4), P("{1,2,3}{4}"));
    EXPECT_EQ(m.j, 2);
    EXPECT_EQ(m.k, (std::vector<int>{3, 1}));
    auto id = merger_spec(P("{1,4}{2}{3,5}"), P("{1,4}{2}{3,5}"));
    EXPECT_EQ(id.j, 3);
    EXPECT_EQ(id.k, (std::vector<int>{1, 1, 1}));
    auto t = merger_spec(Partition::singletons(5), P("{1,2}{3,4}{5}"));
    EXPECT_EQ(t.j, 3);
    EXPECT_EQ(t.k, (std::vector<int>{2, 2, 1}));
    EXPECT_THROW(merger_spec(P("{1,2}{3}"), P("{1,3}{2}")), UsageError);
}

TEST(MergeByParent, RandomLabelsGiveCoarseningsWithConsistentSpec) {
    Rng rng = make_stream(1, {0});
    for (int rep = 0; rep < 500; ++rep) {
        int n = 1 + static_cast<int>(rng() % 8);
        auto parts = enumerate_partitions(n);
        const auto& pi = parts[rng() % parts.size()];
        std::vector<int> labels(pi.size());
        for (auto& l : labels) l = static_cast<int>(rng() % 4);
        auto coarse = merge_by_parent(pi, labels);
        ASSERT_TRUE(is_coarsening(pi, coarse)) << pi.str() << " -> " << coarse.str();
        auto m = merger_spec(pi, coarse);
        int sum = 0;
        for (int k : m.k) {
            EXPECT_GE(k, 1);
            sum += k;
        }
        EXPECT_EQ(sum, pi.size());
        EXPECT_EQ(m.j, static_cast<int>(std::set<int>(labels.begin(), labels.end()).size()));
    }
}

TEST(Enumerate, BellNumbersAndDistinctValidPartitions) {
    auto bell = bell_triangle(8);
    EXPECT_EQ(bell[4], 15);
    EXPECT_EQ(bell[5], 52);
    for (int n = 1; n <= 8; ++n) {
        auto parts = enumerate_partitions(n);
        EXPECT_EQ(static_cast<long>(parts.size()), bell[n]) << n;
        std::set<Partition> uniq(parts.begin(), parts.end());
        EXPECT_EQ(uniq.size(), parts.size());
        for (auto& p : parts) EXPECT_NO_THROW(p.validate());
    }
    EXPECT_THROW(enumerate_partitions(0), UsageError);
}

TEST(Enumerate, CountBySizesMatchesEnumeration) {
    for (int b = 1; b <= 7; ++b) {
        std::map<std::vector<int>, int> hist;
        for (auto& p : enumerate_partitions(b)) {
            std::vector<int> sizes;
            for (auto& blk : p.blocks()) sizes.push_back(static_cast<int>(blk.size()));
            std::sort(sizes.rbegin(), sizes.rend());
            ++hist[sizes];
        }
        for (auto& [sizes, count] : hist)
            EXPECT_EQ(count_partitions_with_sizes(sizes), count) << b;
    }
    EXPECT_EQ(count_partitions_with_sizes({2, 2}), 3);
    EXPECT_EQ(count_partitions_with_sizes({1, 3, 1}), 10);
}
