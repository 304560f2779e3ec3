#pragma once
// Set partitions of {1, ..., n}; blocks sorted internally and ordered by
// their least element.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "special.hpp"

namespace cannings {

class Partition {
public:
    using Block = std::vector<int>;

    Partition() = default;
    Partition(int n, std::vector<Block> blocks) : n_(n), blocks_(std::move(blocks)) { canonicalize(); }

    static Partition singletons(int n) {
        std::vector<Block> b;
        for (int i = 1; i <= n; ++i) b.push_back({i});
        return Partition(n, std::move(b));
    }

    int n() const { return n_; }
    int size() const { return static_cast<int>(blocks_.size()); }
    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& operator[](int i) const { return blocks_[i]; }

    bool operator==(const Partition& o) const { return n_ == o.n_ && blocks_ == o.blocks_; }
    bool operator!=(const Partition& o) const { return !(*this == o); }
    bool operator<(const Partition& o) const {
        return n_ != o.n_ ? n_ < o.n_ : blocks_ < o.blocks_;
    }

    std::string str() const {
        std::string s;
        for (auto& b : blocks_) {
            s += '{';
            for (size_t i = 0; i < b.size(); ++i) s += (i ? "," : "") + std::to_string(b[i]);
            s += '}';
        }
        return s;
    }

    // inverse of str(); n is the largest element present
    static Partition parse(const std::string& text) {
        std::vector<Block> blocks;
        size_t i = 0;
        int n = 0;
        auto fail = [&] { throw UsageError("cannot parse partition '" + text + "'"); };
        while (i < text.size()) {
            if (text[i] != '{') fail();
            ++i;
            Block b;
            while (i < text.size() && text[i] != '}') {
                size_t used = 0;
                int v = std::stoi(text.substr(i), &used);
                if (used == 0 || v < 1) fail();
                b.push_back(v);
                n = std::max(n, v);
                i += used;
                if (i < text.size() && text[i] == ',') ++i;
            }
            if (i >= text.size() || b.empty()) fail();
            ++i;
            blocks.push_back(std::move(b));
        }
        Partition p(n, std::move(blocks));
        p.validate();
        return p;
    }

    void validate() const {
        std::vector<int> seen(static_cast<size_t>(n_) + 1, 0);
        for (auto& b : blocks_) {
            if (b.empty()) throw UsageError("partition has an empty block");
            for (int v : b) {
                if (v < 1 || v > n_ || seen[v]++) throw UsageError("partition blocks must be disjoint subsets of 1..n");
            }
        }
        for (int v = 1; v <= n_; ++v)
            if (!seen[v]) throw UsageError("partition does not cover " + std::to_string(v));
    }

private:
    void canonicalize() {
        for (auto& b : blocks_) std::sort(b.begin(), b.end());
        std::sort(blocks_.begin(), blocks_.end(), [](const Block& a, const Block& b) {
            return a.front() < b.front();
        });
    }

    int n_ = 0;
    std::vector<Block> blocks_;
};

struct MergerSpec {
    int j = 0;
    std::vector<int> k;  // k[i] = number of old blocks inside new block i
};

// union the blocks of pi that carry equal labels
template <class Label>
Partition merge_by_parent(const Partition& pi, const std::vector<Label>& labels) {
    if (static_cast<int>(labels.size()) != pi.size())
        throw UsageError("merge_by_parent: need exactly one label per block");
    std::map<Label, Partition::Block> groups;
    for (int i = 0; i < pi.size(); ++i) {
        auto& g = groups[labels[i]];
        g.insert(g.end(), pi[i].begin(), pi[i].end());
    }
    std::vector<Partition::Block> out;
    out.reserve(groups.size());
    for (auto& [lab, b] : groups) out.push_back(std::move(b));
    return Partition(pi.n(), std::move(out));
}

// every block of pi lies inside a block of coarse
inline bool is_coarsening(const Partition& pi, const Partition& coarse) {
    if (pi.n() != coarse.n()) throw UsageError("is_coarsening: partitions of different sets");
    std::vector<int> owner(static_cast<size_t>(pi.n()) + 1, -1);
    for (int i = 0; i < coarse.size(); ++i)
        for (int v : coarse[i]) owner[v] = i;
    for (auto& b : pi.blocks())
        for (int v : b)
            if (owner[v] != owner[b.front()]) return false;
    return true;
}

inline MergerSpec merger_spec(const Partition& pi, const Partition& coarse) {
    if (!is_coarsening(pi, coarse)) throw UsageError("merger_spec: second partition is not a coarsening of the first");
    std::vector<int> owner(static_cast<size_t>(pi.n()) + 1, -1);
    for (int i = 0; i < coarse.size(); ++i)
        for (int v : coarse[i]) owner[v] = i;
    MergerSpec m;
    m.j = coarse.size();
    m.k.assign(m.j, 0);
    for (auto& b : pi.blocks()) ++m.k[owner[b.front()]];
    return m;
}

// all partitions of {1..n} via restricted growth strings
inline std::vector<Partition> enumerate_partitions(int n) {
    if (n < 1 || n > 10) throw UsageError("enumerate_partitions: n must lie in 1..10");
    std::vector<Partition> out;
    std::vector<int> a(n, 0), mx(n, 0);
    for (;;) {
        int nb = *std::max_element(a.begin(), a.end()) + 1;
        std::vector<Partition::Block> blocks(nb);
        for (int i = 0; i < n; ++i) blocks[a[i]].push_back(i + 1);
        out.emplace_back(n, std::move(blocks));
        int i = n - 1;
        while (i > 0 && a[i] == mx[i - 1] + 1) --i;
        if (i == 0) break;
        ++a[i];
        int m = std::max(mx[i - 1], a[i]);
        mx[i] = m;
        for (int t = i + 1; t < n; ++t) {
            a[t] = 0;
            mx[t] = m;
        }
    }
    return out;
}

// partitions of {1..b} into blocks whose sizes are a permutation of `sizes`
inline double count_partitions_with_sizes(std::vector<int> sizes) {
    int b = 0;
    for (int k : sizes) b += k;
    double lc = std::lgamma(b + 1.0);
    std::map<int, int> mult;
    for (int k : sizes) {
        lc -= std::lgamma(k + 1.0);
        ++mult[k];
    }
    for (auto& [k, m] : mult) lc -= std::lgamma(m + 1.0);
    return std::round(std::exp(lc));
}

}  // namespace cannings
