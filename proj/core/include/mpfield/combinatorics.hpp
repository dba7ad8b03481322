#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mpfield {

using BigInt = boost::multiprecision::cpp_int;

// Largest partition order enumerated unless the caller raises the limit.
// B(12) = 4'213'597 paths.
inline constexpr int kDefaultMaxOrder = 12;

// A set partition of {1..p} stored as a restricted-growth label sequence:
// labels[0] == 1 and labels[i] <= 1 + max(labels[0..i-1]). Block j holds the
// (1-based) positions carrying label j. The empty path is the partition of
// the empty set.
class PartitionPath {
public:
    PartitionPath() = default;

    // Throws ArgumentError unless `labels` is already restricted-growth.
    explicit PartitionPath(std::vector<int> labels);

    // Relabels arbitrary labels by order of first appearance.
    static PartitionPath canonical(std::span<const int> labels);

    std::size_t order() const noexcept { return labels_.size(); }
    int blocks() const noexcept { return blocks_; }
    bool empty() const noexcept { return labels_.empty(); }

    std::span<const int> labels() const noexcept { return labels_; }
    int operator[](std::size_t i) const noexcept { return labels_[i]; }

    // 1-based positions of block j, for j = 1..blocks().
    std::vector<std::vector<int>> block_sets() const;

    // Label of the circular successor of 0-based position i.
    int successor_label(std::size_t i) const noexcept {
        return labels_[(i + 1) % labels_.size()];
    }

    std::string to_string() const;

    friend bool operator==(const PartitionPath&, const PartitionPath&) = default;
    friend auto operator<=>(const PartitionPath& a, const PartitionPath& b) {
        return a.labels_ <=> b.labels_;
    }

private:
    std::vector<int> labels_;
    int blocks_ = 0;
};

// Every partition of {1..p}, bucketed by block count.
struct PartitionCatalog {
    int order = 0;
    std::vector<std::vector<PartitionPath>> by_blocks;  // index k - 1

    std::size_t size() const;
    std::size_t count(int k) const;
};

// Calls visit(labels) for each restricted-growth sequence of length p in
// lexicographic order. The span is only valid during the call.
template <class Visitor>
void for_each_partition(int p, Visitor&& visit);

PartitionCatalog enumerate_partitions(int p, int max_order = kDefaultMaxOrder);

BigInt binomial(int n, int k);
BigInt bell(int p);
BigInt stirling2(int p, int k);
BigInt narayana(int p, int k);
BigInt catalan(int p);

// True iff some a < b < c < d has labels[a] == labels[c] != labels[b] == labels[d].
bool is_crossing(const PartitionPath& path);

enum class ReductionRule : int {
    singleton = 1,  // the element's block has one member
    adjacency = 2,  // the element's circular successor shares its block
};

// One row of a reduction trace: `path` is the state before the step; `rule`
// and `index` (1-based) describe the element removed from it. The last row
// of a trace carries no rule.
struct ReductionStep {
    PartitionPath path;
    std::optional<ReductionRule> rule;
    int index = 0;
};

struct ReductionMove {
    ReductionRule rule;
    int index;  // 1-based
    friend bool operator==(const ReductionMove&, const ReductionMove&) = default;
};

// All removals permitted on `path`, rule 1 moves first, each in ascending
// index order.
std::vector<ReductionMove> applicable_reductions(const PartitionPath& path);

// The move reduce_path takes: the first singleton if any, else the first
// adjacency with position 1 considered last.
std::optional<ReductionMove> next_reduction(const PartitionPath& path);

// Drops the element at 1-based `index` and relabels canonically.
PartitionPath remove_element(const PartitionPath& path, int index);

std::vector<ReductionStep> reduction_trace(const PartitionPath& path);
PartitionPath reduce_path(const PartitionPath& path);

// ---------------------------------------------------------------------------

template <class Visitor>
void for_each_partition(int p, Visitor&& visit) {
    if (p <= 0) {
        return;
    }
    const auto n = static_cast<std::size_t>(p);
    std::vector<int> labels(n, 1);
    // prefix_max[i] = max(labels[0..i])
    std::vector<int> prefix_max(n, 1);
    while (true) {
        visit(std::span<const int>(labels));
        std::size_t i = n - 1;
        while (i > 0 && labels[i] > prefix_max[i - 1]) {
            --i;
        }
        if (i == 0) {
            return;
        }
        ++labels[i];
        prefix_max[i] = std::max(prefix_max[i - 1], labels[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            labels[j] = 1;
            prefix_max[j] = prefix_max[i];
        }
    }
}

}  // namespace mpfield
