#include "mpfield/combinatorics.hpp"

#include <sstream>

#include "mpfield/errors.hpp"

namespace mpfield {

PartitionPath::PartitionPath(std::vector<int> labels) : labels_(std::move(labels)) {
    int max_label = 0;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const int label = labels_[i];
        if (label < 1 || label > max_label + 1) {
            std::ostringstream msg;
            msg << "label " << label << " at position " << (i + 1)
                << " breaks the restricted-growth rule (allowed 1.." << (max_label + 1) << ")";
            throw ArgumentError(msg.str());
        }
        max_label = std::max(max_label, label);
    }
    blocks_ = max_label;
}

PartitionPath PartitionPath::canonical(std::span<const int> labels) {
    std::vector<int> relabeled;
    relabeled.reserve(labels.size());
    std::vector<std::pair<int, int>> seen;  // (original, new)
    for (const int label : labels) {
        auto it = std::find_if(seen.begin(), seen.end(),
                               [label](const auto& entry) { return entry.first == label; });
        if (it == seen.end()) {
            seen.emplace_back(label, static_cast<int>(seen.size()) + 1);
            relabeled.push_back(static_cast<int>(seen.size()));
        } else {
            relabeled.push_back(it->second);
        }
    }
    PartitionPath path;
    path.labels_ = std::move(relabeled);
    path.blocks_ = static_cast<int>(seen.size());
    return path;
}

std::vector<std::vector<int>> PartitionPath::block_sets() const {
    std::vector<std::vector<int>> sets(static_cast<std::size_t>(blocks_));
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        sets[static_cast<std::size_t>(labels_[i] - 1)].push_back(static_cast<int>(i) + 1);
    }
    return sets;
}

std::string PartitionPath::to_string() const {
    std::string out = "[";
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (i != 0) {
            out += ',';
        }
        out += std::to_string(labels_[i]);
    }
    out += ']';
    return out;
}

std::size_t PartitionCatalog::size() const {
    std::size_t total = 0;
    for (const auto& bucket : by_blocks) {
        total += bucket.size();
    }
    return total;
}

std::size_t PartitionCatalog::count(int k) const {
    if (k < 1 || k > static_cast<int>(by_blocks.size())) {
        return 0;
    }
    return by_blocks[static_cast<std::size_t>(k - 1)].size();
}

PartitionCatalog enumerate_partitions(int p, int max_order) {
    if (p < 1) {
        throw ArgumentError("partition order must be >= 1, got " + std::to_string(p));
    }
    if (p > max_order) {
        throw CapacityError("partition order " + std::to_string(p) +
                            " exceeds the configured maximum " + std::to_string(max_order));
    }
    PartitionCatalog catalog;
    catalog.order = p;
    catalog.by_blocks.resize(static_cast<std::size_t>(p));
    for (int k = 1; k <= p; ++k) {
        catalog.by_blocks[static_cast<std::size_t>(k - 1)].reserve(
            stirling2(p, k).convert_to<std::size_t>());
    }
    for_each_partition(p, [&](std::span<const int> labels) {
        PartitionPath path(std::vector<int>(labels.begin(), labels.end()));
        catalog.by_blocks[static_cast<std::size_t>(path.blocks() - 1)].push_back(std::move(path));
    });
    return catalog;
}

BigInt binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    BigInt result = 1;
    for (int i = 1; i <= k; ++i) {
        result = result * (n - k + i) / i;
    }
    return result;
}

BigInt bell(int p) {
    if (p < 0) {
        throw ArgumentError("bell: order must be >= 0");
    }
    // Bell triangle: each row starts with the last entry of the previous row.
    std::vector<BigInt> row{1};
    for (int n = 1; n <= p; ++n) {
        std::vector<BigInt> next;
        next.reserve(row.size() + 1);
        next.push_back(row.back());
        for (const auto& value : row) {
            next.push_back(next.back() + value);
        }
        row = std::move(next);
    }
    return row.front();
}

BigInt stirling2(int p, int k) {
    if (p < 1 || k < 1 || k > p) {
        throw ArgumentError("stirling2: need 1 <= k <= p, got p=" + std::to_string(p) +
                            " k=" + std::to_string(k));
    }
    // S(n, j) = j S(n-1, j) + S(n-1, j-1)
    std::vector<BigInt> row(static_cast<std::size_t>(k) + 1, 0);
    row[0] = 1;
    for (int n = 1; n <= p; ++n) {
        for (int j = std::min(n, k); j >= 1; --j) {
            row[static_cast<std::size_t>(j)] =
                j * row[static_cast<std::size_t>(j)] + row[static_cast<std::size_t>(j - 1)];
        }
        row[0] = 0;
    }
    return row[static_cast<std::size_t>(k)];
}

BigInt narayana(int p, int k) {
    if (p < 1 || k < 1 || k > p) {
        throw ArgumentError("narayana: need 1 <= k <= p, got p=" + std::to_string(p) +
                            " k=" + std::to_string(k));
    }
    return binomial(p - 1, k - 1) * binomial(p, k - 1) / k;
}

BigInt catalan(int p) {
    if (p < 0) {
        throw ArgumentError("catalan: order must be >= 0");
    }
    return binomial(2 * p, p) / (p + 1);
}

bool is_crossing(const PartitionPath& path) {
    const auto labels = path.labels();
    const int k = path.blocks();
    // Two blocks cross iff the subsequence of their labels alternates at
    // least four times (x..y..x..y).
    for (int x = 1; x <= k; ++x) {
        for (int y = x + 1; y <= k; ++y) {
            int runs = 0;
            int last = 0;
            for (const int label : labels) {
                if ((label == x || label == y) && label != last) {
                    ++runs;
                    last = label;
                }
            }
            if (runs >= 4) {
                return true;
            }
        }
    }
    return false;
}

namespace {

std::vector<int> block_sizes(const PartitionPath& path) {
    std::vector<int> sizes(static_cast<std::size_t>(path.blocks()), 0);
    for (const int label : path.labels()) {
        ++sizes[static_cast<std::size_t>(label - 1)];
    }
    return sizes;
}

bool adjacent_in_block(const PartitionPath& path, std::size_t i) {
    return path.order() >= 2 && path[i] == path.successor_label(i);
}

}  // namespace

std::vector<ReductionMove> applicable_reductions(const PartitionPath& path) {
    std::vector<ReductionMove> moves;
    const auto sizes = block_sizes(path);
    for (std::size_t i = 0; i < path.order(); ++i) {
        if (sizes[static_cast<std::size_t>(path[i] - 1)] == 1) {
            moves.push_back({ReductionRule::singleton, static_cast<int>(i) + 1});
        }
    }
    for (std::size_t i = 0; i < path.order(); ++i) {
        if (adjacent_in_block(path, i)) {
            moves.push_back({ReductionRule::adjacency, static_cast<int>(i) + 1});
        }
    }
    return moves;
}

std::optional<ReductionMove> next_reduction(const PartitionPath& path) {
    const auto sizes = block_sizes(path);
    for (std::size_t i = 0; i < path.order(); ++i) {
        if (sizes[static_cast<std::size_t>(path[i] - 1)] == 1) {
            return ReductionMove{ReductionRule::singleton, static_cast<int>(i) + 1};
        }
    }
    // Adjacencies are scanned from position 2 upward, position 1 last, so the
    // leading element is kept whenever another removal is available.
    const std::size_t n = path.order();
    for (std::size_t step = 1; step <= n; ++step) {
        const std::size_t i = step % n;
        if (adjacent_in_block(path, i)) {
            return ReductionMove{ReductionRule::adjacency, static_cast<int>(i) + 1};
        }
    }
    return std::nullopt;
}

PartitionPath remove_element(const PartitionPath& path, int index) {
    if (index < 1 || index > static_cast<int>(path.order())) {
        throw ArgumentError("remove_element: index " + std::to_string(index) + " out of range");
    }
    std::vector<int> labels(path.labels().begin(), path.labels().end());
    labels.erase(labels.begin() + (index - 1));
    return PartitionPath::canonical(labels);
}

std::vector<ReductionStep> reduction_trace(const PartitionPath& path) {
    std::vector<ReductionStep> steps;
    PartitionPath current = path;
    while (auto move = next_reduction(current)) {
        steps.push_back({current, move->rule, move->index});
        current = remove_element(current, move->index);
    }
    steps.push_back({std::move(current), std::nullopt, 0});
    return steps;
}

PartitionPath reduce_path(const PartitionPath& path) {
    PartitionPath current = path;
    while (auto move = next_reduction(current)) {
        current = remove_element(current, move->index);
    }
    return current;
}

}  // namespace mpfield
