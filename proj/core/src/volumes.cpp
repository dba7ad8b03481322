#include "mpfield/volumes.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <unordered_map>

#include "mpfield/errors.hpp"

namespace mpfield {

namespace {

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) {
        throw CapacityError("lattice count exceeds 64-bit range");
    }
    return out;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) {
        throw CapacityError("lattice count exceeds 64-bit range");
    }
    return out;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

}  // namespace

// ---------------------------------------------------------------------------
// Constraint system

ConstraintSystem constraint_system(const PartitionPath& path) {
    if (path.empty()) {
        throw ArgumentError("constraint_system: path must be non-empty");
    }
    ConstraintSystem system;
    system.order = static_cast<int>(path.order());
    system.blocks = path.blocks();
    system.rows.assign(static_cast<std::size_t>(system.blocks),
                       std::vector<int>(static_cast<std::size_t>(system.order), 0));
    const std::size_t p = path.order();
    for (std::size_t i = 0; i < p; ++i) {
        const auto own = static_cast<std::size_t>(path[i] - 1);
        const auto prev = static_cast<std::size_t>(path[(i + p - 1) % p] - 1);
        system.rows[own][i] += 1;
        system.rows[prev][i] -= 1;
    }
    return system;
}

int ConstraintSystem::rank() const { return rational_rank(rows); }

int rational_rank(const std::vector<std::vector<int>>& matrix) {
    if (matrix.empty()) {
        return 0;
    }
    std::vector<std::vector<Rational>> a;
    a.reserve(matrix.size());
    for (const auto& row : matrix) {
        a.emplace_back(row.begin(), row.end());
    }
    const std::size_t rows = a.size();
    const std::size_t cols = a.front().size();
    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        std::size_t pivot = rank;
        while (pivot < rows && a[pivot][col] == 0) {
            ++pivot;
        }
        if (pivot == rows) {
            continue;
        }
        std::swap(a[pivot], a[rank]);
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == rank || a[r][col] == 0) {
                continue;
            }
            const Rational factor = a[r][col] / a[rank][col];
            for (std::size_t c = col; c < cols; ++c) {
                a[r][c] -= factor * a[rank][c];
            }
        }
        ++rank;
    }
    return static_cast<int>(rank);
}

KernelBasis kernel_basis(const ConstraintSystem& system) {
    std::vector<std::vector<std::int64_t>> a;
    for (const auto& row : system.rows) {
        a.emplace_back(row.begin(), row.end());
    }
    const std::size_t rows = a.size();
    const auto cols = static_cast<std::size_t>(system.order);

    KernelBasis basis;
    basis.order = system.order;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols; ++col) {
        std::size_t pivot = rows;
        bool nonzero = false;
        for (std::size_t r = rank; r < rows; ++r) {
            if (a[r][col] != 0) {
                nonzero = true;
                if (a[r][col] == 1 || a[r][col] == -1) {
                    pivot = r;
                    break;
                }
            }
        }
        if (pivot == rows) {
            if (nonzero) {
                throw IntegrityError("kernel_basis: column " + std::to_string(col + 1) +
                                     " has no unit pivot");
            }
            basis.free_columns.push_back(static_cast<int>(col));
            continue;
        }
        std::swap(a[pivot], a[rank]);
        if (a[rank][col] < 0) {
            for (auto& v : a[rank]) {
                v = -v;
            }
        }
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == rank || a[r][col] == 0) {
                continue;
            }
            const std::int64_t factor = a[r][col];
            for (std::size_t c = 0; c < cols; ++c) {
                a[r][c] -= factor * a[rank][c];
            }
        }
        basis.pivot_columns.push_back(static_cast<int>(col));
        ++rank;
    }
    for (std::size_t r = 0; r < rank; ++r) {
        std::vector<std::int64_t> coeffs;
        coeffs.reserve(basis.free_columns.size());
        for (const int f : basis.free_columns) {
            coeffs.push_back(-a[r][static_cast<std::size_t>(f)]);
        }
        basis.coefficients.push_back(std::move(coeffs));
    }
    return basis;
}

// ---------------------------------------------------------------------------
// Lattice counts

namespace {

class KernelWalker {
public:
    KernelWalker(const KernelBasis& basis, int bandwidth)
        : coeffs_(basis.coefficients),
          dims_(static_cast<std::size_t>(basis.dimension())),
          bound_(bandwidth),
          partial_(coeffs_.size(), 0) {
        // slack_[t][r] = sum_{f >= t} |coeffs[r][f]|
        slack_.assign(dims_ + 1, std::vector<std::int64_t>(coeffs_.size(), 0));
        for (std::size_t t = dims_; t-- > 0;) {
            for (std::size_t r = 0; r < coeffs_.size(); ++r) {
                slack_[t][r] = slack_[t + 1][r] + std::abs(coeffs_[r][t]);
            }
        }
    }

    std::uint64_t count() {
        if (dims_ == 0) {
            return 1;
        }
        return descend(0);
    }

private:
    std::uint64_t descend(std::size_t level) {
        if (level + 1 == dims_) {
            return innermost(level);
        }
        std::uint64_t total = 0;
        for (std::int64_t value = -bound_; value <= bound_; ++value) {
            bool feasible = true;
            for (std::size_t r = 0; r < coeffs_.size(); ++r) {
                partial_[r] += coeffs_[r][level] * value;
                if (std::abs(partial_[r]) > bound_ * (1 + slack_[level + 1][r])) {
                    feasible = false;
                }
            }
            if (feasible) {
                total = checked_add(total, descend(level + 1));
            }
            for (std::size_t r = 0; r < coeffs_.size(); ++r) {
                partial_[r] -= coeffs_[r][level] * value;
            }
        }
        return total;
    }

    std::uint64_t innermost(std::size_t level) const {
        std::int64_t lo = -bound_;
        std::int64_t hi = bound_;
        for (std::size_t r = 0; r < coeffs_.size(); ++r) {
            const std::int64_t a = coeffs_[r][level];
            const std::int64_t s = partial_[r];
            if (a == 0) {
                if (std::abs(s) > bound_) {
                    return 0;
                }
                continue;
            }
            // -M <= s + a t <= M
            std::int64_t t_lo = 0;
            std::int64_t t_hi = 0;
            if (a > 0) {
                t_lo = ceil_div(-bound_ - s, a);
                t_hi = floor_div(bound_ - s, a);
            } else {
                t_lo = ceil_div(bound_ - s, a);
                t_hi = floor_div(-bound_ - s, a);
            }
            lo = std::max(lo, t_lo);
            hi = std::min(hi, t_hi);
            if (lo > hi) {
                return 0;
            }
        }
        return static_cast<std::uint64_t>(hi - lo + 1);
    }

    const std::vector<std::vector<std::int64_t>>& coeffs_;
    std::size_t dims_;
    std::int64_t bound_;
    std::vector<std::int64_t> partial_;
    std::vector<std::vector<std::int64_t>> slack_;
};

struct VectorHash {
    std::size_t operator()(const std::vector<int>& v) const noexcept {
        std::size_t h = 0xcbf29ce484222325ULL;
        for (const int x : v) {
            h ^= static_cast<std::size_t>(static_cast<unsigned>(x));
            h *= 0x100000001b3ULL;
        }
        return h;
    }
};

// Columns touching each block strictly after column i (non-zero columns only).
std::vector<std::vector<int>> remaining_touches(const PartitionPath& path) {
    const std::size_t p = path.order();
    const auto k = static_cast<std::size_t>(path.blocks());
    std::vector<std::vector<int>> remaining(p, std::vector<int>(k, 0));
    std::vector<int> running(k, 0);
    for (std::size_t i = p; i-- > 0;) {
        remaining[i] = running;
        const int own = path[i] - 1;
        const int prev = path[(i + p - 1) % p] - 1;
        if (own != prev) {
            ++running[static_cast<std::size_t>(own)];
            ++running[static_cast<std::size_t>(prev)];
        }
    }
    return remaining;
}

std::uint64_t pow_u64(std::uint64_t base, int exponent) {
    std::uint64_t out = 1;
    for (int i = 0; i < exponent; ++i) {
        out = checked_mul(out, base);
    }
    return out;
}

// Free coordinates that no pivot depends on range over [-M, M] on their
// own; drop them from the walk and return how many there were.
std::pair<KernelBasis, int> split_unconstrained(const KernelBasis& basis) {
    KernelBasis kept;
    kept.order = basis.order;
    kept.pivot_columns = basis.pivot_columns;
    kept.coefficients.assign(basis.coefficients.size(), {});
    int dropped = 0;
    for (std::size_t f = 0; f < basis.free_columns.size(); ++f) {
        bool used = false;
        for (const auto& row : basis.coefficients) {
            used = used || row[f] != 0;
        }
        if (!used) {
            ++dropped;
            continue;
        }
        kept.free_columns.push_back(basis.free_columns[f]);
        for (std::size_t r = 0; r < basis.coefficients.size(); ++r) {
            kept.coefficients[r].push_back(basis.coefficients[r][f]);
        }
    }
    return {std::move(kept), dropped};
}

double kernel_cost(int free_dims, int bandwidth) {
    return std::pow(2.0 * bandwidth + 1.0, std::max(free_dims - 1, 0));
}

double transfer_cost(const PartitionPath& path, int bandwidth) {
    const auto remaining = remaining_touches(path);
    // Bound the live state count by the widest imbalance range per block.
    double states = 1.0;
    const auto k = static_cast<std::size_t>(path.blocks());
    for (std::size_t j = 0; j + 1 < k; ++j) {
        int widest = 0;
        for (const auto& row : remaining) {
            widest = std::max(widest, row[j]);
        }
        states *= 2.0 * bandwidth * widest + 1.0;
    }
    return states * static_cast<double>(path.order()) * (2.0 * bandwidth + 1.0);
}

}  // namespace

std::uint64_t zeta_count(const PartitionPath& path, int bandwidth) {
    if (bandwidth < 0) {
        throw ArgumentError("zeta_count: bandwidth must be >= 0");
    }
    if (path.empty()) {
        return 1;
    }
    const auto [basis, unconstrained] = split_unconstrained(kernel_basis(constraint_system(path)));
    KernelWalker walker(basis, bandwidth);
    return checked_mul(walker.count(), pow_u64(2 * static_cast<std::uint64_t>(bandwidth) + 1, unconstrained));
}

std::uint64_t zeta_count_transfer(const PartitionPath& path, int bandwidth) {
    if (bandwidth < 0) {
        throw ArgumentError("zeta_count_transfer: bandwidth must be >= 0");
    }
    if (path.empty()) {
        return 1;
    }
    const std::size_t p = path.order();
    const auto k = static_cast<std::size_t>(path.blocks());
    const auto remaining = remaining_touches(path);
    const std::uint64_t width = 2 * static_cast<std::uint64_t>(bandwidth) + 1;

    std::unordered_map<std::vector<int>, std::uint64_t, VectorHash> states;
    states.emplace(std::vector<int>(k, 0), 1);
    int free_columns = 0;
    for (std::size_t i = 0; i < p; ++i) {
        const auto own = static_cast<std::size_t>(path[i] - 1);
        const auto prev = static_cast<std::size_t>(path[(i + p - 1) % p] - 1);
        if (own == prev) {
            ++free_columns;
            continue;
        }
        std::unordered_map<std::vector<int>, std::uint64_t, VectorHash> next;
        next.reserve(states.size() * 2);
        const auto& left = remaining[i];
        for (const auto& [state, ways] : states) {
            std::vector<int> moved = state;
            for (int value = -bandwidth; value <= bandwidth; ++value) {
                moved[own] = state[own] + value;
                moved[prev] = state[prev] - value;
                if (std::abs(moved[own]) > bandwidth * left[own] ||
                    std::abs(moved[prev]) > bandwidth * left[prev]) {
                    continue;
                }
                auto& slot = next[moved];
                slot = checked_add(slot, ways);
            }
        }
        states = std::move(next);
    }
    std::uint64_t total = 0;
    for (const auto& [state, ways] : states) {
        bool closed = true;
        for (const int v : state) {
            closed = closed && v == 0;
        }
        if (closed) {
            total = checked_add(total, ways);
        }
    }
    return checked_mul(total, pow_u64(width, free_columns));
}

// ---------------------------------------------------------------------------
// Exact volume

VolumeResult volume_exact(const PartitionPath& path, CountingMethod method) {
    VolumeResult result;
    if (path.empty()) {
        result.exact = 1;
        result.degree = 0;
        return result;
    }
    const int degree = static_cast<int>(path.order()) - path.blocks() + 1;
    result.degree = degree;
    const int top = degree + 2;

    if (method == CountingMethod::automatic) {
        const auto basis = split_unconstrained(kernel_basis(constraint_system(path))).first;
        method = kernel_cost(basis.dimension(), top) <= transfer_cost(path, top)
                     ? CountingMethod::kernel_enumeration
                     : CountingMethod::transfer_matrix;
    }
    for (int m = 0; m <= top; ++m) {
        const std::uint64_t count = method == CountingMethod::transfer_matrix
                                        ? zeta_count_transfer(path, m)
                                        : zeta_count(path, m);
        result.fit_points.emplace_back(m, count);
    }

    return fit_volume(std::move(result.fit_points), degree, path.to_string());
}

VolumeResult fit_volume(std::vector<std::pair<int, std::uint64_t>> points, int degree,
                        const std::string& label) {
    if (degree < 0 || points.size() < static_cast<std::size_t>(degree) + 1) {
        throw ArgumentError("fit_volume: need at least degree + 1 points");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].first != static_cast<int>(i)) {
            throw ArgumentError("fit_volume: points must be M = 0, 1, 2, ...");
        }
    }
    VolumeResult result;
    result.degree = degree;
    result.fit_points = std::move(points);

    // Newton divided differences on nodes x_m = 2m + 1, m = 0..degree.
    const auto node = [](int m) { return Rational(2 * m + 1); };
    std::vector<Rational> coeffs;
    coeffs.reserve(static_cast<std::size_t>(degree) + 1);
    for (int m = 0; m <= degree; ++m) {
        coeffs.emplace_back(result.fit_points[static_cast<std::size_t>(m)].second);
    }
    for (int level = 1; level <= degree; ++level) {
        for (int m = degree; m >= level; --m) {
            const auto mu = static_cast<std::size_t>(m);
            coeffs[mu] = (coeffs[mu] - coeffs[mu - 1]) / (node(m) - node(m - level));
        }
    }
    const auto evaluate = [&](const Rational& x) {
        Rational value = coeffs.back();
        for (int m = degree - 1; m >= 0; --m) {
            value = value * (x - node(m)) + coeffs[static_cast<std::size_t>(m)];
        }
        return value;
    };
    for (std::size_t i = static_cast<std::size_t>(degree) + 1; i < result.fit_points.size(); ++i) {
        const int m = result.fit_points[i].first;
        if (evaluate(node(m)) != Rational(result.fit_points[i].second)) {
            throw IntegrityError("zeta_M of " + label + " is not a polynomial of degree " +
                                     std::to_string(degree) + " in 2M+1 (mismatch at M=" +
                                     std::to_string(m) + ")",
                                 m);
        }
    }
    result.exact = coeffs.back();
    if (result.exact < 0 || result.exact > 1) {
        throw IntegrityError("volume of " + label + " outside [0, 1]");
    }
    return result;
}

// ---------------------------------------------------------------------------
// Quadrature oracle

double volume_quadrature(const PartitionPath& path, double tolerance,
                         const QuadratureOptions& options) {
    if (path.empty() || path.blocks() < 2 || path.blocks() > 4) {
        throw ArgumentError("volume_quadrature: need a non-empty path with 2..4 blocks, got " +
                            path.to_string());
    }
    if (!(tolerance > 0.0)) {
        throw ArgumentError("volume_quadrature: tolerance must be positive");
    }
    const std::size_t dims = static_cast<std::size_t>(path.blocks()) - 1;
    const std::size_t p = path.order();

    // Factor pairs (a, b) for sinc(y_a - y_b); block k-1 is pinned at zero.
    std::vector<std::pair<std::size_t, std::size_t>> factors;
    for (std::size_t i = 0; i < p; ++i) {
        const auto a = static_cast<std::size_t>(path[i] - 1);
        const auto b = static_cast<std::size_t>(path.successor_label(i) - 1);
        if (a != b) {
            factors.emplace_back(a, b);
        }
    }

    double older = std::numeric_limits<double>::quiet_NaN();
    double previous = std::numeric_limits<double>::quiet_NaN();
    for (int level = 0; level <= options.max_refinements; ++level) {
        const double scale = std::ldexp(1.0, level);
        const double half_width = options.initial_half_width * scale;
        const double step = 1.0 / (options.points_per_unit * scale);
        const auto n = static_cast<std::int64_t>(std::llround(2.0 * half_width / step));
        const double evaluations = std::pow(static_cast<double>(n), static_cast<double>(dims));
        if (evaluations > static_cast<double>(options.max_evaluations) ||
            4 * n + 1 > static_cast<std::int64_t>(options.max_table_entries)) {
            throw ConvergenceError("volume_quadrature: evaluation budget exhausted for " +
                                       path.to_string(),
                                   older, previous);
        }

        // Arguments are multiples of step/2 in [-2n, 2n] half steps.
        std::vector<double> table(static_cast<std::size_t>(4 * n + 1));
        for (std::int64_t m = -2 * n; m <= 2 * n; ++m) {
            const double y = 0.5 * step * static_cast<double>(m);
            table[static_cast<std::size_t>(m + 2 * n)] =
                m == 0 ? 1.0 : std::sin(std::numbers::pi * y) / (std::numbers::pi * y);
        }

        std::vector<std::int64_t> index(dims, 0);
        std::vector<std::int64_t> half(dims + 1, 0);  // half-step coordinates; last is pinned
        for (std::size_t a = 0; a < dims; ++a) {
            half[a] = 1 - n;
        }
        double total = 0.0;
        while (true) {
            double row = 0.0;
            // innermost axis 0 swept in place
            for (std::int64_t i0 = 0; i0 < n; ++i0) {
                half[0] = 2 * i0 + 1 - n;
                double value = 1.0;
                for (const auto& [a, b] : factors) {
                    value *= table[static_cast<std::size_t>(half[a] - half[b] + 2 * n)];
                }
                row += value;
            }
            total += row;
            std::size_t axis = 1;
            while (axis < dims) {
                if (++index[axis] < n) {
                    half[axis] = 2 * index[axis] + 1 - n;
                    break;
                }
                index[axis] = 0;
                half[axis] = 1 - n;
                ++axis;
            }
            if (axis >= dims) {
                break;
            }
        }
        const double estimate = total * std::pow(step, static_cast<double>(dims));
        if (level > 0 && std::abs(estimate - previous) < tolerance) {
            return estimate;
        }
        if (level == options.max_refinements) {
            throw ConvergenceError("volume_quadrature: no convergence for " + path.to_string(),
                                   previous, estimate);
        }
        older = previous;
        previous = estimate;
    }
    return previous;
}

// ---------------------------------------------------------------------------

Rational VolumeCache::volume(const PartitionPath& reduced) {
    {
        std::shared_lock lock(mutex_);
        if (auto it = values_.find(reduced); it != values_.end()) {
            return it->second;
        }
    }
    Rational value = volume_exact(reduced, method_).exact;
    std::unique_lock lock(mutex_);
    values_.emplace(reduced, value);
    return value;
}

std::size_t VolumeCache::size() const {
    std::shared_lock lock(mutex_);
    return values_.size();
}

}  // namespace mpfield
