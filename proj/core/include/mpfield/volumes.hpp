#pragma once

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "mpfield/combinatorics.hpp"

namespace mpfield {

using Rational = boost::multiprecision::cpp_rational;

// Circular-difference constraints c_j = sum_{i in P_j} (l_i - l_{[i+1]}) = 0,
// one row per block. Column i carries +1 in the row of block(i) and -1 in the
// row of block(i-1) (circular), so W is the incidence matrix of a directed
// cycle through the blocks and is totally unimodular.
struct ConstraintSystem {
    int order = 0;
    int blocks = 0;
    std::vector<std::vector<int>> rows;  // blocks x order

    int rank() const;
};

ConstraintSystem constraint_system(const PartitionPath& path);

// Rank over the rationals.
int rational_rank(const std::vector<std::vector<int>>& matrix);

// Integer parametrisation of ker W: the coordinates in `pivot_columns` are
// integer combinations of the coordinates in `free_columns`,
//   x[pivot_columns[r]] = sum_f coefficients[r][f] * x[free_columns[f]].
struct KernelBasis {
    int order = 0;
    std::vector<int> free_columns;
    std::vector<int> pivot_columns;
    std::vector<std::vector<std::int64_t>> coefficients;

    int dimension() const { return static_cast<int>(free_columns.size()); }
};

// Integer row reduction on unit pivots. Throws IntegrityError if a column
// has no unit pivot (impossible for circular-difference systems).
KernelBasis kernel_basis(const ConstraintSystem& system);

// Number of l in [-M, M]^p with W l = 0, by walking the free coordinates of
// the kernel basis; the innermost free coordinate is counted as an interval.
std::uint64_t zeta_count(const PartitionPath& path, int bandwidth);

// Same count by a column sweep over block imbalances (transfer matrix).
std::uint64_t zeta_count_transfer(const PartitionPath& path, int bandwidth);

enum class CountingMethod {
    kernel_enumeration,
    transfer_matrix,
    automatic,  // cheaper of the two by a cost estimate
};

struct VolumeResult {
    Rational exact;
    int degree = 0;                                        // p - k + 1
    std::vector<std::pair<int, std::uint64_t>> fit_points;  // (M, zeta_M)
};

// Fits zeta_M as a polynomial of `degree` in (2M + 1) through the first
// degree + 1 points (which must be M = 0, 1, ...) and checks the rest exactly.
VolumeResult fit_volume(std::vector<std::pair<int, std::uint64_t>> points, int degree,
                        const std::string& label = "path");

// Leading coefficient of zeta_M as a polynomial in (2M + 1). Fits through
// M = 0..degree in exact arithmetic and re-checks M = degree+1, degree+2.
// Throws IntegrityError (carrying M) when a check point disagrees.
VolumeResult volume_exact(const PartitionPath& path,
                          CountingMethod method = CountingMethod::automatic);

struct QuadratureOptions {
    double initial_half_width = 8.0;
    int points_per_unit = 64;
    int max_refinements = 12;
    std::uint64_t max_evaluations = 400'000'000;  // per refinement level
    std::uint64_t max_table_entries = 1ULL << 24;  // tabulated sinc values
};

// Midpoint-rule estimate of the sinc-product integral over R^{k-1} with the
// last block's variable pinned at 0. Each refinement doubles the half width
// and halves the step until successive estimates differ by < tolerance.
// Requires a non-empty path with 2 <= k <= 4.
double volume_quadrature(const PartitionPath& path, double tolerance,
                         const QuadratureOptions& options = {});

// Thread-safe memo of exact volumes keyed by reduced path. Racing inserts
// compute the same value, so duplicates are harmless.
class VolumeCache {
public:
    explicit VolumeCache(CountingMethod method = CountingMethod::automatic) : method_(method) {}

    Rational volume(const PartitionPath& reduced);
    std::size_t size() const;

private:
    CountingMethod method_;
    mutable std::shared_mutex mutex_;
    std::map<PartitionPath, Rational> values_;
};

}  // namespace mpfield
