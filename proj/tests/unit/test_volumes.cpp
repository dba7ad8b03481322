#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "mpfield/errors.hpp"
#include "mpfield/volumes.hpp"
#include "oracles.hpp"

using namespace mpfield;

namespace {

PartitionPath P(std::vector<int> labels) { return PartitionPath(std::move(labels)); }

PartitionPath alternating(int h) {
    std::vector<int> l;
    for (int i = 0; i < h; ++i) {
        l.push_back(1);
        l.push_back(2);
    }
    return P(l);
}

std::vector<int> to_vec(const PartitionPath& p) { return {p.labels().begin(), p.labels().end()}; }

// Distinct non-empty reduced paths of order <= max_p.
std::vector<PartitionPath> reduced_paths(int max_p) {
    std::set<PartitionPath> out;
    for (int p = 1; p <= max_p; ++p) {
        for_each_partition(p, [&](std::span<const int> l) {
            auto r = reduce_path(PartitionPath(std::vector<int>(l.begin(), l.end())));
            if (!r.empty()) out.insert(std::move(r));
        });
    }
    return {out.begin(), out.end()};
}

}  // namespace

TEST(Constraints, ThreeBlockKernel) {
    const auto w = P({1, 2, 3, 3, 1, 4});
    const auto sys = constraint_system(w);
    EXPECT_EQ(sys.rank(), 3);
    // l1 = l6 and l2 = l3 = l5 span the kernel: check the spanning vectors
    // and that the kernel has dimension 3.
    const std::vector<std::vector<int>> kernel{{1, 0, 0, 0, 0, 1}, {0, 1, 1, 0, 1, 0}, {0, 0, 0, 1, 0, 0}};
    for (const auto& v : kernel) {
        for (const auto& row : sys.rows) {
            int dot = 0;
            for (std::size_t i = 0; i < v.size(); ++i) dot += row[i] * v[i];
            EXPECT_EQ(dot, 0);
        }
    }
    EXPECT_EQ(kernel_basis(sys).dimension(), 3);
    EXPECT_EQ(6 - sys.rank(), 3);
}

TEST(Constraints, SingleBlockRowIsZero) {
    const auto sys = constraint_system(P({1, 1}));
    ASSERT_EQ(sys.rows.size(), 1u);
    EXPECT_EQ(sys.rows[0], (std::vector<int>{0, 0}));
    EXPECT_EQ(sys.rank(), 0);
}

TEST(Constraints, AlternatingRankOne) {
    const auto sys = constraint_system(P({1, 2, 1, 2}));
    EXPECT_EQ(sys.rank(), 1);
    EXPECT_EQ(rational_rank({{1, -1, 1, -1}, {-1, 1, -1, 1}}), 1);
}

TEST(Constraints, EmptyPathRejected) {
    EXPECT_THROW(constraint_system(PartitionPath{}), ArgumentError);
}

TEST(Constraints, ExhaustiveRankAndColumnSums) {
    for (int p = 1; p <= 8; ++p) {
        for_each_partition(p, [&](std::span<const int> l) {
            const PartitionPath w(std::vector<int>(l.begin(), l.end()));
            const auto sys = constraint_system(w);
            ASSERT_EQ(sys.rank(), w.blocks() - 1) << w.to_string();
            for (int i = 0; i < p; ++i) {
                int sum = 0;
                for (const auto& row : sys.rows) sum += row[static_cast<std::size_t>(i)];
                ASSERT_EQ(sum, 0);
            }
            for (std::size_t drop = 0; drop < sys.rows.size(); ++drop) {
                auto rows = sys.rows;
                rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(drop));
                ASSERT_EQ(rational_rank(rows), w.blocks() - 1);
            }
            // The definition: W' minus W' with rows shifted circularly by one column.
            for (int j = 0; j < w.blocks(); ++j) {
                for (int i = 0; i < p; ++i) {
                    const int prev = (i + p - 1) % p;
                    const int expected = (w[static_cast<std::size_t>(i)] == j + 1) -
                                         (w[static_cast<std::size_t>(prev)] == j + 1);
                    ASSERT_EQ(sys.rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)], expected);
                }
            }
        });
    }
}

TEST(Zeta, KnownCounts) {
    EXPECT_EQ(zeta_count(P({1}), 7), 15u);
    EXPECT_EQ(zeta_count(P({1, 2, 1, 2}), 1), 19u);
    EXPECT_EQ(oracle::zeta_brute({1, 2, 1, 2}, 1), 19u);
    for (int M = 0; M <= 6; ++M) {
        const std::uint64_t n = 2 * M + 1;
        EXPECT_EQ(zeta_count(P({1, 2, 3, 3, 1, 4}), M), n * n * n);
        EXPECT_EQ(zeta_count_transfer(P({1, 2, 3, 3, 1, 4}), M), n * n * n);
    }
}

TEST(Zeta, MatchesBruteForceGrid) {
    for (int p = 1; p <= 5; ++p) {
        for_each_partition(p, [&](std::span<const int> l) {
            const std::vector<int> v(l.begin(), l.end());
            const PartitionPath w(v);
            for (int M = 0; M <= 2; ++M) {
                const auto expected = oracle::zeta_brute(v, M);
                ASSERT_EQ(zeta_count(w, M), expected) << w.to_string() << " M=" << M;
                ASSERT_EQ(zeta_count_transfer(w, M), expected) << w.to_string() << " M=" << M;
            }
        });
    }
}

TEST(Zeta, KernelAndTransferAgree) {
    for (const auto& w : reduced_paths(8)) {
        for (int M : {1, 3}) {
            ASSERT_EQ(zeta_count(w, M), zeta_count_transfer(w, M)) << w.to_string() << " M=" << M;
        }
    }
}

TEST(Zeta, OverflowIsCapacityError) {
    EXPECT_THROW(zeta_count(P({1, 1, 1, 1, 1, 1, 1, 1}), 1 << 20), CapacityError);
}

TEST(VolumeExact, KnownVolumes) {
    EXPECT_EQ(volume_exact(P({1, 2, 1, 2})).exact, Rational(2, 3));
    EXPECT_EQ(volume_exact(P({1, 2, 1, 2})).degree, 3);
    const auto empty = volume_exact(PartitionPath{});
    EXPECT_EQ(empty.exact, Rational(1));
    EXPECT_EQ(empty.degree, 0);
    EXPECT_EQ(volume_exact(P({1, 2, 1, 2, 1, 2})).exact, Rational(11, 20));
}

TEST(VolumeExact, FitPointsAreLatticeCounts) {
    const auto r = volume_exact(P({1, 2, 1, 2}));
    ASSERT_EQ(r.fit_points.size(), 6u);
    for (const auto& [M, z] : r.fit_points) {
        EXPECT_EQ(z, oracle::zeta_brute({1, 2, 1, 2}, M));
    }
}

TEST(VolumeExact, AlternatingMatchesSincPowers) {
    for (int h = 2; h <= 5; ++h) {
        const auto w = alternating(h);
        const auto expected = oracle::sinc_power_integral(2 * h);
        if (h <= 4) {
            EXPECT_EQ(volume_exact(w, CountingMethod::kernel_enumeration).exact, expected) << h;
        }
        EXPECT_EQ(volume_exact(w, CountingMethod::transfer_matrix).exact, expected) << h;
    }
    EXPECT_EQ(oracle::sinc_power_integral(4), Rational(2, 3));
    EXPECT_EQ(oracle::sinc_power_integral(8), Rational(151, 315));
}

TEST(VolumeExact, FitRejectsQuasiPolynomial) {
    // floor(M / 2) + (2M + 1) is not a polynomial in M.
    std::vector<std::pair<int, std::uint64_t>> pts;
    for (int M = 0; M <= 4; ++M) pts.emplace_back(M, static_cast<std::uint64_t>(2 * M + 1 + M / 2));
    try {
        fit_volume(pts, 2);
        FAIL() << "expected IntegrityError";
    } catch (const IntegrityError& e) {
        ASSERT_TRUE(e.bandwidth().has_value());
        EXPECT_EQ(*e.bandwidth(), 3);
    }
}

TEST(VolumeExact, FitRecoversKnownPolynomial) {
    // 5 (2M+1)^2 / 7 is not integer-valued, so use (2M+1)^2 (M+1) / something
    // integral: (2M+1)^3 has leading coefficient 1.
    std::vector<std::pair<int, std::uint64_t>> pts;
    for (int M = 0; M <= 5; ++M) {
        const std::uint64_t n = 2 * M + 1;
        pts.emplace_back(M, n * n * n);
    }
    EXPECT_EQ(fit_volume(pts, 3).exact, Rational(1));
}

TEST(VolumeExact, ReductionPreservesVolume) {
    for (int p = 1; p <= 6; ++p) {
        for_each_partition(p, [&](std::span<const int> l) {
            const PartitionPath w(std::vector<int>(l.begin(), l.end()));
            ASSERT_EQ(volume_exact(w).exact, volume_exact(reduce_path(w)).exact) << w.to_string();
        });
    }
}

TEST(VolumeExact, RandomReductionOrderPreservesVolume) {
    std::mt19937 gen(11);
    for (int p = 4; p <= 8; ++p) {
        std::vector<PartitionPath> sample;
        for_each_partition(p, [&](std::span<const int> l) {
            if (gen() % 16 == 0) sample.emplace_back(std::vector<int>(l.begin(), l.end()));
        });
        for (auto w : sample) {
            const auto expected = volume_exact(reduce_path(w)).exact;
            for (auto moves = applicable_reductions(w); !moves.empty(); moves = applicable_reductions(w)) {
                std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
                w = remove_element(w, moves[pick(gen)].index);
            }
            ASSERT_EQ(volume_exact(w).exact, expected) << w.to_string();
        }
    }
}

TEST(VolumeExact, CrossingBoundAndRange) {
    VolumeCache cache;
    for (int p = 1; p <= 8; ++p) {
        for_each_partition(p, [&](std::span<const int> l) {
            const PartitionPath w(std::vector<int>(l.begin(), l.end()));
            const auto v = cache.volume(reduce_path(w));
            ASSERT_GE(v, 0);
            ASSERT_LE(v, 1);
            if (is_crossing(w)) {
                ASSERT_LE(v, Rational(2, 3)) << w.to_string();
            } else {
                ASSERT_EQ(v, 1) << w.to_string();
            }
        });
    }
}

TEST(Quadrature, KnownVolumes) {
    EXPECT_NEAR(volume_quadrature(P({1, 2, 1, 2}), 1e-6), 2.0 / 3.0, 1e-6);
    EXPECT_NEAR(volume_quadrature(alternating(3), 1e-5), 0.55, 1e-5);
    const double v8 = static_cast<double>(volume_exact(alternating(4)).exact);
    EXPECT_NEAR(volume_quadrature(alternating(4), 1e-5), v8, 1e-5);
}

TEST(Quadrature, AgreesWithExactForLowDimension) {
    const double tol = 1e-4;
    for (const auto& w : reduced_paths(8)) {
        if (w.blocks() - 1 > 2) continue;
        const double exact = static_cast<double>(volume_exact(w).exact);
        EXPECT_NEAR(volume_quadrature(w, tol), exact, 5 * tol) << w.to_string();
    }
}

TEST(Quadrature, Guards) {
    EXPECT_THROW(volume_quadrature(PartitionPath{}, 1e-3), ArgumentError);
    EXPECT_THROW(volume_quadrature(P({1, 1}), 1e-3), ArgumentError);
    EXPECT_THROW(volume_quadrature(P({1, 2, 3, 4, 5, 1, 2, 3, 4, 5}), 1e-3), ArgumentError);
    EXPECT_THROW(volume_quadrature(P({1, 2, 1, 2}), 0.0), ArgumentError);
    QuadratureOptions tight;
    tight.max_refinements = 1;
    try {
        volume_quadrature(P({1, 2, 1, 2}), 1e-14, tight);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_NEAR(e.last_estimate(), 2.0 / 3.0, 1e-2);
    }
}

TEST(Cache, ConcurrentAccessIsConsistent) {
    VolumeCache cache;
    const auto paths = reduced_paths(6);
    std::vector<std::vector<Rational>> results(4);
    {
        std::vector<std::jthread> workers;
        for (std::size_t t = 0; t < results.size(); ++t) {
            workers.emplace_back([&, t] {
                for (const auto& w : paths) results[t].push_back(cache.volume(w));
            });
        }
    }
    for (std::size_t t = 1; t < results.size(); ++t) EXPECT_EQ(results[t], results[0]);
    EXPECT_EQ(cache.size(), paths.size());
}
