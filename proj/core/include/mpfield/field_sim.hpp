#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpfield/rng.hpp"

namespace mpfield {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Default dense-matrix memory budget (bytes) and the environment variable
// that overrides it.
inline constexpr std::uint64_t kDefaultMaxBytes = 2ULL << 30;
inline constexpr const char* kMaxMemoryEnv = "MPFIELD_MAX_MEM";

struct SimLimits {
    std::uint64_t max_bytes = kDefaultMaxBytes;

    // Reads MPFIELD_MAX_MEM when set, else the default.
    static SimLimits from_env();
};

// Parses "4096", "512K", "64M", "2G" (binary multiples).
std::uint64_t parse_byte_size(const std::string& text);

// (2M + 1)^d; throws CapacityError if it does not fit in 32 bits.
std::size_t harmonic_count(int dimension, int bandwidth);

// nu(l) = sum_m (2M + 1)^(m-1) l_m, in [-(N-1)/2, (N-1)/2].
std::int64_t nu_index(std::span<const int> ell, int bandwidth);

// Array row of harmonic l: nu(l) + (N - 1)/2, in [0, N - 1].
std::size_t harmonic_row(std::span<const int> ell, int bandwidth);

// Inverse of harmonic_row.
std::vector<int> harmonic_of_row(std::size_t row, int dimension, int bandwidth);

struct SamplingInstance {
    int dimension = 0;
    int bandwidth = 0;  // M
    int sensors = 0;    // r
    double beta = 0.0;  // (2M + 1)^d / r
    Eigen::MatrixXd points;  // sensors x dimension, entries in [0, 1)
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    std::size_t harmonics() const { return harmonic_count(dimension, bandwidth); }
};

// r = round((2M + 1)^d / beta); requires beta in (0, 1) and r > (2M + 1)^d.
int sensors_for_beta(int dimension, int bandwidth, double beta);

// r i.i.d. uniform points in [0, 1)^d from stream (seed, stream).
SamplingInstance sample_points(int sensors, int dimension, int bandwidth, std::uint64_t seed,
                               std::uint64_t stream = 0);

// sample_points with r from sensors_for_beta; beta is recomputed from r.
SamplingInstance make_instance(int dimension, int bandwidth, double beta, std::uint64_t seed,
                               std::uint64_t stream = 0);

// Wraps caller-supplied points without the beta < 1 requirement.
SamplingInstance instance_from_points(int dimension, int bandwidth, Eigen::MatrixXd points);

// Throws CapacityError if G, T and the eigensolver workspace for one
// instance of this size (times `concurrent` workers) exceed the budget.
void check_memory(std::size_t harmonics, std::size_t sensors, unsigned concurrent,
                  const SimLimits& limits);

// G(nu(l), q) = N^(-1/2) exp(-j 2 pi x_q . l), N x r.
ComplexMatrix build_G(const SamplingInstance& instance, const SimLimits& limits = {});

// T = beta G G^H, exactly Hermitian with unit diagonal.
ComplexMatrix build_T(const SamplingInstance& instance, const SimLimits& limits = {});

struct SpectrumSample {
    std::vector<double> eigenvalues;  // ascending, clamped at 0
    int dimension = 0;
    int bandwidth = 0;
    int sensors = 0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    double largest_clamp = 0.0;  // magnitude of the most negative raw eigenvalue

    std::size_t size() const { return eigenvalues.size(); }
};

// Dense Hermitian eigensolve with residual checks on three eigenpairs.
// Negative eigenvalues within 1e-10 N are clamped to zero; anything further
// below raises IntegrityError. Metadata is copied from `instance`.
SpectrumSample hermitian_eigenvalues(const ComplexMatrix& T, const SamplingInstance& instance);

// (1/N) sum lambda^p for one realization.
double empirical_moment(const SpectrumSample& sample, int p);

// (1/N) sum alpha beta / (lambda + alpha beta).
double empirical_lmmse(const SpectrumSample& sample, double alpha);

struct FieldRealization {
    ComplexVector spectrum;      // a, length N
    ComplexVector noise;         // n, length r
    ComplexVector measurements;  // p = G^H a + n
};

// a ~ CN(0, signal_variance I), n ~ CN(0, alpha signal_variance I).
FieldRealization draw_realization(const ComplexMatrix& G, double alpha, Rng& rng,
                                  double signal_variance = 1.0);

struct Reconstruction {
    ComplexVector estimate;  // a_hat
    double mse = 0.0;        // ||a_hat - a||^2 / N
};

// LMMSE reconstruction a_hat = (G G^H + alpha I)^(-1) G p via a Cholesky
// factorization shared across realizations.
class LmmseReconstructor {
public:
    LmmseReconstructor(const ComplexMatrix& G, double alpha);

    Reconstruction operator()(const FieldRealization& realization) const;
    ComplexVector estimate(const ComplexVector& measurements) const;

private:
    ComplexMatrix G_;
    double alpha_;
    ComplexMatrix regularized_;
    Eigen::LLT<ComplexMatrix> factor_;
};

Reconstruction reconstruct_field(const ComplexMatrix& G, const FieldRealization& realization,
                                 double alpha);

// s(x) = N^(-1/2) sum_l a_nu(l) exp(j 2 pi x . l), with d = x.size().
Complex synthesize_field_value(std::span<const Complex> spectrum, std::span<const double> x,
                               int bandwidth);

// Runs fn(i) for i in [0, n) on `threads` workers. Exceptions from any task
// are rethrown (the one with the lowest index).
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

struct SpectrumRequest {
    int dimension = 1;
    int bandwidth = 1;
    double beta = 0.5;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    SimLimits limits{};
};

// Trial t uses stream t. The result is ordered by trial and does not depend
// on the thread count.
std::vector<SpectrumSample> simulate_spectra(const SpectrumRequest& request);

}  // namespace mpfield
