#include "mpfield/field_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "mpfield/errors.hpp"

namespace mpfield {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// exp(-j 2 pi t), with t reduced to [0, 1) first to keep the phase accurate.
Complex unit_phasor(double t) {
    const double frac = t - std::floor(t);
    return std::polar(1.0, -kTwoPi * frac);
}

void check_grid(int dimension, int bandwidth) {
    if (dimension < 1) {
        throw ArgumentError("dimension must be >= 1, got " + std::to_string(dimension));
    }
    if (bandwidth < 0) {
        throw ArgumentError("bandwidth M must be >= 0, got " + std::to_string(bandwidth));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Limits

std::uint64_t parse_byte_size(const std::string& text) {
    if (text.empty()) {
        throw ArgumentError("empty memory size");
    }
    std::size_t consumed = 0;
    unsigned long long value = 0;
    try {
        value = std::stoull(text, &consumed);
    } catch (const std::exception&) {
        throw ArgumentError("malformed memory size '" + text + "'");
    }
    std::uint64_t scale = 1;
    const std::string suffix = text.substr(consumed);
    if (suffix.empty() || suffix == "B") {
        scale = 1;
    } else if (suffix == "K" || suffix == "KB" || suffix == "k") {
        scale = 1ULL << 10;
    } else if (suffix == "M" || suffix == "MB") {
        scale = 1ULL << 20;
    } else if (suffix == "G" || suffix == "GB") {
        scale = 1ULL << 30;
    } else {
        throw ArgumentError("malformed memory size '" + text + "'");
    }
    return static_cast<std::uint64_t>(value) * scale;
}

SimLimits SimLimits::from_env() {
    SimLimits limits;
    if (const char* env = std::getenv(kMaxMemoryEnv); env != nullptr && *env != '\0') {
        limits.max_bytes = parse_byte_size(env);
    }
    return limits;
}

void check_memory(std::size_t harmonics, std::size_t sensors, unsigned concurrent,
                  const SimLimits& limits) {
    // G, T, eigenvectors and solver workspace, all complex double.
    const double per_worker = 16.0 * (static_cast<double>(harmonics) * static_cast<double>(sensors) +
                                      3.0 * static_cast<double>(harmonics) *
                                          static_cast<double>(harmonics));
    const double total = per_worker * std::max(1u, concurrent);
    if (total > static_cast<double>(limits.max_bytes)) {
        std::ostringstream msg;
        msg << "N=" << harmonics << ", r=" << sensors << " on " << std::max(1u, concurrent)
            << " worker(s) needs about " << static_cast<std::uint64_t>(total)
            << " bytes, above the budget of " << limits.max_bytes << " bytes";
        throw CapacityError(msg.str());
    }
}

// ---------------------------------------------------------------------------
// Harmonic indexing

std::size_t harmonic_count(int dimension, int bandwidth) {
    check_grid(dimension, bandwidth);
    std::uint64_t n = 1;
    for (int m = 0; m < dimension; ++m) {
        n *= static_cast<std::uint64_t>(2 * bandwidth + 1);
        if (n > std::numeric_limits<std::int32_t>::max()) {
            throw CapacityError("(2M+1)^d overflows: d=" + std::to_string(dimension) +
                                " M=" + std::to_string(bandwidth));
        }
    }
    return static_cast<std::size_t>(n);
}

std::int64_t nu_index(std::span<const int> ell, int bandwidth) {
    check_grid(static_cast<int>(ell.size()), bandwidth);
    std::int64_t nu = 0;
    std::int64_t radix = 1;
    for (std::size_t m = 0; m < ell.size(); ++m) {
        if (ell[m] < -bandwidth || ell[m] > bandwidth) {
            throw ArgumentError("harmonic component " + std::to_string(ell[m]) + " outside [-" +
                                std::to_string(bandwidth) + ", " + std::to_string(bandwidth) + "]");
        }
        nu += radix * ell[m];
        radix *= 2 * bandwidth + 1;
    }
    return nu;
}

std::size_t harmonic_row(std::span<const int> ell, int bandwidth) {
    const auto n = static_cast<std::int64_t>(harmonic_count(static_cast<int>(ell.size()), bandwidth));
    return static_cast<std::size_t>(nu_index(ell, bandwidth) + (n - 1) / 2);
}

std::vector<int> harmonic_of_row(std::size_t row, int dimension, int bandwidth) {
    const std::size_t n = harmonic_count(dimension, bandwidth);
    if (row >= n) {
        throw ArgumentError("harmonic row out of range");
    }
    const auto width = static_cast<std::size_t>(2 * bandwidth + 1);
    std::vector<int> ell(static_cast<std::size_t>(dimension));
    for (auto& component : ell) {
        component = static_cast<int>(row % width) - bandwidth;
        row /= width;
    }
    return ell;
}

// ---------------------------------------------------------------------------
// Sampling sets

int sensors_for_beta(int dimension, int bandwidth, double beta) {
    if (!(beta > 0.0 && beta < 1.0)) {
        std::ostringstream msg;
        msg << "beta must lie in (0, 1) for simulation, got " << beta;
        throw ArgumentError(msg.str());
    }
    const auto n = static_cast<double>(harmonic_count(dimension, bandwidth));
    const double r = std::round(n / beta);
    if (r > static_cast<double>(std::numeric_limits<int>::max())) {
        throw CapacityError("sensor count overflows");
    }
    if (r <= n) {
        std::ostringstream msg;
        msg << "beta=" << beta << " rounds to r=" << r << " <= N=" << n;
        throw ArgumentError(msg.str());
    }
    return static_cast<int>(r);
}

SamplingInstance sample_points(int sensors, int dimension, int bandwidth, std::uint64_t seed,
                               std::uint64_t stream) {
    const std::size_t n = harmonic_count(dimension, bandwidth);
    if (sensors < 1) {
        throw ArgumentError("sensor count must be >= 1, got " + std::to_string(sensors));
    }
    if (static_cast<std::size_t>(sensors) <= n) {
        throw ArgumentError("sensor count r=" + std::to_string(sensors) +
                            " must exceed N=" + std::to_string(n));
    }
    SamplingInstance instance;
    instance.dimension = dimension;
    instance.bandwidth = bandwidth;
    instance.sensors = sensors;
    instance.beta = static_cast<double>(n) / sensors;
    instance.seed = seed;
    instance.stream = stream;
    instance.points.resize(sensors, dimension);
    Rng rng(seed, stream);
    for (int q = 0; q < sensors; ++q) {
        for (int m = 0; m < dimension; ++m) {
            instance.points(q, m) = rng.uniform();
        }
    }
    return instance;
}

SamplingInstance make_instance(int dimension, int bandwidth, double beta, std::uint64_t seed,
                               std::uint64_t stream) {
    return sample_points(sensors_for_beta(dimension, bandwidth, beta), dimension, bandwidth, seed,
                         stream);
}

SamplingInstance instance_from_points(int dimension, int bandwidth, Eigen::MatrixXd points) {
    const std::size_t n = harmonic_count(dimension, bandwidth);
    if (points.cols() != dimension || points.rows() < 1) {
        throw ArgumentError("points must be an r x d matrix with r >= 1");
    }
    SamplingInstance instance;
    instance.dimension = dimension;
    instance.bandwidth = bandwidth;
    instance.sensors = static_cast<int>(points.rows());
    instance.beta = static_cast<double>(n) / static_cast<double>(points.rows());
    instance.points = std::move(points);
    return instance;
}

// ---------------------------------------------------------------------------
// Matrices

ComplexMatrix build_G(const SamplingInstance& instance, const SimLimits& limits) {
    const std::size_t n = instance.harmonics();
    const auto r = static_cast<std::size_t>(instance.sensors);
    check_memory(n, r, 1, limits);
    const int d = instance.dimension;
    const double scale = std::pow(static_cast<double>(2 * instance.bandwidth + 1), -0.5 * d);

    ComplexMatrix G(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r));
    std::vector<std::vector<int>> harmonics(n);
    for (std::size_t row = 0; row < n; ++row) {
        harmonics[row] = harmonic_of_row(row, d, instance.bandwidth);
    }
    for (std::size_t q = 0; q < r; ++q) {
        for (std::size_t row = 0; row < n; ++row) {
            double phase = 0.0;
            for (int m = 0; m < d; ++m) {
                phase += instance.points(static_cast<Eigen::Index>(q), m) *
                         harmonics[row][static_cast<std::size_t>(m)];
            }
            G(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(q)) =
                scale * unit_phasor(phase);
        }
    }
    return G;
}

ComplexMatrix build_T(const SamplingInstance& instance, const SimLimits& limits) {
    const ComplexMatrix G = build_G(instance, limits);
    const Eigen::Index n = G.rows();
    ComplexMatrix T = ComplexMatrix::Zero(n, n);
    T.selfadjointView<Eigen::Lower>().rankUpdate(G, instance.beta);
    for (Eigen::Index col = 0; col < n; ++col) {
        T(col, col) = 1.0;
        for (Eigen::Index row = col + 1; row < n; ++row) {
            T(col, row) = std::conj(T(row, col));
        }
    }
    return T;
}

// ---------------------------------------------------------------------------
// Spectra

SpectrumSample hermitian_eigenvalues(const ComplexMatrix& T, const SamplingInstance& instance) {
    if (T.rows() != T.cols() || T.rows() == 0) {
        throw ArgumentError("hermitian_eigenvalues: matrix must be square and non-empty");
    }
    const double magnitude = std::max(1.0, T.cwiseAbs().maxCoeff());
    if ((T - T.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * magnitude) {
        throw ArgumentError("hermitian_eigenvalues: matrix is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(T, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw IntegrityError("hermitian_eigenvalues: eigensolver did not converge");
    }
    const auto& values = solver.eigenvalues();
    const auto& vectors = solver.eigenvectors();
    const Eigen::Index n = T.rows();
    const double norm = std::max(std::abs(values(0)), std::abs(values(n - 1)));

    Rng picker(instance.seed, instance.stream ^ 0xa5a5a5a5a5a5a5a5ULL);
    for (int check = 0; check < 3; ++check) {
        const auto j = static_cast<Eigen::Index>(picker.next_u64() % static_cast<std::uint64_t>(n));
        const double residual = (T * vectors.col(j) - values(j) * vectors.col(j)).norm();
        if (residual > 1e-8 * std::max(norm, 1.0)) {
            throw IntegrityError("hermitian_eigenvalues: eigenpair residual too large");
        }
    }

    SpectrumSample sample;
    sample.dimension = instance.dimension;
    sample.bandwidth = instance.bandwidth;
    sample.sensors = instance.sensors;
    sample.beta = instance.beta;
    sample.seed = instance.seed;
    sample.stream = instance.stream;
    sample.eigenvalues.resize(static_cast<std::size_t>(n));
    const double floor = -1e-10 * static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double value = values(i);
        if (value < 0.0) {
            if (value < floor) {
                std::ostringstream msg;
                msg << "hermitian_eigenvalues: eigenvalue " << value << " below clamp floor "
                    << floor;
                throw IntegrityError(msg.str());
            }
            sample.largest_clamp = std::max(sample.largest_clamp, -value);
            value = 0.0;
        }
        sample.eigenvalues[static_cast<std::size_t>(i)] = value;
    }
    return sample;
}

double empirical_moment(const SpectrumSample& sample, int p) {
    if (p < 0) {
        throw ArgumentError("empirical_moment: order must be >= 0");
    }
    if (sample.eigenvalues.empty()) {
        throw ArgumentError("empirical_moment: empty spectrum");
    }
    double total = 0.0;
    for (const double lambda : sample.eigenvalues) {
        total += std::pow(lambda, p);
    }
    return total / static_cast<double>(sample.size());
}

double empirical_lmmse(const SpectrumSample& sample, double alpha) {
    if (!(alpha >= 0.0)) {
        throw ArgumentError("empirical_lmmse: alpha must be >= 0");
    }
    if (sample.eigenvalues.empty()) {
        throw ArgumentError("empirical_lmmse: empty spectrum");
    }
    if (alpha == 0.0) {
        return 0.0;
    }
    const double shift = alpha * sample.beta;
    double total = 0.0;
    for (const double lambda : sample.eigenvalues) {
        total += shift / (lambda + shift);
    }
    return total / static_cast<double>(sample.size());
}

// ---------------------------------------------------------------------------
// Reconstruction

FieldRealization draw_realization(const ComplexMatrix& G, double alpha, Rng& rng,
                                  double signal_variance) {
    if (!(alpha >= 0.0) || !(signal_variance > 0.0)) {
        throw ArgumentError("draw_realization: need alpha >= 0 and positive signal variance");
    }
    FieldRealization out;
    out.spectrum.resize(G.rows());
    out.noise.resize(G.cols());
    for (Eigen::Index i = 0; i < G.rows(); ++i) {
        out.spectrum(i) = rng.complex_normal(signal_variance);
    }
    for (Eigen::Index q = 0; q < G.cols(); ++q) {
        out.noise(q) = alpha == 0.0 ? Complex{} : rng.complex_normal(alpha * signal_variance);
    }
    out.measurements = G.adjoint() * out.spectrum + out.noise;
    return out;
}

LmmseReconstructor::LmmseReconstructor(const ComplexMatrix& G, double alpha)
    : G_(G), alpha_(alpha) {
    if (!(alpha > 0.0)) {
        throw ArgumentError("LMMSE reconstruction needs alpha > 0");
    }
    regularized_ = G_ * G_.adjoint();
    regularized_.diagonal().array() += alpha_;
    factor_.compute(regularized_);
    if (factor_.info() != Eigen::Success) {
        throw IntegrityError("LMMSE reconstruction: Cholesky factorization failed");
    }
}

ComplexVector LmmseReconstructor::estimate(const ComplexVector& measurements) const {
    if (measurements.size() != G_.cols()) {
        throw ArgumentError("measurement vector length does not match the sensor count");
    }
    const ComplexVector rhs = G_ * measurements;
    ComplexVector solution = factor_.solve(rhs);
    const double residual = (regularized_ * solution - rhs).norm();
    if (residual > 1e-8 * std::max(rhs.norm(), std::numeric_limits<double>::min())) {
        throw IntegrityError("LMMSE reconstruction: solve residual too large");
    }
    return solution;
}

Reconstruction LmmseReconstructor::operator()(const FieldRealization& realization) const {
    Reconstruction out;
    out.estimate = estimate(realization.measurements);
    if (realization.spectrum.size() != out.estimate.size()) {
        throw ArgumentError("spectrum length does not match the harmonic count");
    }
    out.mse = (out.estimate - realization.spectrum).squaredNorm() /
              static_cast<double>(out.estimate.size());
    return out;
}

Reconstruction reconstruct_field(const ComplexMatrix& G, const FieldRealization& realization,
                                 double alpha) {
    return LmmseReconstructor(G, alpha)(realization);
}

Complex synthesize_field_value(std::span<const Complex> spectrum, std::span<const double> x,
                               int bandwidth) {
    const int d = static_cast<int>(x.size());
    const std::size_t n = harmonic_count(d, bandwidth);
    if (spectrum.size() != n) {
        throw ArgumentError("spectrum length must be (2M+1)^d");
    }
    Complex total{};
    for (std::size_t row = 0; row < n; ++row) {
        const auto ell = harmonic_of_row(row, d, bandwidth);
        double phase = 0.0;
        for (int m = 0; m < d; ++m) {
            phase += x[static_cast<std::size_t>(m)] * ell[static_cast<std::size_t>(m)];
        }
        total += spectrum[row] * std::conj(unit_phasor(phase));
    }
    return total * std::pow(static_cast<double>(2 * bandwidth + 1), -0.5 * d);
}

// ---------------------------------------------------------------------------
// Trials

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(n, 1)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_index = std::numeric_limits<std::size_t>::max();
    std::exception_ptr error;
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (i < error_index) {
                            error_index = i;
                            error = std::current_exception();
                        }
                    }
                }
            });
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

std::vector<SpectrumSample> simulate_spectra(const SpectrumRequest& request) {
    const int sensors = sensors_for_beta(request.dimension, request.bandwidth, request.beta);
    const std::size_t n = harmonic_count(request.dimension, request.bandwidth);
    check_memory(n, static_cast<std::size_t>(sensors), request.threads, request.limits);

    std::vector<SpectrumSample> samples(request.trials);
    parallel_for(request.trials, request.threads, [&](std::size_t trial) {
        const auto instance = sample_points(sensors, request.dimension, request.bandwidth,
                                            request.seed, trial);
        samples[trial] = hermitian_eigenvalues(build_T(instance, request.limits), instance);
    });
    return samples;
}

}  // namespace mpfield
