#include "mpfield/marchenko_pastur.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mpfield/combinatorics.hpp"
#include "mpfield/errors.hpp"

namespace mpfield {

namespace {

void check_beta(double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) {
        std::ostringstream msg;
        msg << "beta must lie in (0, 1], got " << beta;
        throw ArgumentError(msg.str());
    }
}

// Integrates h(t) over [t0, t1] to an absolute tolerance.
template <class F>
double integrate(F&& h, double t0, double t1, double tolerance, const char* what) {
    using boost::math::quadrature::gauss_kronrod;
    double error = 0.0;
    double previous = std::numeric_limits<double>::quiet_NaN();
    double value = 0.0;
    for (const double relative : {tolerance * 1e-2, tolerance * 1e-4, 1e-15}) {
        value = gauss_kronrod<double, 61>::integrate(h, t0, t1, 20, relative, &error);
        if (error <= tolerance) {
            return value;
        }
        previous = value;
    }
    throw ConvergenceError(std::string(what) + ": error estimate above tolerance", previous, value);
}

}  // namespace

MPParams MPParams::make(double beta) {
    check_beta(beta);
    const double root = std::sqrt(beta);
    return MPParams{beta, (1.0 + root) * (1.0 + root), (1.0 - root) * (1.0 - root)};
}

double mp_pdf(double x, const MPParams& params) {
    if (x <= params.lower || x >= params.upper) {
        return 0.0;
    }
    return std::sqrt((params.upper - x) * (x - params.lower)) /
           (2.0 * std::numbers::pi * x * params.beta);
}

double mp_moment(int p, double beta) {
    check_beta(beta);
    if (p < 0) {
        throw ArgumentError("mp_moment: order must be >= 0");
    }
    if (p == 0) {
        return 1.0;
    }
    double total = 0.0;
    for (int k = 1; k <= p; ++k) {
        total += narayana(p, k).convert_to<double>() * std::pow(beta, p - k);
    }
    return total;
}

double mp_lmmse(double beta, double alpha) {
    check_beta(beta);
    if (!(alpha >= 0.0)) {
        throw ArgumentError("mp_lmmse: alpha must be >= 0");
    }
    if (std::isinf(alpha)) {
        return 1.0;
    }
    if (alpha == 0.0) {
        return 0.0;
    }
    const double theta = 1.0 + beta * (1.0 + alpha);
    double discriminant = theta * theta - 4.0 * beta;
    if (discriminant < -1e-12) {
        throw DomainError("mp_lmmse: negative discriminant");
    }
    discriminant = std::max(discriminant, 0.0);
    // (2 beta - theta + sqrt(D)) / (2 beta) multiplied through by its
    // conjugate; avoids cancellation when alpha is large.
    const double value = 2.0 * alpha * beta / (std::sqrt(discriminant) + theta - 2.0 * beta);
    if (value < -1e-12 || value > 1.0 + 1e-12) {
        std::ostringstream msg;
        msg << "mp_lmmse: result " << value << " outside [0, 1]";
        throw DomainError(msg.str());
    }
    return std::clamp(value, 0.0, 1.0);
}

double mp_expectation(const std::function<double(double)>& g, double beta, double tolerance) {
    const auto params = MPParams::make(beta);
    if (!(tolerance > 0.0)) {
        throw ArgumentError("mp_expectation: tolerance must be positive");
    }
    const double width = params.upper - params.lower;
    // f(x) dx = width^2 sin^2 t cos^2 t / (pi beta x) dt
    auto integrand = [&](double t) {
        const double s = std::sin(t);
        const double c = std::cos(t);
        const double x = params.lower + width * s * s;
        return g(x) * width * width * s * s * c * c / (std::numbers::pi * beta * x);
    };
    return integrate(integrand, 0.0, std::numbers::pi / 2.0, tolerance, "mp_expectation");
}

double mp_interval_mass(double a, double b, const MPParams& params) {
    a = std::clamp(a, params.lower, params.upper);
    b = std::clamp(b, params.lower, params.upper);
    if (b <= a) {
        return 0.0;
    }
    const double width = params.upper - params.lower;
    const auto angle = [&](double x) {
        return std::asin(std::sqrt(std::clamp((x - params.lower) / width, 0.0, 1.0)));
    };
    auto integrand = [&](double t) {
        const double s = std::sin(t);
        const double c = std::cos(t);
        const double x = params.lower + width * s * s;
        return width * width * s * s * c * c / (std::numbers::pi * params.beta * x);
    };
    // The integrand is analytic in t, so fixed Gauss-Legendre panels are
    // enough; adaptive error estimates degrade on very short intervals.
    const double t0 = angle(a);
    const double t1 = angle(b);
    const auto panels = [&](int n) {
        const double h = (t1 - t0) / n;
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            total += boost::math::quadrature::gauss<double, 30>::integrate(integrand, t0 + i * h,
                                                                           t0 + (i + 1) * h);
        }
        return total;
    };
    const double coarse = panels(4);
    const double fine = panels(8);
    if (std::abs(fine - coarse) > 1e-12) {
        throw ConvergenceError("mp_interval_mass: panel refinement disagrees", coarse, fine);
    }
    return fine;
}

double snr_db_to_alpha(double snr_db) {
    if (std::isnan(snr_db)) {
        throw ArgumentError("SNR must not be NaN");
    }
    if (std::isinf(snr_db)) {
        return snr_db > 0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::pow(10.0, -snr_db / 10.0);
}

}  // namespace mpfield
