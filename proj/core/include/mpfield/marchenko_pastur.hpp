#pragma once

#include <functional>

namespace mpfield {

// Marchenko-Pastur law with ratio beta in (0, 1], supported on [lower, upper]
// with upper, lower = (1 +- sqrt(beta))^2.
struct MPParams {
    double beta = 0.0;
    double upper = 0.0;  // c1
    double lower = 0.0;  // c2

    static MPParams make(double beta);
};

double mp_pdf(double x, const MPParams& params);

// E[x^p] under the law: the Narayana polynomial in beta (1 for p = 0).
double mp_moment(int p, double beta);

// Closed-form E[alpha beta / (x + alpha beta)], the LMMSE of a field whose
// sampling spectrum follows the law.
double mp_lmmse(double beta, double alpha);

// E[g(x)] by adaptive Gauss-Kronrod after x = c2 + (c1 - c2) sin^2 t, which
// removes the square-root edges. Throws ConvergenceError when the error
// estimate stays above `tolerance`.
double mp_expectation(const std::function<double(double)>& g, double beta, double tolerance);

// Probability mass of [a, b].
double mp_interval_mass(double a, double b, const MPParams& params);

// alpha = 10^(-snr_db / 10); +infinity maps to 0.
double snr_db_to_alpha(double snr_db);

}  // namespace mpfield
