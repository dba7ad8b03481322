#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpfield/volumes.hpp"

namespace mpfield {

// multiplicity * volume^d * beta^(p - blocks)
struct MomentTerm {
    Rational volume;
    int blocks = 0;
    std::uint64_t multiplicity = 0;

    friend bool operator==(const MomentTerm&, const MomentTerm&) = default;
};

// Asymptotic moment E[lambda^p] of the sampling Gram matrix, kept symbolic in
// the field dimension d and the ratio beta. Terms are ordered by ascending
// block count, then descending volume.
struct MomentExpansion {
    int order = 0;
    std::vector<MomentTerm> terms;

    // Coefficient of beta^(p - k) as multiplicities grouped by volume.
    std::vector<MomentTerm> coefficient(int k) const;

    // e.g. "b^3 + (6 + (2/3)^d) b^2 + 6 b + 1"
    std::string symbolic() const;
};

struct MomentOptions {
    int max_order = kDefaultMaxOrder;
    unsigned threads = 1;
    VolumeCache* cache = nullptr;  // shared memo; a private one is used when null
};

MomentExpansion moment_expansion(int p, const MomentOptions& options = {});

double moment_eval(const MomentExpansion& expansion, int dimension, double beta);
Rational moment_eval_exact(const MomentExpansion& expansion, int dimension, const Rational& beta);

// Narayana polynomial sum_k T(p, k) beta^(p-k), the d -> infinity limit.
double moment_limit(int p, double beta);

// (B(p) - C(p)) (2/3)^d beta^2: bounds |moment_eval - moment_limit| since only
// crossing partitions have volume < 1, each at most 2/3, and each has p - k >= 2.
double limit_envelope(int p, int dimension, double beta);

}  // namespace mpfield
