#include "mpfield/moments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

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

void check_dimension(int dimension) {
    if (dimension < 1) {
        throw ArgumentError("dimension must be >= 1, got " + std::to_string(dimension));
    }
}

std::string rational_text(const Rational& value) {
    std::ostringstream out;
    out << boost::multiprecision::numerator(value);
    if (boost::multiprecision::denominator(value) != 1) {
        out << '/' << boost::multiprecision::denominator(value);
    }
    return out.str();
}

// (blocks, volume) ordered as documented on MomentExpansion.
struct TermKey {
    int blocks;
    Rational volume;
    bool operator<(const TermKey& other) const {
        if (blocks != other.blocks) {
            return blocks < other.blocks;
        }
        return volume > other.volume;
    }
};

using TermMap = std::map<TermKey, std::uint64_t>;

Rational power(const Rational& base, int exponent) {
    Rational out = 1;
    for (int i = 0; i < exponent; ++i) {
        out *= base;
    }
    return out;
}

}  // namespace

std::vector<MomentTerm> MomentExpansion::coefficient(int k) const {
    std::vector<MomentTerm> out;
    for (const auto& term : terms) {
        if (term.blocks == k) {
            out.push_back(term);
        }
    }
    return out;
}

std::string MomentExpansion::symbolic() const {
    std::vector<std::string> pieces;
    for (int k = 1; k <= order; ++k) {
        const auto group = coefficient(k);
        if (group.empty()) {
            continue;
        }
        std::vector<std::string> parts;
        for (const auto& term : group) {
            if (term.volume == 1) {
                parts.push_back(std::to_string(term.multiplicity));
            } else {
                std::string part = "(" + rational_text(term.volume) + ")^d";
                if (term.multiplicity != 1) {
                    part = std::to_string(term.multiplicity) + " " + part;
                }
                parts.push_back(std::move(part));
            }
        }
        const int power = order - k;
        std::string coeff;
        if (parts.size() == 1) {
            coeff = parts.front();
        } else {
            coeff = "(";
            for (std::size_t i = 0; i < parts.size(); ++i) {
                coeff += (i == 0 ? "" : " + ") + parts[i];
            }
            coeff += ")";
        }
        std::string monomial = power == 0 ? "" : (power == 1 ? "b" : "b^" + std::to_string(power));
        if (monomial.empty()) {
            pieces.push_back(coeff);
        } else if (coeff == "1") {
            pieces.push_back(monomial);
        } else {
            pieces.push_back(coeff + " " + monomial);
        }
    }
    std::string out;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        out += (i == 0 ? "" : " + ") + pieces[i];
    }
    return out;
}

MomentExpansion moment_expansion(int p, const MomentOptions& options) {
    if (p < 1) {
        throw ArgumentError("moment order must be >= 1, got " + std::to_string(p));
    }
    if (p > options.max_order) {
        throw CapacityError("moment order " + std::to_string(p) +
                            " exceeds the configured maximum " +
                            std::to_string(options.max_order));
    }
    VolumeCache local_cache;
    VolumeCache& cache = options.cache != nullptr ? *options.cache : local_cache;
    const unsigned workers = std::max(1u, options.threads);

    // Worker w handles paths whose lexicographic rank is w mod workers; the
    // merged map is independent of scheduling.
    std::vector<TermMap> partial(workers);
    auto work = [&](unsigned w) {
        std::uint64_t rank = 0;
        for_each_partition(p, [&](std::span<const int> labels) {
            if (rank++ % workers != w) {
                return;
            }
            const PartitionPath path(std::vector<int>(labels.begin(), labels.end()));
            const PartitionPath reduced = reduce_path(path);
            ++partial[w][TermKey{path.blocks(), cache.volume(reduced)}];
        });
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work, w);
        }
    }

    TermMap merged;
    for (const auto& part : partial) {
        for (const auto& [key, count] : part) {
            merged[key] += count;
        }
    }
    MomentExpansion expansion;
    expansion.order = p;
    for (const auto& [key, count] : merged) {
        expansion.terms.push_back({key.volume, key.blocks, count});
    }
    return expansion;
}

double moment_eval(const MomentExpansion& expansion, int dimension, double beta) {
    check_beta(beta);
    check_dimension(dimension);
    double total = 0.0;
    for (const auto& term : expansion.terms) {
        total += static_cast<double>(term.multiplicity) *
                 std::pow(term.volume.convert_to<double>(), dimension) *
                 std::pow(beta, expansion.order - term.blocks);
    }
    return total;
}

Rational moment_eval_exact(const MomentExpansion& expansion, int dimension,
                           const Rational& beta) {
    if (!(beta > 0 && beta <= 1)) {
        throw ArgumentError("beta must lie in (0, 1]");
    }
    check_dimension(dimension);
    Rational total = 0;
    for (const auto& term : expansion.terms) {
        total += Rational(term.multiplicity) * power(term.volume, dimension) *
                 power(beta, expansion.order - term.blocks);
    }
    return total;
}

double moment_limit(int p, double beta) {
    check_beta(beta);
    if (p < 1) {
        throw ArgumentError("moment order must be >= 1, got " + std::to_string(p));
    }
    double total = 0.0;
    for (int k = 1; k <= p; ++k) {
        total += narayana(p, k).convert_to<double>() * std::pow(beta, p - k);
    }
    return total;
}

double limit_envelope(int p, int dimension, double beta) {
    check_beta(beta);
    check_dimension(dimension);
    const double crossing = (bell(p) - catalan(p)).convert_to<double>();
    // A crossing partition has two blocks of size >= 2, so p - k >= 2 and
    // beta^(p-k) <= beta^2.
    return crossing * std::pow(2.0 / 3.0, dimension) * beta * beta;
}

}  // namespace mpfield
