// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli.hpp"
#include "mpfield/combinatorics.hpp"
#include "mpfield/field_sim.hpp"
#include "mpfield/marchenko_pastur.hpp"
#include "mpfield/moments.hpp"
#include "mpfield/volumes.hpp"

using namespace mpfield;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream out;
    out << std::setprecision(digits) << v;
    return out.str();
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome order_four_moment() {
    const auto start = Clock::now();
    const auto e = moment_expansion(4);
    const double elapsed = seconds_since(start);
    const std::vector<MomentTerm> expected{
        {Rational(1), 1, 1}, {Rational(1), 2, 6}, {Rational(2, 3), 2, 1}, {Rational(1), 3, 6}, {Rational(1), 4, 1}};
    Outcome o;
    o.pass = e.terms == expected && elapsed < 1.0;
    o.detail = e.symbolic() + ", " + fixed(elapsed, 3) + " s";
    return o;
}

Outcome alternating_volume() {
    const auto start = Clock::now();
    const PartitionPath w({1, 2, 1, 2});
    const auto exact = volume_exact(w).exact;
    const double quad = volume_quadrature(w, 1e-6);
    const double elapsed = seconds_since(start);
    Outcome o;
    const double gap = std::abs(quad - 2.0 / 3.0);
    o.pass = exact == Rational(2, 3) && gap <= 1e-5 && elapsed < 10.0;
    std::ostringstream d;
    d << "exact " << exact << ", quadrature " << std::setprecision(10) << quad << " (gap "
      << std::setprecision(2) << gap << "), " << fixed(elapsed, 3) << " s";
    o.detail = d.str();
    return o;
}

Outcome reduction_traces() {
    struct Row {
        std::vector<int> path;
        int rule;
        int index;
    };
    const auto matches = [](const std::vector<int>& start, const std::vector<Row>& rows) {
        const auto trace = reduction_trace(PartitionPath(start));
        if (trace.size() != rows.size()) return false;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& t = trace[i];
            if (std::vector<int>(t.path.labels().begin(), t.path.labels().end()) != rows[i].path) return false;
            if (rows[i].rule == 0) {
                if (t.rule) return false;
            } else if (!t.rule || static_cast<int>(*t.rule) != rows[i].rule || t.index != rows[i].index) {
                return false;
            }
        }
        return true;
    };
    const bool first = matches({1, 2, 3, 2, 2, 1}, {{{1, 2, 3, 2, 2, 1}, 1, 3},
                                                     {{1, 2, 2, 2, 1}, 2, 2},
                                                     {{1, 2, 2, 1}, 2, 2},
                                                     {{1, 2, 1}, 1, 2},
                                                     {{1, 1}, 2, 2},
                                                     {{1}, 1, 1},
                                                     {{}, 0, 0}});
    const bool second = matches({1, 2, 3, 1, 2, 1},
                                {{{1, 2, 3, 1, 2, 1}, 1, 3}, {{1, 2, 1, 2, 1}, 2, 5}, {{1, 2, 1, 2}, 0, 0}});
    Outcome o;
    o.pass = first && second;
    o.detail = std::string("[1,2,3,2,2,1] ") + (first ? "matches" : "differs") + ", [1,2,3,1,2,1] " +
               (second ? "matches" : "differs");
    return o;
}

Outcome combinatorial_counts() {
    Outcome o;
    o.pass = bell(4) == 15 && bell(10) == 115975;
    double slowest = 0.0;
    for (int p = 1; p <= 8; ++p) {
        const auto start = Clock::now();
        const auto catalog = enumerate_partitions(p);
        BigInt noncrossing_total = 0;
        for (int k = 1; k <= p; ++k) {
            const auto& bucket = catalog.by_blocks[static_cast<std::size_t>(k - 1)];
            std::size_t nc = 0;
            for (const auto& w : bucket) nc += !is_crossing(w);
            o.pass = o.pass && BigInt(bucket.size()) == stirling2(p, k) && BigInt(nc) == narayana(p, k);
            noncrossing_total += nc;
        }
        o.pass = o.pass && BigInt(catalog.size()) == bell(p) && noncrossing_total == catalan(p);
        slowest = std::max(slowest, seconds_since(start));
    }
    o.pass = o.pass && slowest < 60.0;
    o.detail = "p <= 8 exhaustive, B(10) = " + bell(10).str() + ", slowest order " + fixed(slowest, 3) + " s";
    return o;
}

Outcome crossing_bound() {
    Outcome o;
    VolumeCache cache;
    Rational largest_crossing = 0;
    std::size_t crossing = 0, noncrossing = 0;
    for (int p = 1; p <= 8; ++p) {
        for_each_partition(p, [&](std::span<const int> l) {
            const PartitionPath w(std::vector<int>(l.begin(), l.end()));
            const auto v = cache.volume(reduce_path(w));
            if (is_crossing(w)) {
                ++crossing;
                largest_crossing = std::max(largest_crossing, v);
                o.pass = o.pass && v <= Rational(2, 3);
            } else {
                ++noncrossing;
                o.pass = o.pass && v == 1;
            }
        });
    }
    std::ostringstream d;
    d << crossing << " crossing (max volume " << largest_crossing << "), " << noncrossing << " non-crossing";
    o.detail = d.str();
    return o;
}

Outcome mp_moment_identity() {
    Outcome o;
    double worst = 0.0;
    double worst_envelope_ratio = 0.0;
    for (const double b : {0.1, 0.4, 0.8, 1.0}) {
        for (int p = 1; p <= 6; ++p) {
            double narayana_poly = 0.0;
            for (int k = 1; k <= p; ++k) narayana_poly += narayana(p, k).convert_to<double>() * std::pow(b, p - k);
            const double quad = mp_expectation([p](double x) { return std::pow(x, p); }, b, 1e-10);
            worst = std::max(worst, std::abs(quad - narayana_poly));
            const auto e = moment_expansion(p);
            for (int d = 1; d <= 40; ++d) {
                const double gap = std::abs(moment_eval(e, d, b) - narayana_poly);
                const double env = limit_envelope(p, d, b);
                o.pass = o.pass && gap <= env + 1e-12;
                if (env > 0) worst_envelope_ratio = std::max(worst_envelope_ratio, gap / env);
            }
            o.pass = o.pass && limit_envelope(p, 40, b) < 1e-5;
        }
    }
    o.pass = o.pass && worst <= 1e-6;
    o.detail = "max |quadrature - Narayana| " + fixed(worst, 3) + ", max gap/envelope " +
               fixed(worst_envelope_ratio, 3);
    return o;
}

Outcome monte_carlo_moments() {
    const auto start = Clock::now();
    Outcome o;
    double worst = 0.0;
    std::string worst_at;
    const std::vector<std::pair<int, int>> grids{{1, 50}, {2, 3}};
    std::vector<MomentExpansion> expansions;
    for (int p = 1; p <= 4; ++p) expansions.push_back(moment_expansion(p));
    for (const auto& [d, M] : grids) {
        for (const double b : {0.3, 0.5, 0.8}) {
            SpectrumRequest req;
            req.dimension = d;
            req.bandwidth = M;
            req.beta = b;
            req.trials = 100;
            req.seed = 2024;
            req.threads = workers();
            const auto samples = simulate_spectra(req);
            for (int p = 1; p <= 4; ++p) {
                double mean = 0.0;
                for (const auto& s : samples) mean += empirical_moment(s, p);
                mean /= static_cast<double>(samples.size());
                const double expected = moment_eval(expansions[static_cast<std::size_t>(p - 1)], d, b);
                const double rel = std::abs(mean - expected) / expected;
                if (rel > worst) {
                    worst = rel;
                    worst_at = "d=" + std::to_string(d) + " beta=" + fixed(b, 2) + " p=" + std::to_string(p);
                }
            }
        }
    }
    const double elapsed = seconds_since(start);
    o.pass = worst <= 0.05 && elapsed < 300.0;
    o.detail = "max relative error " + fixed(worst, 3) + " at " + worst_at + ", " + fixed(elapsed, 3) + " s";
    return o;
}

// max over the SNR grid of |mean empirical LMMSE - closed form|
double lmmse_gap(int d, int M, double beta, std::size_t trials) {
    SpectrumRequest req;
    req.dimension = d;
    req.bandwidth = M;
    req.beta = beta;
    req.trials = trials;
    req.seed = 2024;
    req.threads = workers();
    const auto samples = simulate_spectra(req);
    double worst = 0.0;
    for (int snr = 0; snr <= 30; snr += 5) {
        const double alpha = snr_db_to_alpha(snr);
        double mean = 0.0;
        for (const auto& s : samples) mean += empirical_lmmse(s, alpha);
        mean /= static_cast<double>(samples.size());
        worst = std::max(worst, std::abs(mean - mp_lmmse(samples.front().beta, alpha)));
    }
    return worst;
}

Outcome figure_reproduction() {
    const auto start = Clock::now();
    const double a = lmmse_gap(1, 100, 0.1, 50);
    const double b = lmmse_gap(1, 100, 0.8, 50);
    const double c4 = lmmse_gap(3, 2, 0.4, 50);
    const double c8 = lmmse_gap(3, 2, 0.8, 50);
    const double elapsed = seconds_since(start);
    const bool pa = a <= 0.01, pb = b > 0.02, pc4 = c4 <= 0.02, pc8 = c8 <= 0.02;
    Outcome o;
    o.pass = pa && pb && pc4 && pc8 && elapsed < 600.0;
    const auto tag = [](bool ok) { return ok ? "ok" : "FAIL"; };
    o.detail = std::string("(a) d=1 beta=0.1 max gap ") + fixed(a, 3) + " " + tag(pa) +
               "; (b) d=1 beta=0.8 max gap " + fixed(b, 3) + " " + tag(pb) +
               "; (c) d=3 M=2 beta=0.4 max gap " + fixed(c4, 3) + " " + tag(pc4) +
               ", beta=0.8 max gap " + fixed(c8, 3) + " " + tag(pc8) + "; " + fixed(elapsed, 3) + " s";
    return o;
}

Outcome trace_formula() {
    const auto inst = make_instance(1, 10, 0.5, 2024);
    const auto G = build_G(inst);
    const double alpha = snr_db_to_alpha(10.0);
    const LmmseReconstructor solve(G, alpha);
    Rng rng(2024, 1);
    double sum = 0.0;
    for (int i = 0; i < 500; ++i) sum += solve(draw_realization(G, alpha, rng)).mse;
    const double mc = sum / 500.0;
    const double trace = empirical_lmmse(hermitian_eigenvalues(build_T(inst), inst), alpha);
    const double rel = std::abs(mc - trace) / trace;
    Outcome o;
    o.pass = rel <= 0.05;
    o.detail = "Monte Carlo " + fixed(mc, 5) + " vs trace " + fixed(trace, 5) + " (relative " + fixed(rel, 3) + ")";
    return o;
}

Outcome determinism() {
    const std::vector<std::vector<std::string>> runs{
        {"mse", "--beta", "0.3,0.8", "--d", "1,2", "--M", "4", "--trials", "12", "--seed", "5", "--snr", "inf"},
        {"spectrum", "--d", "3", "--M", "1", "--beta", "0.5", "--trials", "9", "--seed", "8", "--bins", "15"},
        {"moments", "--p", "8", "--d", "1,3", "--beta", "0.25,1"},
        {"mse", "--d", "1", "--M", "6", "--trials", "10", "--seed", "1", "--format", "json"},
    };
    Outcome o;
    std::size_t compared = 0;
    for (const auto& base : runs) {
        std::string reference;
        for (const unsigned threads : {1u, 2u, 7u}) {
            auto args = base;
            args.insert(args.end(), {"--threads", std::to_string(threads)});
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            if (code != 0) {
                o.pass = false;
                o.detail = base[0] + " exited " + std::to_string(code) + ": " + err.str();
                return o;
            }
            if (threads == 1) {
                reference = out.str();
            } else {
                o.pass = o.pass && out.str() == reference;
                ++compared;
            }
        }
    }
    o.detail = std::to_string(compared) + " runs at 2 and 7 threads compared byte-for-byte with 1 thread";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"order-4 moment expansion is exact", order_four_moment},
        {"volume of [1,2,1,2] is 2/3, quadrature agrees", alternating_volume},
        {"reduction traces of [1,2,3,2,2,1] and [1,2,3,1,2,1]", reduction_traces},
        {"Bell / Stirling / Narayana / Catalan counts for p <= 8", combinatorial_counts},
        {"crossing partitions have volume <= 2/3, others 1", crossing_bound},
        {"limiting moments are Narayana polynomials, finite-d envelope holds", mp_moment_identity},
        {"Monte Carlo moments match the expansion within 5%", monte_carlo_moments},
        {"LMMSE curves against the closed form at desk scale", figure_reproduction},
        {"reconstruction MSE matches the eigenvalue trace formula", trace_formula},
        {"CLI output is byte-identical across thread counts", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += !o.pass;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << std::setw(2) << i + 1 << "  " << criteria[i].first
                  << " -- " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
              << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
