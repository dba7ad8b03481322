#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpfield/combinatorics.hpp"
#include "mpfield/errors.hpp"
#include "mpfield/field_sim.hpp"
#include "mpfield/marchenko_pastur.hpp"
#include "mpfield/moments.hpp"
#include "mpfield/volumes.hpp"

namespace mpfield::cli {

namespace {

using json = nlohmann::ordered_json;
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;  // monostate: empty

std::string rational_string(const Rational& value) {
    std::ostringstream out;
    out << value;
    return out.str();
}

json json_number(double value) {
    if (std::isfinite(value)) {
        return value;
    }
    return format_double(value);
}

json json_list(const std::vector<double>& values) {
    json out = json::array();
    for (const double v : values) {
        out.push_back(json_number(v));
    }
    return out;
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) {
        return text;
    }
    std::string quoted = "\"";
    for (const char c : text) {
        if (c == '"') {
            quoted += '"';
        }
        quoted += c;
    }
    return quoted + '"';
}

// A result table plus the run configuration and any summary values.
struct Report {
    json config;
    json summary = json::object();
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    std::string render(const std::string& format) const {
        std::ostringstream out;
        if (format == "json") {
            json doc;
            doc["config"] = config;
            for (const auto& [key, value] : summary.items()) {
                doc[key] = value;
            }
            doc["columns"] = columns;
            json rows_json = json::array();
            for (const auto& row : rows) {
                json r = json::array();
                for (const auto& cell : row) {
                    std::visit(
                        [&r](const auto& v) {
                            using T = std::decay_t<decltype(v)>;
                            if constexpr (std::is_same_v<T, std::monostate>) {
                                r.push_back(nullptr);
                            } else if constexpr (std::is_same_v<T, double>) {
                                r.push_back(json_number(v));
                            } else {
                                r.push_back(v);
                            }
                        },
                        cell);
                }
                rows_json.push_back(std::move(r));
            }
            doc["rows"] = std::move(rows_json);
            out << doc.dump() << '\n';
            return out.str();
        }
        out << "# " << config.dump() << '\n';
        for (const auto& [key, value] : summary.items()) {
            out << "# " << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump())
                << '\n';
        }
        for (std::size_t i = 0; i < columns.size(); ++i) {
            out << (i ? "," : "") << columns[i];
        }
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << (i ? "," : "");
                std::visit(
                    [&out](const auto& v) {
                        using T = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<T, double>) {
                            out << format_double(v);
                        } else if constexpr (std::is_same_v<T, std::string>) {
                            out << csv_field(v);
                        } else if constexpr (std::is_same_v<T, std::int64_t>) {
                            out << v;
                        }
                    },
                    row[i]);
            }
            out << '\n';
        }
        return out.str();
    }
};

struct CommonOptions {
    std::string format = "csv";
    std::string out;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::string max_mem;

    SimLimits limits() const {
        if (!max_mem.empty()) {
            return SimLimits{parse_byte_size(max_mem)};
        }
        return SimLimits::from_env();
    }
};

void add_common(CLI::App* cmd, CommonOptions& common) {
    cmd->add_option("--format", common.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--out", common.out, "Write output to this file instead of stdout");
    cmd->add_option("--threads", common.threads, "Worker threads (does not affect results)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-mem", common.max_mem,
                    std::string("Dense-matrix memory budget, e.g. 512M (overrides ") +
                        kMaxMemoryEnv + ")");
}

std::vector<double> snr_values(const std::string& grid, const std::vector<std::string>& singles) {
    std::vector<double> out;
    if (!grid.empty()) {
        out = parse_snr_grid(grid);
    }
    for (const auto& s : singles) {
        const auto v = parse_snr_grid(s);
        out.insert(out.end(), v.begin(), v.end());
    }
    if (grid.empty() && singles.empty()) {
        out = parse_snr_grid("0:5:30");
    }
    return out;
}

void check_open_beta(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) {
        std::ostringstream msg;
        msg << "beta must lie in (0, 1) for simulation, got " << beta;
        throw ArgumentError(msg.str());
    }
}

// ---------------------------------------------------------------------------

struct MomentsArgs {
    int p = 0;
    std::vector<int> dims{1};
    std::vector<double> betas{0.5};
};

Report cmd_moments(const MomentsArgs& args, const CommonOptions& common) {
    for (const int d : args.dims) {
        if (d < 1) {
            throw ArgumentError("--d values must be >= 1, got " + std::to_string(d));
        }
    }
    for (const double b : args.betas) {
        if (!(b > 0.0 && b <= 1.0)) {
            throw ArgumentError("--beta values must lie in (0, 1], got " + format_double(b));
        }
    }
    MomentOptions options;
    options.threads = common.threads;
    MomentExpansion expansion;
    try {
        expansion = moment_expansion(args.p, options);
    } catch (const CapacityError& e) {
        throw CapacityError("moments --p " + std::to_string(args.p) + ": " + e.what());
    }

    Report report;
    report.config = {{"command", "moments"},
                     {"p", args.p},
                     {"d", args.dims},
                     {"beta", json_list(args.betas)},
                     {"format", common.format}};
    report.summary["symbolic"] = expansion.symbolic();
    if (common.format == "json") {
        json terms = json::array();
        for (const auto& t : expansion.terms) {
            terms.push_back({{"volume", rational_string(t.volume)},
                             {"blocks", t.blocks},
                             {"multiplicity", t.multiplicity}});
        }
        report.summary["terms"] = std::move(terms);
    }
    report.columns = {"p", "d", "beta", "moment", "limit_moment"};
    for (const int d : args.dims) {
        for (const double b : args.betas) {
            report.rows.push_back({std::int64_t{args.p}, std::int64_t{d}, b,
                                   moment_eval(expansion, d, b), moment_limit(args.p, b)});
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

struct VolumeArgs {
    std::string path;
    double tolerance = 1e-5;
};

Report cmd_volume(const VolumeArgs& args, const CommonOptions& common) {
    const auto labels = parse_labels(args.path);
    const PartitionPath path(labels);
    const auto trace = reduction_trace(path);
    const PartitionPath& reduced = trace.back().path;
    const auto volume = volume_exact(reduced);

    Report report;
    report.config = {{"command", "volume"},
                     {"path", labels},
                     {"tol", args.tolerance},
                     {"format", common.format}};
    report.summary["path"] = path.to_string();
    report.summary["reduced"] = reduced.to_string();
    report.summary["volume"] = rational_string(volume.exact);
    report.summary["volume_decimal"] = volume.exact.convert_to<double>();
    report.summary["degree"] = volume.degree;
    const int dims = reduced.blocks() - 1;
    if (reduced.empty()) {
        report.summary["quadrature"] = "not needed (empty path)";
    } else if (dims < 1 || dims > 2) {
        report.summary["quadrature"] =
            "skipped (integral dimension " + std::to_string(dims) + " outside 1..2)";
    } else {
        const double q = volume_quadrature(reduced, args.tolerance);
        report.summary["quadrature"] = q;
        report.summary["quadrature_error"] = std::abs(q - volume.exact.convert_to<double>());
    }
    report.columns = {"step", "path", "rule", "index"};
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& step = trace[i];
        const auto n = static_cast<std::int64_t>(i + 1);
        if (step.rule) {
            report.rows.push_back({n, step.path.to_string(), static_cast<std::int64_t>(*step.rule),
                                   std::int64_t{step.index}});
        } else {
            report.rows.push_back({n, step.path.to_string(), std::monostate{}, std::monostate{}});
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

struct MseArgs {
    std::vector<double> betas{0.1};
    std::vector<int> dims{1};
    int bandwidth = 10;
    std::string snr_grid;
    std::vector<std::string> snr;
    std::size_t trials = 50;
    std::uint64_t seed = 0;
};

Report cmd_mse(const MseArgs& args, const CommonOptions& common) {
    if (args.trials < 1) {
        throw ArgumentError("--trials must be >= 1");
    }
    if (args.bandwidth < 1) {
        throw ArgumentError("--M must be >= 1");
    }
    const auto snrs = snr_values(args.snr_grid, args.snr);
    const SimLimits limits = common.limits();
    // Validate every configuration before simulating any of them.
    for (const int d : args.dims) {
        for (const double b : args.betas) {
            check_open_beta(b);
            const int r = sensors_for_beta(d, args.bandwidth, b);
            check_memory(harmonic_count(d, args.bandwidth), static_cast<std::size_t>(r),
                         common.threads, limits);
        }
    }

    Report report;
    report.config = {{"command", "mse"},
                     {"d", args.dims},
                     {"M", args.bandwidth},
                     {"beta", json_list(args.betas)},
                     {"snr_db", json_list(snrs)},
                     {"trials", args.trials},
                     {"seed", args.seed},
                     {"max_mem", limits.max_bytes},
                     {"format", common.format}};
    report.columns = {"d",   "M", "r", "beta", "snr_db", "mse_mp", "mse_empirical", "stderr",
                      "trials", "seed"};
    double worst = 0.0;
    for (const int d : args.dims) {
        for (const double b : args.betas) {
            SpectrumRequest request;
            request.dimension = d;
            request.bandwidth = args.bandwidth;
            request.beta = b;
            request.trials = args.trials;
            request.seed = args.seed;
            request.threads = common.threads;
            request.limits = limits;
            const auto samples = simulate_spectra(request);
            const double beta = samples.front().beta;
            const int sensors = samples.front().sensors;
            for (const double snr : snrs) {
                const double alpha = snr_db_to_alpha(snr);
                double sum = 0.0;
                std::vector<double> values;
                values.reserve(samples.size());
                for (const auto& s : samples) {
                    values.push_back(empirical_lmmse(s, alpha));
                    sum += values.back();
                }
                const double n = static_cast<double>(values.size());
                const double mean = sum / n;
                double stderr_value = 0.0;
                if (values.size() > 1) {
                    double ss = 0.0;
                    for (const double v : values) {
                        ss += (v - mean) * (v - mean);
                    }
                    stderr_value = std::sqrt(ss / (n - 1.0) / n);
                }
                const double mp = mp_lmmse(beta, alpha);
                worst = std::max(worst, std::abs(mean - mp));
                report.rows.push_back({std::int64_t{d}, std::int64_t{args.bandwidth},
                                       std::int64_t{sensors}, beta, snr, mp, mean, stderr_value,
                                       static_cast<std::int64_t>(args.trials),
                                       static_cast<std::int64_t>(args.seed)});
            }
        }
    }
    report.summary["max_abs_gap"] = worst;
    return report;
}

// ---------------------------------------------------------------------------

struct SpectrumArgs {
    int dimension = 1;
    int bandwidth = 10;
    double beta = 0.5;
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    int bins = 40;
};

Report cmd_spectrum(const SpectrumArgs& args, const CommonOptions& common) {
    if (args.trials < 1) {
        throw ArgumentError("--trials must be >= 1");
    }
    if (args.bins < 1) {
        throw ArgumentError("--bins must be >= 1");
    }
    if (args.bandwidth < 1) {
        throw ArgumentError("--M must be >= 1");
    }
    check_open_beta(args.beta);
    SpectrumRequest request;
    request.dimension = args.dimension;
    request.bandwidth = args.bandwidth;
    request.beta = args.beta;
    request.trials = args.trials;
    request.seed = args.seed;
    request.threads = common.threads;
    request.limits = common.limits();
    const auto samples = simulate_spectra(request);
    const auto params = MPParams::make(samples.front().beta);

    double top = params.upper;
    std::size_t total = 0;
    for (const auto& s : samples) {
        top = std::max(top, s.eigenvalues.back());
        total += s.size();
    }
    const double width = top / args.bins;
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(args.bins), 0);
    for (const auto& s : samples) {
        for (const double v : s.eigenvalues) {
            const auto bin = std::min(static_cast<std::size_t>(v / width), counts.size() - 1);
            ++counts[bin];
        }
    }

    Report report;
    report.config = {{"command", "spectrum"},
                     {"d", args.dimension},
                     {"M", args.bandwidth},
                     {"beta", args.beta},
                     {"trials", args.trials},
                     {"seed", args.seed},
                     {"bins", args.bins},
                     {"max_mem", request.limits.max_bytes},
                     {"format", common.format}};
    report.columns = {"bin", "lower", "upper", "center", "count", "mass", "density", "mp_pdf",
                      "mp_mass"};
    double tv = 0.0;
    for (std::size_t b = 0; b < counts.size(); ++b) {
        const double lower = width * static_cast<double>(b);
        const double upper = b + 1 == counts.size() ? top : width * static_cast<double>(b + 1);
        const double center = 0.5 * (lower + upper);
        const double mass = static_cast<double>(counts[b]) / static_cast<double>(total);
        const double mp_mass = mp_interval_mass(lower, upper, params);
        tv += std::abs(mass - mp_mass);
        report.rows.push_back({static_cast<std::int64_t>(b), lower, upper, center,
                               static_cast<std::int64_t>(counts[b]), mass, mass / (upper - lower),
                               mp_pdf(center, params), mp_mass});
    }
    report.summary["beta_actual"] = params.beta;
    report.summary["sensors"] = samples.front().sensors;
    report.summary["eigenvalues"] = total;
    report.summary["tv_distance"] = 0.5 * tv;
    return report;
}

// ---------------------------------------------------------------------------

struct MpArgs {
    std::vector<double> betas{0.5};
    std::string snr_grid;
    std::vector<std::string> snr;
    int p = -1;
};

Report cmd_mp(const MpArgs& args, const CommonOptions& common) {
    const auto snrs = snr_values(args.snr_grid, args.snr);
    Report report;
    report.config = {{"command", "mp"},
                     {"beta", json_list(args.betas)},
                     {"snr_db", json_list(snrs)},
                     {"format", common.format}};
    report.columns = {"beta", "lower_edge", "upper_edge", "snr_db", "alpha", "mse_mp"};
    if (args.p >= 0) {
        report.config["p"] = args.p;
        report.columns.emplace_back("p");
        report.columns.emplace_back("moment");
    }
    for (const double b : args.betas) {
        const auto params = MPParams::make(b);
        for (const double snr : snrs) {
            const double alpha = snr_db_to_alpha(snr);
            std::vector<Cell> row{b, params.lower, params.upper, snr, alpha, mp_lmmse(b, alpha)};
            if (args.p >= 0) {
                row.emplace_back(std::int64_t{args.p});
                row.emplace_back(mp_moment(args.p, b));
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

void write_output(const std::string& text, const CommonOptions& common, std::ostream& out) {
    if (common.out.empty()) {
        out << text;
        out.flush();
        return;
    }
    std::ofstream file(common.out, std::ios::binary);
    if (!file) {
        throw ArgumentError("cannot open --out file '" + common.out + "'");
    }
    file << text;
    if (!file) {
        throw ArgumentError("failed writing --out file '" + common.out + "'");
    }
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

namespace {

double parse_number(const std::string& text, std::size_t begin, std::size_t end) {
    std::string token = text.substr(begin, end - begin);
    const auto fail = [&] {
        throw ArgumentError("malformed number '" + token + "' at position " +
                            std::to_string(begin + 1) + " in '" + text + "'");
    };
    if (token.empty()) {
        fail();
    }
    std::string lower = token;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "inf" || lower == "+inf") {
        return std::numeric_limits<double>::infinity();
    }
    double value = 0.0;
    const char* first = token.data() + (token.front() == '+' ? 1 : 0);
    const auto result = std::from_chars(first, token.data() + token.size(), value);
    if (result.ec != std::errc{} || result.ptr != token.data() + token.size() || std::isnan(value)) {
        fail();
    }
    return value;
}

}  // namespace

std::vector<double> parse_snr_grid(const std::string& text) {
    if (const auto colon = text.find(':'); colon != std::string::npos) {
        const auto second = text.find(':', colon + 1);
        if (second == std::string::npos || text.find(':', second + 1) != std::string::npos) {
            throw ArgumentError("SNR range must be start:step:stop, got '" + text + "'");
        }
        const double start = parse_number(text, 0, colon);
        const double step = parse_number(text, colon + 1, second);
        const double stop = parse_number(text, second + 1, text.size());
        if (!std::isfinite(start) || !std::isfinite(stop) || !(step > 0.0) || !std::isfinite(step) ||
            stop < start) {
            throw ArgumentError("SNR range needs finite start <= stop and a positive step, got '" +
                                text + "'");
        }
        std::vector<double> out;
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
        if (count > 100000) {
            throw ArgumentError("SNR range has too many points");
        }
        for (std::size_t i = 0; i <= count; ++i) {
            out.push_back(start + static_cast<double>(i) * step);
        }
        return out;
    }
    std::vector<double> out;
    std::size_t begin = 0;
    while (true) {
        const auto comma = text.find(',', begin);
        const auto end = comma == std::string::npos ? text.size() : comma;
        out.push_back(parse_number(text, begin, end));
        if (comma == std::string::npos) {
            break;
        }
        begin = comma + 1;
    }
    return out;
}

std::vector<int> parse_labels(const std::string& text) {
    std::vector<int> out;
    if (text.empty() || text == "[]") {
        return out;
    }
    std::string body = text;
    std::size_t offset = 0;
    if (body.front() == '[' && body.back() == ']') {
        body = body.substr(1, body.size() - 2);
        offset = 1;
    }
    std::size_t begin = 0;
    while (true) {
        const auto comma = body.find(',', begin);
        const auto end = comma == std::string::npos ? body.size() : comma;
        const std::string token = body.substr(begin, end - begin);
        int value = 0;
        const auto result = std::from_chars(token.data(), token.data() + token.size(), value);
        if (token.empty() || result.ec != std::errc{} || result.ptr != token.data() + token.size()) {
            throw ArgumentError("malformed label '" + token + "' at position " +
                                std::to_string(offset + begin + 1) + " in '" + text + "'");
        }
        out.push_back(value);
        if (comma == std::string::npos) {
            break;
        }
        begin = comma + 1;
    }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sampling-matrix moments, Marchenko-Pastur limits and LMMSE simulation"};
    app.name("mpfield");
    app.require_subcommand(1);

    CommonOptions common;

    MomentsArgs moments;
    auto* moments_cmd = app.add_subcommand("moments", "Exact moment expansion E[lambda^p]");
    moments_cmd->add_option("--p", moments.p, "Moment order")->required()->check(CLI::PositiveNumber);
    moments_cmd->add_option("--d", moments.dims, "Field dimensions")->delimiter(',')->capture_default_str();
    moments_cmd->add_option("--beta", moments.betas, "Ratios N/r in (0, 1]")->delimiter(',')->capture_default_str();
    add_common(moments_cmd, common);

    VolumeArgs volume;
    auto* volume_cmd = app.add_subcommand("volume", "Reduction trace and exact volume of a partition path");
    volume_cmd->add_option("path", volume.path, "Restricted-growth labels, e.g. 1,2,1,2")->required();
    volume_cmd->add_option("--tol", volume.tolerance, "Quadrature tolerance")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    add_common(volume_cmd, common);

    MseArgs mse;
    auto* mse_cmd = app.add_subcommand("mse", "Simulated LMMSE versus the Marchenko-Pastur prediction");
    mse_cmd->add_option("--beta", mse.betas, "Ratios N/r in (0, 1)")->delimiter(',')->capture_default_str();
    mse_cmd->add_option("--d", mse.dims, "Field dimensions")->delimiter(',')->capture_default_str();
    mse_cmd->add_option("--M", mse.bandwidth, "Bandwidth per dimension")->capture_default_str();
    mse_cmd->add_option("--snr-grid", mse.snr_grid, "SNR in dB: start:step:stop or a comma list (default 0:5:30)");
    mse_cmd->add_option("--snr", mse.snr, "Extra SNR value in dB ('inf' allowed)");
    mse_cmd->add_option("--trials", mse.trials, "Sampling sets per configuration")->capture_default_str();
    mse_cmd->add_option("--seed", mse.seed, "Base seed")->capture_default_str();
    add_common(mse_cmd, common);

    SpectrumArgs spectrum;
    auto* spectrum_cmd = app.add_subcommand("spectrum", "Pooled eigenvalue histogram with the limiting density");
    spectrum_cmd->add_option("--d", spectrum.dimension, "Field dimension")->capture_default_str();
    spectrum_cmd->add_option("--M", spectrum.bandwidth, "Bandwidth per dimension")->capture_default_str();
    spectrum_cmd->add_option("--beta", spectrum.beta, "Ratio N/r in (0, 1)")->capture_default_str();
    spectrum_cmd->add_option("--trials", spectrum.trials, "Sampling sets")->capture_default_str();
    spectrum_cmd->add_option("--seed", spectrum.seed, "Base seed")->capture_default_str();
    spectrum_cmd->add_option("--bins", spectrum.bins, "Histogram bins")->capture_default_str();
    add_common(spectrum_cmd, common);

    MpArgs mp;
    auto* mp_cmd = app.add_subcommand("mp", "Closed-form Marchenko-Pastur quantities");
    mp_cmd->add_option("--beta", mp.betas, "Ratios in (0, 1]")->delimiter(',')->capture_default_str();
    mp_cmd->add_option("--snr-grid", mp.snr_grid, "SNR in dB: start:step:stop or a comma list (default 0:5:30)");
    mp_cmd->add_option("--snr", mp.snr, "Extra SNR value in dB ('inf' allowed)");
    mp_cmd->add_option("--p", mp.p, "Also report the moment of this order")->check(CLI::NonNegativeNumber);
    add_common(mp_cmd, common);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kArgument;
    }

    try {
        Report report;
        if (*moments_cmd) {
            report = cmd_moments(moments, common);
        } else if (*volume_cmd) {
            report = cmd_volume(volume, common);
        } else if (*mse_cmd) {
            report = cmd_mse(mse, common);
        } else if (*spectrum_cmd) {
            report = cmd_spectrum(spectrum, common);
        } else {
            report = cmd_mp(mp, common);
        }
        write_output(report.render(common.format), common, out);
        return kOk;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return kArgument;
    } catch (const CapacityError& e) {
        err << "capacity error: " << e.what() << '\n';
        return kCapacity;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

}  // namespace mpfield::cli
