#include "benchmark.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "funcause/parallel.hpp"
#include "funcause/random.hpp"

namespace funcause {

namespace {

double population_std(const Eigen::VectorXd& v) {
    return std::sqrt((v.array() - v.mean()).square().mean());
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

/// Reads a header-checked CSV and hands each row's cells to `parse`.
template <typename F>
void read_csv(std::istream& in, const std::vector<std::string>& header, F parse) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(0, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_row(line) != header) throw SchemaError(0, "unexpected header '" + line + "'");
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_row(line);
        if (cells.size() != header.size()) throw SchemaError(row, "expected " + std::to_string(header.size()) + " fields");
        try {
            parse(cells);
        } catch (const std::logic_error&) {
            throw SchemaError(row, "malformed number");
        }
    }
}

double to_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
}

std::uint64_t to_unsigned(const std::string& s) {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
    return v;
}

// Minimal SVG layout shared by both plots.
constexpr double kPanelW = 420, kPanelH = 260, kMargin = 50;
constexpr std::array<const char*, 8> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::vector<std::string> estimator_names(const BenchmarkReport& r) {
    std::vector<std::string> names;
    for (const auto& row : r.rows)
        if (std::find(names.begin(), names.end(), row.estimator) == names.end()) names.push_back(row.estimator);
    return names;
}

std::vector<std::size_t> sizes_of(const BenchmarkReport& r) {
    std::vector<std::size_t> sizes;
    for (const auto& row : r.rows)
        if (std::find(sizes.begin(), sizes.end(), row.n) == sizes.end()) sizes.push_back(row.n);
    return sizes;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void svg_open(std::ostream& out, double width, double height) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void svg_axes(std::ostream& out, double x0, double y0, const std::string& title, double ymax) {
    out << "<text x=\"" << num(x0 + kPanelW / 2) << "\" y=\"" << num(y0 - 8) << "\" text-anchor=\"middle\">" << title
        << "</text>\n";
    out << "<polyline fill=\"none\" stroke=\"black\" points=\"" << num(x0) << ',' << num(y0) << ' ' << num(x0) << ','
        << num(y0 + kPanelH) << ' ' << num(x0 + kPanelW) << ',' << num(y0 + kPanelH) << "\"/>\n";
    out << "<text x=\"" << num(x0 - 4) << "\" y=\"" << num(y0 + 4) << "\" text-anchor=\"end\">" << num(ymax)
        << "</text>\n";
    out << "<text x=\"" << num(x0 - 4) << "\" y=\"" << num(y0 + kPanelH) << "\" text-anchor=\"end\">0</text>\n";
}

void svg_legend(std::ostream& out, const std::vector<std::string>& names, double x, double y) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double yy = y + 16.0 * static_cast<double>(i);
        out << "<rect x=\"" << num(x) << "\" y=\"" << num(yy - 9) << "\" width=\"10\" height=\"10\" fill=\""
            << kColors[i % kColors.size()] << "\"/>\n";
        out << "<text x=\"" << num(x + 14) << "\" y=\"" << num(yy) << "\">" << names[i] << "</text>\n";
    }
}

double quantile_sorted(const std::vector<double>& v, double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

void BenchmarkConfig::validate() const {
    if (estimators.empty()) throw DomainError("benchmark needs at least one estimator");
    if (sizes.empty()) throw DomainError("benchmark needs at least one sample size");
    if (replicates < 1) throw DomainError("replicates must be at least 1");
    for (std::size_t n : sizes) {
        ScenarioConfig s = scenario;
        s.n = n;
        s.validate();
    }
    if (scenario.scenario == Scenario::ContinuousFunctional)
        for (EstimatorKind k : estimators)
            if (!supports_continuous(k))
                throw DomainError(std::string(to_string(k)) + " cannot run on the continuous scenario");
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t n, std::size_t replicate) {
    Rng rng(seed, (static_cast<std::uint64_t>(n) << 24) ^ replicate);
    return rng.next();
}

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg) {
    cfg.validate();
    const std::size_t ne = cfg.estimators.size(), nr = cfg.replicates;
    std::vector<BenchmarkRecord> records(cfg.sizes.size() * nr * ne);
    parallel_for(cfg.sizes.size() * nr, [&](std::size_t job) {
        const std::size_t si = job / nr, rep = job % nr;
        ScenarioConfig sc = cfg.scenario;
        sc.n = cfg.sizes[si];
        sc.seed = replicate_seed(cfg.seed, sc.n, rep);
        const Simulation sim = generate(sc);
        for (std::size_t e = 0; e < ne; ++e) {
            const auto start = std::chrono::steady_clock::now();
            const EffectEstimate est = estimate(sim.data, cfg.estimators[e], cfg.options);
            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            const EffectError err = effect_error(est.effect, sim.truth);
            BenchmarkRecord& rec = records[job * ne + e];
            rec.estimator = est.estimator;
            rec.n = sc.n;
            rec.replicate = rep;
            rec.data_seed = sc.seed;
            rec.mae = err.mae;
            rec.time_std = population_std(err.per_t.values());
            rec.seconds = seconds;
            rec.abs_error = err.per_t.values();
        }
    });

    BenchmarkReport report;
    const Grid grid = Grid::uniform(cfg.scenario.T);
    for (std::size_t si = 0; si < cfg.sizes.size(); ++si) {
        for (std::size_t e = 0; e < ne; ++e) {
            BenchmarkRow row;
            row.estimator = std::string(to_string(cfg.estimators[e]));
            row.n = cfg.sizes[si];
            row.replicates = nr;
            Eigen::VectorXd mean_err = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
            std::vector<double> maes;
            for (std::size_t rep = 0; rep < nr; ++rep) {
                const BenchmarkRecord& rec = records[(si * nr + rep) * ne + e];
                maes.push_back(rec.mae);
                mean_err += rec.abs_error;
            }
            mean_err /= static_cast<double>(nr);
            double sum = 0.0;
            for (double m : maes) sum += m;
            row.mae_mean = sum / static_cast<double>(nr);
            double ss = 0.0;
            for (double m : maes) ss += (m - row.mae_mean) * (m - row.mae_mean);
            row.mae_sd = nr > 1 ? std::sqrt(ss / static_cast<double>(nr - 1)) : 0.0;
            row.time_std = population_std(mean_err);
            for (std::size_t k = 0; k < grid.size(); ++k)
                report.per_t.push_back({row.estimator, row.n, grid[k], mean_err[static_cast<Eigen::Index>(k)]});
            report.rows.push_back(std::move(row));
        }
    }
    report.records = std::move(records);
    report.metadata["scenario"] = std::string(to_string(cfg.scenario.scenario));
    report.metadata["seed"] = std::to_string(cfg.seed);
    report.metadata["T"] = std::to_string(cfg.scenario.T);
    report.metadata["replicates"] = std::to_string(cfg.replicates);
    return report;
}

void write_summary_csv(const BenchmarkReport& report, std::ostream& out) {
    out << "estimator,n,replicates,mae_mean,mae_sd,time_std\n";
    for (const auto& r : report.rows)
        out << r.estimator << ',' << r.n << ',' << r.replicates << ',' << format_double(r.mae_mean) << ','
            << format_double(r.mae_sd) << ',' << format_double(r.time_std) << '\n';
}

void write_records_csv(const BenchmarkReport& report, std::ostream& out) {
    out << "estimator,n,replicate,seed,mae,time_std\n";
    for (const auto& r : report.records)
        out << r.estimator << ',' << r.n << ',' << r.replicate << ',' << r.data_seed << ',' << format_double(r.mae)
            << ',' << format_double(r.time_std) << '\n';
}

void write_per_t_csv(const BenchmarkReport& report, std::ostream& out) {
    out << "estimator,n,t,abs_error\n";
    for (const auto& p : report.per_t)
        out << p.estimator << ',' << p.n << ',' << format_double(p.t) << ',' << format_double(p.abs_error) << '\n';
}

void write_timing_csv(const BenchmarkReport& report, std::ostream& out) {
    out << "estimator,n,replicate,seconds\n";
    for (const auto& r : report.records)
        out << r.estimator << ',' << r.n << ',' << r.replicate << ',' << format_double(r.seconds) << '\n';
}

std::vector<BenchmarkRow> read_summary_csv(std::istream& in) {
    std::vector<BenchmarkRow> rows;
    read_csv(in, {"estimator", "n", "replicates", "mae_mean", "mae_sd", "time_std"}, [&](const auto& c) {
        rows.push_back({c[0], to_unsigned(c[1]), to_unsigned(c[2]), to_double(c[3]), to_double(c[4]), to_double(c[5])});
    });
    return rows;
}

std::vector<BenchmarkRecord> read_records_csv(std::istream& in) {
    std::vector<BenchmarkRecord> rows;
    read_csv(in, {"estimator", "n", "replicate", "seed", "mae", "time_std"}, [&](const auto& c) {
        BenchmarkRecord r;
        r.estimator = c[0];
        r.n = to_unsigned(c[1]);
        r.replicate = to_unsigned(c[2]);
        r.data_seed = to_unsigned(c[3]);
        r.mae = to_double(c[4]);
        r.time_std = to_double(c[5]);
        rows.push_back(std::move(r));
    });
    return rows;
}

std::vector<PerTError> read_per_t_csv(std::istream& in) {
    std::vector<PerTError> rows;
    read_csv(in, {"estimator", "n", "t", "abs_error"}, [&](const auto& c) {
        rows.push_back({c[0], to_unsigned(c[1]), to_double(c[2]), to_double(c[3])});
    });
    return rows;
}

void write_per_t_svg(const BenchmarkReport& report, std::ostream& out) {
    const auto names = estimator_names(report);
    const auto sizes = sizes_of(report);
    const double height = static_cast<double>(sizes.size()) * (kPanelH + 2 * kMargin);
    svg_open(out, kPanelW + 3 * kMargin + 140, height);
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        const double x0 = 1.5 * kMargin, y0 = kMargin + static_cast<double>(si) * (kPanelH + 2 * kMargin);
        double ymax = 0.0;
        for (const auto& p : report.per_t)
            if (p.n == sizes[si]) ymax = std::max(ymax, p.abs_error);
        if (ymax <= 0.0) ymax = 1.0;
        svg_axes(out, x0, y0, "n = " + std::to_string(sizes[si]) + ": mean |error(t)|", ymax);
        for (std::size_t e = 0; e < names.size(); ++e) {
            out << "<polyline fill=\"none\" stroke=\"" << kColors[e % kColors.size()] << "\" points=\"";
            for (const auto& p : report.per_t)
                if (p.n == sizes[si] && p.estimator == names[e])
                    out << num(x0 + p.t * kPanelW) << ',' << num(y0 + kPanelH * (1.0 - p.abs_error / ymax)) << ' ';
            out << "\"/>\n";
        }
        svg_legend(out, names, x0 + kPanelW + 20, y0 + 10);
    }
    out << "</svg>\n";
}

void write_boxplot_svg(const BenchmarkReport& report, std::ostream& out) {
    const auto names = estimator_names(report);
    const auto sizes = sizes_of(report);
    const double height = static_cast<double>(sizes.size()) * (kPanelH + 2 * kMargin);
    svg_open(out, kPanelW + 3 * kMargin + 140, height);
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        const double x0 = 1.5 * kMargin, y0 = kMargin + static_cast<double>(si) * (kPanelH + 2 * kMargin);
        double ymax = 0.0;
        for (const auto& r : report.records)
            if (r.n == sizes[si]) ymax = std::max(ymax, r.mae);
        if (ymax <= 0.0) ymax = 1.0;
        svg_axes(out, x0, y0, "n = " + std::to_string(sizes[si]) + ": MAE", ymax);
        const double slot = kPanelW / static_cast<double>(names.size());
        const auto y = [&](double v) { return num(y0 + kPanelH * (1.0 - v / ymax)); };
        for (std::size_t e = 0; e < names.size(); ++e) {
            std::vector<double> v;
            for (const auto& r : report.records)
                if (r.n == sizes[si] && r.estimator == names[e]) v.push_back(r.mae);
            if (v.empty()) continue;
            std::sort(v.begin(), v.end());
            const double q1 = quantile_sorted(v, 0.25), med = quantile_sorted(v, 0.5), q3 = quantile_sorted(v, 0.75);
            const double cx = x0 + slot * (static_cast<double>(e) + 0.5), half = slot * 0.3;
            const char* color = kColors[e % kColors.size()];
            out << "<line x1=\"" << num(cx) << "\" x2=\"" << num(cx) << "\" y1=\"" << y(v.front()) << "\" y2=\""
                << y(v.back()) << "\" stroke=\"" << color << "\"/>\n";
            out << "<rect x=\"" << num(cx - half) << "\" y=\"" << y(q3) << "\" width=\"" << num(2 * half)
                << "\" height=\"" << num(kPanelH * (q3 - q1) / ymax) << "\" fill=\"white\" stroke=\"" << color
                << "\"/>\n";
            out << "<line x1=\"" << num(cx - half) << "\" x2=\"" << num(cx + half) << "\" y1=\"" << y(med)
                << "\" y2=\"" << y(med) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        }
        svg_legend(out, names, x0 + kPanelW + 20, y0 + 10);
    }
    out << "</svg>\n";
}

}  // namespace funcause
