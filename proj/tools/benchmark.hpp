#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "funcause/pipeline.hpp"
#include "funcause/simgen.hpp"

namespace funcause {

struct BenchmarkConfig {
    ScenarioConfig scenario;          ///< n and seed are overwritten per replicate
    std::vector<EstimatorKind> estimators{EstimatorKind::Ipw, EstimatorKind::OperatorKernel};
    std::vector<std::size_t> sizes{50, 100, 250};
    std::size_t replicates = 5;
    std::uint64_t seed = 0;
    EstimateOptions options;

    /// Throws DomainError on empty lists, zero replicates or invalid scenario settings.
    void validate() const;
};

/// One estimator run on one simulated dataset.
struct BenchmarkRecord {
    std::string estimator;
    std::size_t n = 0;
    std::size_t replicate = 0;
    std::uint64_t data_seed = 0;
    double mae = 0.0;
    double time_std = 0.0;      ///< population std over the grid of |error(t)|
    double seconds = 0.0;
    Eigen::VectorXd abs_error;  ///< |error(t)|
};

/// Aggregate over replicates for one estimator and sample size.
struct BenchmarkRow {
    std::string estimator;
    std::size_t n = 0;
    std::size_t replicates = 0;
    double mae_mean = 0.0;
    double mae_sd = 0.0;        ///< sample std of the replicate MAEs
    double time_std = 0.0;      ///< std over the grid of the replicate-averaged |error(t)|
};

struct PerTError {
    std::string estimator;
    std::size_t n = 0;
    double t = 0.0;
    double abs_error = 0.0;     ///< replicate-averaged
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;        ///< estimator-major within each size
    std::vector<BenchmarkRecord> records;  ///< size, replicate, estimator order
    std::vector<PerTError> per_t;
    std::map<std::string, std::string> metadata;
};

/// Seed of the dataset for (size, replicate); shared by all estimators.
std::uint64_t replicate_seed(std::uint64_t seed, std::size_t n, std::size_t replicate);

/// Replicates run in parallel; every output except `seconds` is deterministic.
BenchmarkReport run_benchmark(const BenchmarkConfig& cfg);

void write_summary_csv(const BenchmarkReport& report, std::ostream& out);
void write_records_csv(const BenchmarkReport& report, std::ostream& out);
void write_per_t_csv(const BenchmarkReport& report, std::ostream& out);
void write_timing_csv(const BenchmarkReport& report, std::ostream& out);

/// Readers for the CSVs above; they throw SchemaError on malformed input.
std::vector<BenchmarkRow> read_summary_csv(std::istream& in);
std::vector<BenchmarkRecord> read_records_csv(std::istream& in);
std::vector<PerTError> read_per_t_csv(std::istream& in);

/// Per-t mean error lines, one panel per sample size.
void write_per_t_svg(const BenchmarkReport& report, std::ostream& out);
/// Box plots of replicate MAEs, one panel per sample size.
void write_boxplot_svg(const BenchmarkReport& report, std::ostream& out);

}  // namespace funcause
