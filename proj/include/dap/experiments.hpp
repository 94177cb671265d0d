#pragma once
//
// Desk-scale studies: error accumulation of the block Cholesky
// factorization, the transmission loss ratio on the simulated cluster, and
// a correctness suite.  Reports render as text tables or JSON records.
//

#include "dap/kernels.hpp"
#include "dap/runtime.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dap::exp {

// ---------------------------------------------------------------------------
// error accumulation

struct ErrorStudyRow {
    std::size_t size = 0;
    int trials = 0; // trials that produced a factor
    int failed = 0; // trials where the factorization broke down
    // log10 of the mean and of the max over trials of max|L' - L|;
    // -inf when every error was exactly zero
    double log10_mean = 0;
    double log10_max = 0;

    friend bool operator==(const ErrorStudyRow&, const ErrorStudyRow&) = default;
};

struct ErrorStudyReport {
    ScalarMode mode;
    int trials = 0;
    std::uint64_t seed = 0;
    std::size_t leaf_size = 8;
    std::vector<ErrorStudyRow> rows;

    friend bool operator==(const ErrorStudyReport&, const ErrorStudyReport&) = default;
};

// L has integer entries in [1,9] on and below the diagonal; trial t at size
// n uses the same L in every mode
BlockMatrix error_study_factor(std::uint64_t seed, std::size_t n, int trial, const ScalarMode& mode);

// max |L' - L| of one trial as log10 (-inf for an exact factor); throws
// what the factorization throws
double trial_log10_error(std::uint64_t seed, std::size_t n, int trial, const ScalarMode& mode, std::size_t leaf_size);

ErrorStudyReport run_error_study(const ScalarMode& mode, const std::vector<std::size_t>& sizes, int trials,
    std::uint64_t seed, std::size_t leaf_size = 8);

// smallest digit count, on a grid of `step`, for which every trial's error
// stays below 1; 0 if none up to max_digits
int min_digits_for(std::size_t size, int trials, std::uint64_t seed, int step = 10, int max_digits = 2000,
    std::size_t leaf_size = 8);

// ---------------------------------------------------------------------------
// transmission loss ratio

enum class TlrAlgorithm { Cholesky, Multiply, Inverse };

const char* to_string(TlrAlgorithm a);
TlrAlgorithm parse_tlr_algorithm(std::string_view text);

struct TlrOptions {
    TlrAlgorithm algorithm = TlrAlgorithm::Cholesky;
    std::size_t base_size = 64;
    std::size_t base_cores = 1;
    int steps = 2; // doublings of the size; cores grow 8x per doubling
    double density = 1.0;
    ScalarMode mode = ScalarMode::double_precision();
    std::size_t leaf_size = 16;
    std::uint64_t seed = 1;
    net::LatencyModel latency;
    rt::CostModel cost;
};

struct TlrPoint {
    std::size_t cores = 0;
    std::size_t size = 0;
    double time = 0; // simulated microseconds
    std::uint64_t ops = 0;
    std::uint64_t drops_sent = 0;

    friend bool operator==(const TlrPoint&, const TlrPoint&) = default;
};

struct TlrReport {
    TlrAlgorithm algorithm = TlrAlgorithm::Cholesky;
    double density = 1.0;
    ScalarMode mode;
    std::size_t leaf_size = 16;
    std::uint64_t seed = 0;
    std::string time_unit = "simulated-us";
    std::vector<TlrPoint> series;
    std::vector<double> k; // T2/T1 per step
    std::vector<double> tlr; // cube root of k

    friend bool operator==(const TlrReport&, const TlrReport&) = default;
};

// job inputs for one point of the series
rt::JobHandle tlr_job(TlrAlgorithm algorithm, std::size_t size, double density, const ScalarMode& mode,
    std::uint64_t seed);

// symmetric, strictly diagonally dominant, off-diagonal density `density`
BlockMatrix random_dominant_spd(std::uint64_t seed, std::size_t n, double density, const ScalarMode& mode);

TlrReport run_tlr_study(const TlrOptions& options);

// ---------------------------------------------------------------------------
// correctness suite

struct GoldenCheck {
    std::string name;
    bool passed = false;
    std::string detail;

    friend bool operator==(const GoldenCheck&, const GoldenCheck&) = default;
};

struct GoldenReport {
    std::vector<GoldenCheck> checks;
    bool ok() const;

    friend bool operator==(const GoldenReport&, const GoldenReport&) = default;
};

GoldenReport run_golden_suite();

// the 4x4 worked example
BlockMatrix golden_a();
BlockMatrix golden_l();
BlockMatrix golden_l_inv();

// exact inverse of a lower-triangular matrix by column-wise forward
// substitution; independent of the block kernels
BlockMatrix forward_substitution_inverse(const BlockMatrix& lower);

// ---------------------------------------------------------------------------
// reports

enum class ReportFormat { TableText, Json };

ReportFormat parse_report_format(std::string_view text);

// one M row and one cp row per mode; decimal and rational rows hold log10
std::string render_table(const std::vector<ErrorStudyReport>& reports);
std::string render_table(const TlrReport& report);
std::string render_table(const GoldenReport& report);

std::string to_json(const std::vector<ErrorStudyReport>& reports);
std::string to_json(const TlrReport& report);
std::string to_json(const GoldenReport& report);

std::vector<ErrorStudyReport> parse_error_reports(std::string_view json);
TlrReport parse_tlr_report(std::string_view json);
GoldenReport parse_golden_report(std::string_view json);

// writes `text` to `path`, "-" is stdout; IoError on failure
void write_output(const std::string& path, const std::string& text);

template <class Report>
std::string render(const Report& report, ReportFormat format)
{
    return format == ReportFormat::Json ? to_json(report) : render_table(report);
}

template <class Report>
void emit_report(const Report& report, ReportFormat format, const std::string& path)
{
    write_output(path, render(report, format));
}

} // namespace dap::exp
