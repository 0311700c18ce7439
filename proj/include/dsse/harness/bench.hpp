#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dsse::harness {

struct BenchConfig {
    std::uint64_t seed = 7;
    /// Background PHI files ingested before the probes.
    std::uint64_t n_files = 2'000;
    /// Independent new/recurring probe pairs; each adds `search_ids` files.
    std::uint32_t repetitions = 5;
    std::uint64_t search_ids = 100;
    /// Result sizes for the verification sweep.
    std::vector<std::uint64_t> verify_sizes{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
    /// 0: a filter sized for one year of uploads.
    std::uint64_t bloom_capacity = 0;
};

struct BenchRow {
    std::string name;
    double measured = 0;
    std::string unit;
    std::optional<double> reference;  // published reference figure, same unit
    std::string note;
};

struct VerifyPoint {
    std::uint64_t size = 0;
    double bloom_ms = 0;
    double aggregate_ms = 0;
    double total_ms = 0;
};

struct BenchReport {
    BenchConfig config;
    std::vector<BenchRow> rows;
    std::vector<VerifyPoint> verify;
    double verify_slope_ms = 0;      // per file
    double verify_intercept_ms = 0;
    double verify_r2 = 0;
    double new_search_ms = 0;
    double recurring_search_ms = 0;
    std::uint32_t new_lookups = 0;
    std::uint32_t recurring_lookups = 0;

    /// Recurring search no slower than new search, verify time affine (R^2 >= 0.9).
    bool laws_hold() const { return recurring_search_ms <= new_search_ms && verify_r2 >= 0.9; }
};

BenchReport run_bench(const BenchConfig& config);

struct LinearFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

void print_bench(std::ostream& out, const BenchReport& report);
void write_bench_records(std::ostream& out, const BenchReport& report);

}  // namespace dsse::harness
