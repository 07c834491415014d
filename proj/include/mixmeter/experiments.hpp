#pragma once

#include <filesystem>
#include <optional>

#include "mixmeter/csv.hpp"

namespace mixmeter::experiments {

// Desk-scale reproduction suites. Thresholds are pinned here and shared by the
// `reproduce` CLI command and the acceptance test binary.

struct ReliabilityPoint {
    std::uint64_t target_measurements = 0;
    std::uint64_t actual_measurements = 0;
    double median_abs_error_reliable = 0;
    double iqr_unreliable = 0;
    double median_error_unreliable = 0;
};

struct ReliabilityResult {
    std::vector<ReliabilityPoint> points;  // ordered by measurement count
    bool pass_reliable_median = false;     // median |err| < 0.005 from 100k up
    bool pass_iqr_shrinkage = false;       // IQR falls on >= 3 of 4 doublings
    bool pass() const { return pass_reliable_median && pass_iqr_shrinkage; }
};

ReliabilityResult run_fig_reliability(std::uint64_t seed, std::uint32_t reps,
                                      const std::optional<std::filesystem::path>& out_dir);

struct AdversarialRun {
    std::uint32_t a = 0, t = 0;
    double c_a = 0, c_t = 0;
    bool within_band = true;  // 1/2 <= c_t/c_a <= 2 whenever c_a > 0.05
};

struct AdversarialResult {
    std::vector<AdversarialRun> runs;
    bool pass = false;
};

AdversarialResult run_fig_adversarial(std::uint64_t seed,
                                      const std::optional<std::filesystem::path>& out_dir);

struct FreerideResult {
    double flag_fraction_20 = 0;  // mean fraction of successors flagging a 20% injector
    double flag_fraction_5 = 0;
    double false_positive_rate = 0;
    std::uint64_t measurements = 0;
    bool pass() const {
        return flag_fraction_20 >= 0.90 && flag_fraction_5 <= 0.30 &&
               false_positive_rate <= 0.01;
    }
};

FreerideResult run_fig_freeride(std::uint64_t seed, std::uint32_t reps,
                                const std::optional<std::filesystem::path>& out_dir);

struct OverheadParams {
    std::uint64_t measurements = 1'000'000;
    std::uint64_t opening_bytes = 388;
    std::uint64_t mix_nodes = 240;
    double mix_filter_mb = 3.5;
    std::uint64_t gateways = 80;
    double gateway_filter_kb = 300;
    std::uint64_t no_skip_proofs = 1'000'000;
    std::uint64_t no_skip_bytes = 132;
    std::uint64_t scored_nodes = 320;
    std::uint64_t score_bytes = 2;
};

struct OverheadRow {
    std::string item;
    std::string per_item;
    std::uint64_t amount;
    std::string total;
    double total_bytes;
};

// Decimal units (1 MB = 1e6 B), matching the reported table.
std::vector<OverheadRow> compute_overhead(const OverheadParams& p);

}  // namespace mixmeter::experiments
