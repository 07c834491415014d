#pragma once

#include "mixmeter/freeride.hpp"
#include "mixmeter/sim/scenarios.hpp"

namespace mixmeter::sim {

struct AnalysisConfig {
    BetaScheme scheme = BetaScheme::THRESHOLD;
    double tau_bar = 0.99;
    double z = 2.576;                  // 99% confidence
    double chi2_significance = 0.01;
    IntervalMethod interval = IntervalMethod::WALD;
    std::set<std::uint64_t> burned_edges;
    bool run_freeride = true;
    bool run_bias_tests = false;
};

struct EpochAnalysis {
    PostEpochResult post;
    TallyMap tallies;  // with receiver totals merged
    std::vector<NodeScore> scores;
    std::vector<FreeRideReport> freeride;
    // (node, predecessor) -> bias test outcome, per first-layer counters
    std::vector<std::pair<NodeId, BiasTestResult>> bias;
};

// Full post-epoch pipeline over the simulator's outputs. Tallies and scores
// come from broadcast data only; receiver totals feed the free-riding stage.
EpochAnalysis analyze_epoch(const SimResult& sim, const AnalysisConfig& cfg);

}  // namespace mixmeter::sim
