#pragma once

#include <set>

#include "mixmeter/tally.hpp"

namespace mixmeter {

enum class IntervalMethod { WALD, CLOPPER_PEARSON, LAPLACE };

struct LinkEstimate {
    double rho_hat = 1.0;
    double epsilon = 1.0;
    IntervalMethod method = IntervalMethod::WALD;
    std::uint64_t samples = 0;
};

// rho_hat = s*/(s*+d*). Error bound: Wald at confidence z; Laplace rule of
// succession when the estimate sits at 0 or 1; exact Clopper-Pearson interval
// on request. Zero samples: no evidence, rho_hat = 1 with epsilon = 1.
LinkEstimate link_estimate(std::uint64_t s_star, std::uint64_t d_star, double z,
                           IntervalMethod method = IntervalMethod::WALD);

// Smallest value whose cumulative weight reaches half the total; ties take the
// lower value. Throws std::invalid_argument on empty input.
double weighted_median(std::vector<std::pair<double, double>> value_weight);

enum class BetaScheme { NAIVE, SYMMETRIC, THRESHOLD };

// Share of an edge's drops attributed to the receiving node.
double assign_beta(BetaScheme scheme, double median_out_pred, double median_in_succ,
                   double tau_bar, std::uint64_t in_samples_succ);

struct NodeScore {
    NodeId node = 0;
    double rho_raw = 1.0;   // can exceed 1 under pathological tallies
    double rho_hat = 1.0;   // clamped to [0,1]
    double median_in = 1.0;
    double median_out = 1.0;
    bool reliable_in = true;
    bool reliable_out = true;
};

struct ScoreConfig {
    BetaScheme scheme = BetaScheme::THRESHOLD;
    double tau_bar = 0.99;
    // Burned edges enter scoring as average-volume all-drop links, blame 1/2.
    std::set<std::uint64_t> burned_edges;
};

std::vector<NodeScore> node_scores(const TallyMap& tallies, const Topology& topo,
                                   const ScoreConfig& cfg);

}  // namespace mixmeter
