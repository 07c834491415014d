#pragma once

#include <map>
#include <set>

#include "mixmeter/tally.hpp"

namespace mixmeter {

// Maximum sampling error of the measurement rate over t_total observed
// packets; infinity when t_total = 0 (never flag without traffic).
double fr_sampling_error(double t_total, double p_lot, double z);

struct EdgeDetection {
    bool flagged = false;
    double f_injected = 0;  // traffic injected by the predecessor itself
    double f_total = 0;     // injected + disclaimed forwarded excess
    double epsilon = 0;
    double s_hat = 0;
};

// Deficit test on one incoming edge. h_hat_disclaimed is the excess traffic
// the predecessor already attributed to its own flagged predecessors.
EdgeDetection detect_edge(double t_total, double s_hat, double h_hat_disclaimed, double p_lot,
                          double z);

struct FreeRideReport {
    NodeId node = 0;
    bool all_clear = true;
    // per incoming edge
    std::map<NodeId, EdgeDetection> incoming;
    std::vector<NodeId> flagged_predecessors;
    // per outgoing edge: excess unwittingly forwarded (broadcast next stage)
    std::map<NodeId, double> h_hat;
};

// h_hat_(i,j) = sum over flagged predecessors g of max(0, t(g,i,j) - s_hat(g,i,j)).
std::map<NodeId, double> forwarded_excess(const TripleCounters& counters,
                                          const std::vector<NodeId>& flagged_preds,
                                          double p_lot);

struct SweepInputs {
    const TallyMap* tallies = nullptr;    // s_star (opened, received) and t_total per edge
    const TripleMap* triples = nullptr;   // per-node (pred,succ) counters
};

// Layer-ordered detection: layer-1 nodes check gateways, then each layer
// checks its predecessors with the previously broadcast h_hat discounts.
std::vector<FreeRideReport> layer_sweep(const SweepInputs& in, const Topology& topo,
                                        double p_lot, double z);

struct BiasTestResult {
    NodeId predecessor = 0;
    double chi2 = 0;
    std::uint64_t df = 0;
    double critical = 0;
    bool biased = false;
};

// Goodness-of-fit of one predecessor's per-successor counters against the
// uniform routing policy. Throws std::invalid_argument when all counters are
// zero (DegenerateCounters).
BiasTestResult chi_square_bias(const std::vector<std::uint64_t>& counters, double significance);

struct BlocklistConfig {
    double successor_fraction = 0.5;  // flags needed within an epoch
    std::uint32_t epochs_required = 2;
    std::uint32_t peer_limit = 8;     // blocklisting more peers expels the blocker
};

class Blocklist {
public:
    explicit Blocklist(BlocklistConfig cfg = {}) : cfg_(cfg) {}

    void update(const std::vector<FreeRideReport>& reports, const Topology& topo,
                std::uint32_t epoch);

    const std::set<std::uint64_t>& burned_edges() const { return burned_; }
    const std::set<NodeId>& expelled() const { return expelled_; }
    bool edge_burned(NodeId src, NodeId dst) const {
        return burned_.contains(edge_key(src, dst));
    }

private:
    BlocklistConfig cfg_;
    std::set<std::uint64_t> burned_;
    std::set<NodeId> expelled_;
    std::map<NodeId, std::set<std::uint32_t>> epochs_over_threshold_;
    std::map<NodeId, std::set<NodeId>> blocks_made_;
};

}  // namespace mixmeter
