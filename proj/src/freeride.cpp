#include "mixmeter/freeride.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixmeter/stats.hpp"

namespace mixmeter {

double fr_sampling_error(double t_total, double p_lot, double z) {
    if (t_total <= 0) return std::numeric_limits<double>::infinity();
    return z * std::sqrt(p_lot * (1.0 - p_lot) / t_total);
}

EdgeDetection detect_edge(double t_total, double s_hat, double h_hat_disclaimed, double p_lot,
                          double z) {
    EdgeDetection det;
    det.s_hat = s_hat;
    const double t_eff = t_total - h_hat_disclaimed;
    det.epsilon = fr_sampling_error(t_eff, p_lot, z);
    if (!std::isfinite(det.epsilon)) {
        det.f_total = std::max(0.0, h_hat_disclaimed);
        return det;
    }
    det.flagged = s_hat < t_eff * (1.0 - det.epsilon / p_lot);
    if (det.flagged) det.f_injected = std::max(0.0, t_total - s_hat - h_hat_disclaimed);
    det.f_total = det.f_injected + std::max(0.0, h_hat_disclaimed);
    return det;
}

std::map<NodeId, double> forwarded_excess(const TripleCounters& counters,
                                          const std::vector<NodeId>& flagged_preds,
                                          double p_lot) {
    std::map<NodeId, double> h_hat;
    for (NodeId g : flagged_preds) {
        for (const auto& [key, total] : counters.totals) {
            if (edge_src(key) != g) continue;
            NodeId succ = edge_dst(key);
            auto it = counters.opened_measurements.find(key);
            double opened = it == counters.opened_measurements.end() ? 0.0 : double(it->second);
            double excess = double(total) - opened / p_lot;
            if (excess > 0) h_hat[succ] += excess;
        }
    }
    return h_hat;
}

std::vector<FreeRideReport> layer_sweep(const SweepInputs& in, const Topology& topo,
                                        double p_lot, double z) {
    const TallyMap& tallies = *in.tallies;
    std::vector<FreeRideReport> reports;
    reports.reserve(topo.mix_node_count());

    // h_hat broadcast by the previous stage, keyed by (pred, node).
    std::map<std::uint64_t, double> disclaimed;

    for (std::uint32_t layer = 1; layer <= topo.layers(); ++layer) {
        std::map<std::uint64_t, double> next_disclaimed;
        for (std::uint32_t idx = 0; idx < topo.width(); ++idx) {
            NodeId node = topo.mix_node(layer, idx);
            FreeRideReport rep;
            rep.node = node;
            for (NodeId pred : topo.predecessors(node)) {
                auto it = tallies.find(edge_key(pred, node));
                double t_total = it == tallies.end() ? 0.0 : double(it->second.t_total);
                double s_hat =
                    it == tallies.end() ? 0.0 : double(it->second.s_star) / p_lot;
                auto dit = disclaimed.find(edge_key(pred, node));
                double h = dit == disclaimed.end() ? 0.0 : dit->second;
                EdgeDetection det = detect_edge(t_total, s_hat, h, p_lot, z);
                if (det.flagged) {
                    rep.all_clear = false;
                    rep.flagged_predecessors.push_back(pred);
                }
                rep.incoming.emplace(pred, det);
            }
            // Excess traffic to disclaim onward: from predecessors this node
            // flagged, plus predecessors whose own disclaimed forwarding
            // explained their excess (the traffic still flows through here).
            std::vector<NodeId> contributing = rep.flagged_predecessors;
            for (NodeId pred : topo.predecessors(node)) {
                auto dit = disclaimed.find(edge_key(pred, node));
                if (dit != disclaimed.end() && dit->second > 0 &&
                    std::find(contributing.begin(), contributing.end(), pred) ==
                        contributing.end())
                    contributing.push_back(pred);
            }
            if (in.triples && !contributing.empty()) {
                auto tit = in.triples->find(node);
                if (tit != in.triples->end()) {
                    rep.h_hat = forwarded_excess(tit->second, contributing, p_lot);
                    for (const auto& [succ, h] : rep.h_hat)
                        next_disclaimed[edge_key(node, succ)] += h;
                }
            }
            reports.push_back(std::move(rep));
        }
        disclaimed = std::move(next_disclaimed);
    }
    return reports;
}

BiasTestResult chi_square_bias(const std::vector<std::uint64_t>& counters, double significance) {
    if (counters.empty()) throw std::invalid_argument("chi_square_bias: no successors");
    std::uint64_t total = 0;
    for (auto c : counters) total += c;
    if (total == 0) throw std::invalid_argument("chi_square_bias: degenerate counters");
    const double mean = double(total) / double(counters.size());
    BiasTestResult res;
    for (auto c : counters) {
        double d = double(c) - mean;
        res.chi2 += d * d / mean;
    }
    res.df = counters.size() - 1;
    res.critical = stats::chi2_critical(double(res.df), significance);
    res.biased = res.chi2 > res.critical;
    return res;
}

void Blocklist::update(const std::vector<FreeRideReport>& reports, const Topology& topo,
                       std::uint32_t epoch) {
    std::map<NodeId, std::uint32_t> flags;
    for (const FreeRideReport& rep : reports) {
        for (NodeId pred : rep.flagged_predecessors) {
            burned_.insert(edge_key(pred, rep.node));
            blocks_made_[rep.node].insert(pred);
            ++flags[pred];
        }
    }
    for (const auto& [node, count] : flags) {
        std::size_t successors = topo.successors(node).size();
        if (successors && double(count) >= cfg_.successor_fraction * double(successors)) {
            auto& epochs = epochs_over_threshold_[node];
            epochs.insert(epoch);
            if (epochs.size() >= cfg_.epochs_required) expelled_.insert(node);
        }
    }
    for (const auto& [blocker, blocked] : blocks_made_)
        if (blocked.size() > cfg_.peer_limit) expelled_.insert(blocker);
}

}  // namespace mixmeter
