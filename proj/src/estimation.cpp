#include "mixmeter/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "mixmeter/stats.hpp"

namespace mixmeter {
namespace {

// Clopper-Pearson bound via bisection on the regularized Beta CDF.
double beta_quantile_bisect(double a, double b, double target) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 100 && hi - lo > 1e-9; ++i) {
        double mid = 0.5 * (lo + hi);
        (stats::reg_inc_beta(a, b, mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

LinkEstimate clopper_pearson(std::uint64_t s, std::uint64_t d, double z) {
    const std::uint64_t n = s + d;
    const double alpha = 1.0 - stats::z_to_confidence(z);
    const double rho = double(s) / double(n);
    double lo = s == 0 ? 0.0 : beta_quantile_bisect(double(s), double(d + 1), alpha / 2.0);
    double hi = d == 0 ? 1.0 : beta_quantile_bisect(double(s + 1), double(d), 1.0 - alpha / 2.0);
    LinkEstimate est;
    est.rho_hat = rho;
    est.epsilon = std::min(1.0, std::max(rho - lo, hi - rho));
    est.method = IntervalMethod::CLOPPER_PEARSON;
    est.samples = n;
    return est;
}

}  // namespace

LinkEstimate link_estimate(std::uint64_t s_star, std::uint64_t d_star, double z,
                           IntervalMethod method) {
    LinkEstimate est;
    est.method = method;
    est.samples = s_star + d_star;
    if (est.samples == 0) {
        est.rho_hat = 1.0;  // undefined-as-1: no evidence either way
        est.epsilon = 1.0;
        return est;
    }
    if (method == IntervalMethod::CLOPPER_PEARSON) return clopper_pearson(s_star, d_star, z);

    const double n = double(est.samples);
    est.rho_hat = double(s_star) / n;
    if (s_star == 0 || d_star == 0) {
        est.epsilon = 1.0 / (n + 2.0);  // rule of succession
        est.method = IntervalMethod::LAPLACE;
    } else {
        est.epsilon = std::min(1.0, z * std::sqrt(est.rho_hat * (1.0 - est.rho_hat) / n));
    }
    return est;
}

double weighted_median(std::vector<std::pair<double, double>> value_weight) {
    if (value_weight.empty()) throw std::invalid_argument("weighted_median: empty input");
    std::sort(value_weight.begin(), value_weight.end());
    double total = 0;
    for (const auto& [v, w] : value_weight) {
        if (w <= 0) throw std::invalid_argument("weighted_median: weights must be positive");
        total += w;
    }
    double cum = 0;
    for (const auto& [v, w] : value_weight) {
        cum += w;
        if (cum >= total / 2.0) return v;
    }
    return value_weight.back().first;
}

double assign_beta(BetaScheme scheme, double median_out_pred, double median_in_succ,
                   double tau_bar, std::uint64_t in_samples_succ) {
    switch (scheme) {
        case BetaScheme::NAIVE: return 1.0;
        case BetaScheme::SYMMETRIC: return 0.5;
        case BetaScheme::THRESHOLD: break;
    }
    if (in_samples_succ == 0) return 1.0;  // nothing in the successor's commitment
    const bool succ_ok = median_in_succ >= tau_bar;
    const bool pred_ok = median_out_pred >= tau_bar;
    if (!succ_ok && pred_ok) return 1.0;
    if (succ_ok && !pred_ok) return 0.0;
    return 0.5;
}

std::vector<NodeScore> node_scores(const TallyMap& tallies, const Topology& topo,
                                   const ScoreConfig& cfg) {
    const std::uint32_t n_nodes = topo.node_count();

    auto tally_of = [&](NodeId a, NodeId b) -> const EdgeTally* {
        auto it = tallies.find(edge_key(a, b));
        return it == tallies.end() ? nullptr : &it->second;
    };

    // Total in-samples per node (the zero-commitment rule) and gateway
    // measurement shares for the weighted medians.
    std::vector<std::uint64_t> in_samples(n_nodes, 0);
    std::vector<double> gw_sent(topo.gateway_count(), 0), gw_recv(topo.gateway_count(), 0);
    for (const auto& [key, t] : tallies) {
        NodeId src = edge_src(key), dst = edge_dst(key);
        in_samples[dst] += t.s_star;
        if (topo.is_gateway(src)) gw_sent[src] += double(t.s_star);
        if (topo.is_gateway(dst)) gw_recv[dst] += double(t.s_star);
    }
    double gw_sent_total = 0, gw_recv_total = 0;
    for (double x : gw_sent) gw_sent_total += x;
    for (double x : gw_recv) gw_recv_total += x;

    auto node_weight = [&](NodeId id, bool sending) {
        if (!topo.is_gateway(id)) return 1.0;
        if (sending)
            return gw_sent_total > 0 ? gw_sent[id] / gw_sent_total : 1.0 / topo.gateway_count();
        return gw_recv_total > 0 ? gw_recv[id] / gw_recv_total : 1.0 / topo.gateway_count();
    };

    auto edge_rho = [&](NodeId a, NodeId b) {
        const EdgeTally* t = tally_of(a, b);
        return link_estimate(t ? t->s_star : 0, t ? t->d_star : 0, 1.0).rho_hat;
    };

    // Zero-weight counterparties (gateways with no measurement traffic that
    // epoch) contribute nothing to the medians.
    auto median_of = [](std::vector<std::pair<double, double>> set) {
        std::erase_if(set, [](const auto& vw) { return vw.second <= 0.0; });
        return set.empty() ? 1.0 : weighted_median(std::move(set));
    };

    std::vector<NodeScore> scores(n_nodes);
    for (NodeId j = 0; j < n_nodes; ++j) {
        auto& sc = scores[j];
        sc.node = j;
        std::vector<std::pair<double, double>> in_set, out_set;
        for (NodeId i : topo.predecessors(j))
            in_set.emplace_back(edge_rho(i, j), node_weight(i, true));
        for (NodeId k : topo.successors(j))
            out_set.emplace_back(edge_rho(j, k), node_weight(k, false));
        sc.median_in = median_of(std::move(in_set));
        sc.median_out = median_of(std::move(out_set));
        sc.reliable_in = sc.median_in >= cfg.tau_bar;
        sc.reliable_out = sc.median_out >= cfg.tau_bar;
    }

    // Average per-edge sample volume, for burned-edge bookkeeping.
    double avg_volume = 0;
    if (!cfg.burned_edges.empty()) {
        std::uint64_t total = 0, edges = 0;
        for (const auto& [key, t] : tallies) {
            total += t.s_star + t.d_star;
            ++edges;
        }
        avg_volume = edges ? double(total) / double(edges) : 0.0;
    }

    for (NodeId j = 0; j < n_nodes; ++j) {
        auto& sc = scores[j];
        double num = 0, den = 0;
        for (NodeId k : topo.successors(j)) {
            if (cfg.burned_edges.contains(edge_key(j, k))) {
                num += 0.5 * avg_volume;  // all-drop, blame split
                continue;
            }
            const EdgeTally* t = tally_of(j, k);
            if (!t) continue;
            double beta = assign_beta(cfg.scheme, scores[j].median_out, scores[k].median_in,
                                      cfg.tau_bar, in_samples[k]);
            num += double(t->s_star) + beta * double(t->d_star);
        }
        for (NodeId i : topo.predecessors(j)) {
            if (cfg.burned_edges.contains(edge_key(i, j))) {
                den += 0.5 * avg_volume;
                continue;
            }
            const EdgeTally* t = tally_of(i, j);
            if (!t) continue;
            double beta = assign_beta(cfg.scheme, scores[i].median_out, scores[j].median_in,
                                      cfg.tau_bar, in_samples[j]);
            den += double(t->s_star) + beta * double(t->d_star);
        }
        sc.rho_raw = den > 0 ? num / den : 0.0;
        sc.rho_hat = std::clamp(sc.rho_raw, 0.0, 1.0);
    }
    return scores;
}

}  // namespace mixmeter
