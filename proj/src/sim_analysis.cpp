#include "mixmeter/sim/analysis.hpp"

namespace mixmeter::sim {

EpochAnalysis analyze_epoch(const SimResult& sim, const AnalysisConfig& cfg) {
    EpochAnalysis out;
    const Group& grp = group_instance(sim.crypto_mode);
    out.post = run_post_epoch(grp, sim.transcript, sim.topo);
    out.tallies = out.post.tallies;
    merge_receiver_totals(out.tallies, sim.receiver_totals);

    ScoreConfig score_cfg;
    score_cfg.scheme = cfg.scheme;
    score_cfg.tau_bar = cfg.tau_bar;
    score_cfg.burned_edges = cfg.burned_edges;
    out.scores = node_scores(out.tallies, sim.topo, score_cfg);

    if (cfg.run_freeride) {
        TripleMap merged = sim.triples;
        merge_triples(merged, out.post.triples);
        SweepInputs inputs;
        inputs.tallies = &out.tallies;
        inputs.triples = &merged;
        out.freeride = layer_sweep(inputs, sim.topo, sim.transcript.p_lot, cfg.z);
    }

    if (cfg.run_bias_tests) {
        for (std::uint32_t idx = 0; idx < sim.topo.width(); ++idx) {
            NodeId node = sim.topo.mix_node(1, idx);
            auto tit = sim.triples.find(node);
            if (tit == sim.triples.end()) continue;
            for (NodeId g = 0; g < sim.topo.gateway_count(); ++g) {
                std::vector<std::uint64_t> counters;
                std::uint64_t total = 0;
                for (NodeId succ : sim.topo.successors(node)) {
                    auto cit = tit->second.totals.find(edge_key(g, succ));
                    std::uint64_t c = cit == tit->second.totals.end() ? 0 : cit->second;
                    counters.push_back(c);
                    total += c;
                }
                if (total == 0) continue;
                auto res = chi_square_bias(counters, cfg.chi2_significance);
                res.predecessor = g;
                out.bias.emplace_back(node, res);
            }
        }
    }
    return out;
}

}  // namespace mixmeter::sim
