#include "mixmeter/csv.hpp"

#include <map>

namespace mixmeter::csv {
namespace {

std::ofstream open_out(const std::filesystem::path& file) {
    std::ofstream f(file, std::ios::trunc);
    if (!f) throw std::runtime_error("csv: cannot open " + file.string());
    f.setf(std::ios::fmtflags(0), std::ios::floatfield);
    f.precision(9);
    return f;
}

const char* method_name(IntervalMethod m) {
    switch (m) {
        case IntervalMethod::WALD: return "wald";
        case IntervalMethod::CLOPPER_PEARSON: return "clopper_pearson";
        case IntervalMethod::LAPLACE: return "laplace";
    }
    return "wald";
}

// Deterministic row order regardless of hash-map iteration.
template <typename Map>
std::map<std::uint64_t, typename Map::mapped_type> sorted(const Map& m) {
    return {m.begin(), m.end()};
}

}  // namespace

void write_link_tally(const std::filesystem::path& file, std::uint32_t epoch,
                      const TallyMap& tallies) {
    auto f = open_out(file);
    f << "epoch,src,dst,s_star,d_star,discarded,t_total\n";
    for (const auto& [key, t] : sorted(tallies))
        f << epoch << ',' << edge_src(key) << ',' << edge_dst(key) << ',' << t.s_star << ','
          << t.d_star << ',' << t.discarded << ',' << t.t_total << '\n';
}

void write_link_estimates(const std::filesystem::path& file, std::uint32_t epoch,
                          const TallyMap& tallies, double z, IntervalMethod method) {
    auto f = open_out(file);
    f << "epoch,src,dst,rho_hat,epsilon,method,samples\n";
    for (const auto& [key, t] : sorted(tallies)) {
        LinkEstimate est = link_estimate(t.s_star, t.d_star, z, method);
        f << epoch << ',' << edge_src(key) << ',' << edge_dst(key) << ',' << est.rho_hat << ','
          << est.epsilon << ',' << method_name(est.method) << ',' << est.samples << '\n';
    }
}

void write_node_scores(const std::filesystem::path& file, std::uint32_t epoch,
                       const std::vector<NodeScore>& scores) {
    auto f = open_out(file);
    f << "epoch,node,rho_hat,rho_raw,median_in,median_out,label_in,label_out\n";
    for (const NodeScore& s : scores)
        f << epoch << ',' << s.node << ',' << s.rho_hat << ',' << s.rho_raw << ','
          << s.median_in << ',' << s.median_out << ','
          << (s.reliable_in ? "reliable" : "unreliable") << ','
          << (s.reliable_out ? "reliable" : "unreliable") << '\n';
}

void write_freeride(const std::filesystem::path& file, std::uint32_t epoch,
                    const std::vector<FreeRideReport>& reports) {
    auto f = open_out(file);
    f << "epoch,node,pred,flag,f_hat_injected,f_hat_total,h_hat_out\n";
    for (const FreeRideReport& rep : reports) {
        for (const auto& [pred, det] : rep.incoming)
            f << epoch << ',' << rep.node << ',' << pred << ',' << (det.flagged ? 1 : 0) << ','
              << det.f_injected << ',' << det.f_total << ",\n";
        for (const auto& [succ, h] : rep.h_hat)
            f << epoch << ',' << rep.node << ',' << succ << ",,,," << h << '\n';
    }
}

void write_bias(const std::filesystem::path& file, std::uint32_t epoch,
                const std::vector<std::pair<NodeId, BiasTestResult>>& bias) {
    auto f = open_out(file);
    f << "epoch,node,predecessor,chi2,df,critical,verdict\n";
    for (const auto& [node, b] : bias)
        f << epoch << ',' << node << ',' << b.predecessor << ',' << b.chi2 << ',' << b.df << ','
          << b.critical << ',' << (b.biased ? "BIASED" : "UNBIASED") << '\n';
}

void write_ground_truth_edges(const std::filesystem::path& file, std::uint32_t epoch,
                              const sim::GroundTruth& truth) {
    auto f = open_out(file);
    f << "epoch,src,dst,s,d,d_in,d_out,rho,beta\n";
    for (const auto& [key, e] : sorted(truth.edges)) {
        double rho = (e.s + e.d()) ? double(e.s) / double(e.s + e.d()) : 1.0;
        f << epoch << ',' << edge_src(key) << ',' << edge_dst(key) << ',' << e.s << ','
          << e.d() << ',' << e.d_in << ',' << e.d_out << ',' << rho << ',' << e.beta() << '\n';
    }
}

void write_ground_truth_nodes(const std::filesystem::path& file, std::uint32_t epoch,
                              const sim::GroundTruth& truth,
                              const std::vector<NodeScore>& scores) {
    auto f = open_out(file);
    f << "epoch,node,true_rho,rho_hat,error,injected\n";
    for (std::size_t i = 0; i < truth.true_rho.size(); ++i) {
        double est = i < scores.size() ? scores[i].rho_hat : 0.0;
        f << epoch << ',' << i << ',' << truth.true_rho[i] << ',' << est << ','
          << est - truth.true_rho[i] << ',' << truth.injected_by_node[i] << '\n';
    }
}

void write_costs(const std::filesystem::path& file,
                 const std::vector<std::tuple<std::uint32_t, double, double>>& rows) {
    auto f = open_out(file);
    f << "rep,c_a,c_t\n";
    for (const auto& [rep, ca, ct] : rows) f << rep << ',' << ca << ',' << ct << '\n';
}

}  // namespace mixmeter::csv
