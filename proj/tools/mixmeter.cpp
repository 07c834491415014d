#include <atomic>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

#include "mixmeter/experiments.hpp"

namespace {

using namespace mixmeter;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitAnalysisFail = 1;
constexpr int kExitUsage = 2;

std::string sha256_hex(const std::string& text) {
    Hash256 h = hash_derive(label::stream, ByteView(
        reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    return to_hex({h.data(), h.size()});
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

struct SimulateArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::optional<std::string> mode;
    std::uint32_t reps = 1;
    bool force = false;
};

int cmd_simulate(const SimulateArgs& args) {
    sim::SimConfig cfg = sim::config_from_json(read_file(args.config_path));
    if (args.seed) cfg.seed = *args.seed;
    if (args.mode) cfg.crypto_mode = group_kind_from_name(*args.mode);

    std::filesystem::path out(args.out_dir);
    if (std::filesystem::exists(out) && !std::filesystem::is_empty(out) && !args.force) {
        std::cerr << "error: output directory " << out << " is not empty (use --force)\n";
        return kExitUsage;
    }
    std::filesystem::create_directories(out);

    json cfg_json = json::parse(sim::config_to_json(cfg));

    std::atomic<std::uint32_t> next{0};
    std::vector<json> rep_manifests(args.reps);
    unsigned workers = std::min<unsigned>(
        args.reps, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::uint32_t rep; (rep = next.fetch_add(1)) < args.reps;) {
                sim::SimConfig run_cfg = cfg;
                run_cfg.seed = cfg.seed + rep;
                sim::SimResult sim_res = sim::run_epoch(run_cfg);
                sim::AnalysisConfig acfg;
                sim::EpochAnalysis analysis = sim::analyze_epoch(sim_res, acfg);

                auto dir = out / ("rep" + std::to_string(rep));
                std::filesystem::create_directories(dir);
                csv::write_link_tally(dir / "link_tally.csv", rep, analysis.tallies);
                csv::write_link_estimates(dir / "link_estimates.csv", rep, analysis.tallies,
                                          2.576, IntervalMethod::WALD);
                csv::write_node_scores(dir / "node_scores.csv", rep, analysis.scores);
                csv::write_freeride(dir / "freeride.csv", rep, analysis.freeride);
                csv::write_ground_truth_edges(dir / "ground_truth_edges.csv", rep,
                                              sim_res.truth);
                csv::write_ground_truth_nodes(dir / "ground_truth_nodes.csv", rep,
                                              sim_res.truth, analysis.scores);
                save_transcript(sim_res.transcript, dir / "transcript");

                rep_manifests[rep] = {
                    {"rep", rep},
                    {"seed", run_cfg.seed},
                    {"packets", sim_res.truth.total_packets},
                    {"measurements", sim_res.truth.total_measurements},
                    {"verified_openings", analysis.post.verified_openings},
                    {"replay_checked", sim_res.replay_checked},
                };
            }
        });
    for (auto& th : pool) th.join();

    json manifest = {
        {"schema", 1},
        {"config", cfg_json},
        {"config_hash", sha256_hex(cfg_json.dump())},
        {"base_seed", cfg.seed},
        {"reps", args.reps},
        {"runs", rep_manifests},
    };
    std::ofstream mf(out / "manifest.json", std::ios::trunc);
    mf << manifest.dump(2) << "\n";
    std::cout << "wrote " << args.reps << " repetition(s) under " << out << "\n";
    return kExitOk;
}

int cmd_reproduce(const std::string& figure, std::uint64_t seed, std::uint32_t reps,
                  const std::optional<std::string>& out_dir) {
    std::optional<std::filesystem::path> out;
    if (out_dir) out = *out_dir;

    auto pf = [](bool ok) { return ok ? "PASS" : "FAIL"; };

    if (figure == "fig-reliability" || figure == "reliability") {
        auto res = experiments::run_fig_reliability(seed, reps ? reps : 3, out);
        std::cout << "measurements,median_abs_err_reliable,iqr_unreliable\n";
        for (const auto& pt : res.points)
            std::cout << pt.target_measurements << ',' << pt.median_abs_error_reliable << ','
                      << pt.iqr_unreliable << "\n";
        std::cout << pf(res.pass_reliable_median)
                  << " reliable-node median |error| < 0.005 at >= 100k measurements\n";
        std::cout << pf(res.pass_iqr_shrinkage)
                  << " unreliable-node error IQR shrinks on >= 3 of 4 doublings\n";
        return res.pass() ? kExitOk : kExitAnalysisFail;
    }
    if (figure == "fig-adversarial" || figure == "adversarial") {
        auto res = experiments::run_fig_adversarial(seed, out);
        std::cout << "a,t,c_a,c_t\n";
        for (const auto& r : res.runs)
            std::cout << r.a << ',' << r.t << ',' << r.c_a << ',' << r.c_t << "\n";
        std::cout << pf(res.pass) << " cost ratio within [1/2, 2] whenever c_a > 0.05\n";
        return res.pass ? kExitOk : kExitAnalysisFail;
    }
    if (figure == "fig-freeride" || figure == "freeride") {
        auto res = experiments::run_fig_freeride(seed, reps ? reps : 1, out);
        std::cout << "measurements: " << res.measurements << "\n";
        std::cout << "flag fraction at 20% injection: " << res.flag_fraction_20 << "\n";
        std::cout << "flag fraction at 5% injection:  " << res.flag_fraction_5 << "\n";
        std::cout << "honest false-positive rate:     " << res.false_positive_rate << "\n";
        std::cout << pf(res.flag_fraction_20 >= 0.90) << " 20% injection flagged by >= 90%\n";
        std::cout << pf(res.flag_fraction_5 <= 0.30) << " 5% injection flagged by <= 30%\n";
        std::cout << pf(res.false_positive_rate <= 0.01) << " false-positive rate <= 1%\n";
        return res.pass() ? kExitOk : kExitAnalysisFail;
    }
    std::cerr << "error: unknown figure id '" << figure
              << "' (expected fig-reliability | fig-adversarial | fig-freeride)\n";
    return kExitUsage;
}

int cmd_overhead(const experiments::OverheadParams& params) {
    auto rows = experiments::compute_overhead(params);
    std::cout << std::left << std::setw(28) << "item" << std::setw(12) << "per_item"
              << std::setw(12) << "amount" << "total\n";
    for (const auto& r : rows)
        std::cout << std::left << std::setw(28) << r.item << std::setw(12) << r.per_item
                  << std::setw(12) << r.amount << r.total << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixnet reliability estimation: simulator and analysis harness"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "run epochs from a JSON config");
    sim_cmd->add_option("--config", sim_args.config_path, "config file (schema 1)")
        ->required();
    std::uint64_t seed_opt = 0;
    bool seed_set = false;
    sim_cmd->add_option("--seed", seed_opt, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    sim_cmd->add_option("--out", sim_args.out_dir, "output directory");
    std::string mode;
    sim_cmd->add_option("--mode", mode, "crypto mode: real|lite|testgroup");
    sim_cmd->add_option("--reps", sim_args.reps, "number of repetitions");
    sim_cmd->add_flag("--force", sim_args.force, "overwrite a non-empty output directory");

    std::string figure;
    std::uint64_t rep_seed = 42;
    std::uint32_t rep_reps = 0;
    std::optional<std::string> rep_out;
    std::string rep_out_str;
    auto* rep_cmd = app.add_subcommand("reproduce", "run a desk-scale experiment suite");
    rep_cmd->add_option("figure", figure, "fig-reliability | fig-adversarial | fig-freeride")
        ->required();
    rep_cmd->add_option("--seed", rep_seed, "base seed");
    rep_cmd->add_option("--reps", rep_reps, "repetitions (suite default when omitted)");
    rep_cmd->add_option("--out", rep_out_str, "directory for CSV outputs");

    experiments::OverheadParams ov;
    auto* ov_cmd = app.add_subcommand("overhead", "per-epoch storage overhead table");
    ov_cmd->add_option("--measurements", ov.measurements, "opened measurements per epoch");
    ov_cmd->add_option("--opening-bytes", ov.opening_bytes, "bytes per opening");
    ov_cmd->add_option("--mix-nodes", ov.mix_nodes, "number of mix nodes");
    ov_cmd->add_option("--mix-filter-mb", ov.mix_filter_mb, "MB per mix-node filter");
    ov_cmd->add_option("--gateways", ov.gateways, "number of gateways");
    ov_cmd->add_option("--gateway-filter-kb", ov.gateway_filter_kb, "KB per gateway filter");
    ov_cmd->add_option("--no-skip-proofs", ov.no_skip_proofs, "no-skipping openings");
    ov_cmd->add_option("--no-skip-bytes", ov.no_skip_bytes, "bytes per no-skipping proof");
    ov_cmd->add_option("--scored-nodes", ov.scored_nodes, "nodes with published scores");
    ov_cmd->add_option("--score-bytes", ov.score_bytes, "bytes per score");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim_cmd->parsed()) {
            if (seed_set) sim_args.seed = seed_opt;
            if (!mode.empty()) sim_args.mode = mode;
            return cmd_simulate(sim_args);
        }
        if (rep_cmd->parsed()) {
            if (!rep_out_str.empty()) rep_out = rep_out_str;
            return cmd_reproduce(figure, rep_seed, rep_reps, rep_out);
        }
        if (ov_cmd->parsed()) return cmd_overhead(ov);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
