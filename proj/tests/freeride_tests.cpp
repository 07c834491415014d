#include "doctest.h"

#include <cmath>

#include "mixmeter/freeride.hpp"
#include "mixmeter/stats.hpp"
#include "support.hpp"

using namespace mixmeter;

TEST_CASE("sampling error follows the binomial formula") {
    double eps = fr_sampling_error(1e6, 0.01, 2.576);
    CHECK(eps == doctest::Approx(2.5631e-4).epsilon(1e-3));
    CHECK(fr_sampling_error(1e6, 0.01, 0.0) == doctest::Approx(0.0));
    CHECK(std::isinf(fr_sampling_error(0, 0.01, 2.576)));
    // monotone decreasing in t
    testsupport::Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        double t1 = 1 + double(rng.below(1'000'000));
        double t2 = t1 + 1 + double(rng.below(1'000'000));
        CHECK(fr_sampling_error(t1, 0.01, 2.576) > fr_sampling_error(t2, 0.01, 2.576));
    }
}

TEST_CASE("honest edge with expected measurement rate is not flagged") {
    const double t = 1e6;
    EdgeDetection det = detect_edge(t, t, 0.0, 0.01, 2.576);
    CHECK_FALSE(det.flagged);
    CHECK(det.f_injected == doctest::Approx(0.0));
    CHECK(det.f_total == doctest::Approx(0.0));
    // zero traffic: never flag
    EdgeDetection idle = detect_edge(0, 0, 0, 0.01, 2.576);
    CHECK_FALSE(idle.flagged);
}

namespace {

// Exact flag probability for detect_edge under binomial measurement sampling:
// s_hat = Binomial(legit, p) / p, flag iff s_hat < t_eff (1 - eps/p).
double flag_prob_oracle(std::uint64_t legit, std::uint64_t injected, double p, double z) {
    double t_eff = double(legit + injected);
    double eps = z * std::sqrt(p * (1 - p) / t_eff);
    double threshold = p * t_eff * (1.0 - eps / p);  // flag iff B < threshold
    std::int64_t k = std::int64_t(std::ceil(threshold)) - 1;
    return testsupport::binom_cdf_oracle(k, legit, p);
}

double flag_rate_mc(std::uint64_t legit, std::uint64_t injected, double p, double z, int reps,
                    std::uint64_t seed) {
    testsupport::Rng rng(seed);
    int flagged = 0;
    for (int i = 0; i < reps; ++i) {
        double s_hat = double(testsupport::binom_sample(rng, legit, p)) / p;
        if (detect_edge(double(legit + injected), s_hat, 0.0, p, z).flagged) ++flagged;
    }
    return double(flagged) / reps;
}

}  // namespace

TEST_CASE("detect_edge flag rate matches the exact binomial oracle within 0.02") {
    struct Case {
        std::uint64_t legit, injected;
    };
    const double p = 0.05, z = 2.576;
    for (const Case& c : {Case{20000, 0}, Case{20000, 1200}, Case{20000, 2400}}) {
        double oracle = flag_prob_oracle(c.legit, c.injected, p, z);
        double mc = flag_rate_mc(c.legit, c.injected, p, z, 10000, 31 + c.injected);
        CAPTURE(c.injected);
        CHECK(std::abs(mc - oracle) <= 0.02);
    }
}

TEST_CASE("20% excess on a million-packet link is flagged almost surely") {
    double oracle = flag_prob_oracle(1'000'000, 200'000, 0.01, 2.576);
    CHECK(oracle >= 0.999);
    CHECK(flag_rate_mc(1'000'000, 200'000, 0.01, 2.576, 1000, 77) >= 0.99);
}

TEST_CASE("half-threshold excess sits in the boundary regime") {
    // t = legit * (1 + 0.5 eps/p): flag probability strictly between the tails
    const std::uint64_t legit = 1'000'000;
    const double p = 0.01, z = 2.576;
    double eps_over_p = z * std::sqrt((1 - p) / (p * double(legit)));
    auto injected = std::uint64_t(double(legit) * 0.5 * eps_over_p);
    double oracle = flag_prob_oracle(legit, injected, p, z);
    CHECK(oracle > 0.001);
    CHECK(oracle < 0.999);
}

TEST_CASE("forwarded excess splits injected traffic by destination") {
    TripleCounters counters;
    const double p = 0.01;
    // predecessor 7 sends 50k legit (500 opened measurements) plus 10k injected
    // to successor 100, and clean 50k to successor 101
    counters.totals[edge_key(7, 100)] = 60'000;
    counters.opened_measurements[edge_key(7, 100)] = 500;
    counters.totals[edge_key(7, 101)] = 50'000;
    counters.opened_measurements[edge_key(7, 101)] = 500;
    // unflagged predecessor 8 contributes nothing
    counters.totals[edge_key(8, 100)] = 50'000;
    counters.opened_measurements[edge_key(8, 100)] = 500;

    auto none = forwarded_excess(counters, {}, p);
    CHECK(none.empty());

    auto h = forwarded_excess(counters, {7}, p);
    CHECK(h[100] == doctest::Approx(10'000));
    CHECK(h.count(101) == 0);  // clamped at zero, nothing reported

    // uniform split across both successors
    counters.totals[edge_key(7, 100)] = 55'000;
    counters.totals[edge_key(7, 101)] = 55'000;
    auto spread = forwarded_excess(counters, {7}, p);
    CHECK(spread[100] + spread[101] == doctest::Approx(10'000));
}

namespace {

// Synthetic three-layer sweep: gateway 0 injects 30k packets through
// layer-1 node a, split evenly toward layer-2 nodes c and d. Zero sampling
// noise: opened measurements are exactly p_lot * legit.
struct SweepFixture {
    Topology topo{3, 2, 2};
    TallyMap tallies;
    TripleMap triples;
    double p_lot = 0.01;
    NodeId a, b, c, d;

    SweepFixture() {
        a = topo.mix_node(1, 0);
        b = topo.mix_node(1, 1);
        c = topo.mix_node(2, 0);
        d = topo.mix_node(2, 1);

        auto edge = [&](NodeId i, NodeId j, std::uint64_t legit, std::uint64_t extra) {
            EdgeTally t;
            t.t_total = legit + extra;
            t.s_star = std::uint64_t(double(legit) * p_lot);
            tallies[edge_key(i, j)] = t;
        };
        auto triple = [&](NodeId pred, NodeId node, NodeId succ, std::uint64_t legit,
                          std::uint64_t extra) {
            triples[node].totals[edge_key(pred, succ)] = legit + extra;
            triples[node].opened_measurements[edge_key(pred, succ)] =
                std::uint64_t(double(legit) * p_lot);
        };

        // gateway -> layer 1 (only g0 -> a carries the 30k injection)
        edge(0, a, 100'000, 30'000);
        edge(1, a, 100'000, 0);
        edge(0, b, 100'000, 0);
        edge(1, b, 100'000, 0);
        // layer 1 -> layer 2: a forwards its 200k legit + 30k foreign evenly
        edge(a, c, 100'000, 15'000);
        edge(a, d, 100'000, 15'000);
        edge(b, c, 100'000, 0);
        edge(b, d, 100'000, 0);
        triple(0, a, c, 50'000, 15'000);
        triple(0, a, d, 50'000, 15'000);
        triple(1, a, c, 50'000, 0);
        triple(1, a, d, 50'000, 0);
        triple(0, b, c, 50'000, 0);
        triple(0, b, d, 50'000, 0);
        triple(1, b, c, 50'000, 0);
        triple(1, b, d, 50'000, 0);
        // layer 2 -> layer 3: c and d forward 200k legit + 15k foreign each
        NodeId e = topo.mix_node(3, 0), f = topo.mix_node(3, 1);
        for (NodeId mid : {c, d}) {
            edge(mid, e, 100'000, 7'500);
            edge(mid, f, 100'000, 7'500);
            triple(a, mid, e, 50'000, 7'500);
            triple(a, mid, f, 50'000, 7'500);
            triple(b, mid, e, 50'000, 0);
            triple(b, mid, f, 50'000, 0);
        }
    }

    std::vector<FreeRideReport> run() const {
        SweepInputs in;
        in.tallies = &tallies;
        in.triples = &triples;
        return layer_sweep(in, topo, p_lot, 2.576);
    }

    const FreeRideReport& report_for(const std::vector<FreeRideReport>& reps, NodeId id) const {
        for (const auto& r : reps)
            if (r.node == id) return r;
        FAIL("missing report");
        return reps.front();
    }
};

}  // namespace

TEST_CASE("layer sweep flags the injecting gateway and exculpates forwarders") {
    SweepFixture fx;
    auto reports = fx.run();

    // layer-1 node a flags gateway 0 and discloses the forwarded excess
    const FreeRideReport& ra = fx.report_for(reports, fx.a);
    CHECK_FALSE(ra.all_clear);
    REQUIRE(ra.flagged_predecessors.size() == 1);
    CHECK(ra.flagged_predecessors[0] == 0);
    CHECK(ra.incoming.at(0).f_injected == doctest::Approx(30'000));
    CHECK(ra.h_hat.at(fx.c) == doctest::Approx(15'000));
    CHECK(ra.h_hat.at(fx.d) == doctest::Approx(15'000));

    // node b saw only legitimate traffic
    CHECK(fx.report_for(reports, fx.b).all_clear);

    // layer-2 nodes discount a's disclaimed excess and do not flag a,
    // then disclaim their own forwarded share onward
    for (NodeId mid : {fx.c, fx.d}) {
        const FreeRideReport& r = fx.report_for(reports, mid);
        CAPTURE(mid);
        CHECK(r.flagged_predecessors.empty());
        CHECK(r.incoming.at(fx.a).f_injected == doctest::Approx(0.0));
        CHECK(r.h_hat.at(fx.topo.mix_node(3, 0)) == doctest::Approx(7'500));
    }

    // layer-3 nodes in turn hold nothing against c or d
    const FreeRideReport& re = fx.report_for(reports, fx.topo.mix_node(3, 0));
    CHECK(re.flagged_predecessors.empty());
}

TEST_CASE("without the disclaimed discount the forwarder would be flagged") {
    SweepFixture fx;
    // same numbers fed as a single-edge check with no h_hat
    double s_hat = 100'000 / fx.p_lot * fx.p_lot;  // == legit
    EdgeDetection no_discount = detect_edge(115'000, 100'000, 0.0, fx.p_lot, 2.576);
    CHECK(no_discount.flagged);
    EdgeDetection with_discount = detect_edge(115'000, s_hat, 15'000, fx.p_lot, 2.576);
    CHECK_FALSE(with_discount.flagged);
}

TEST_CASE("chi-square bias test: uniform counters pass, degenerate fail") {
    std::vector<std::uint64_t> uniform(80, 1000);
    BiasTestResult res = chi_square_bias(uniform, 0.01);
    CHECK(res.chi2 == doctest::Approx(0.0));
    CHECK(res.df == 79);
    CHECK_FALSE(res.biased);

    // all traffic to one of 80 successors: chi2 = 79 * N
    std::vector<std::uint64_t> spike(80, 0);
    spike[17] = 8000;
    BiasTestResult bad = chi_square_bias(spike, 0.01);
    CHECK(bad.chi2 == doctest::Approx(79.0 * 8000.0));
    CHECK(bad.biased);

    CHECK_THROWS_AS(chi_square_bias(std::vector<std::uint64_t>(80, 0), 0.01),
                    std::invalid_argument);
    CHECK_THROWS_AS(chi_square_bias({}, 0.01), std::invalid_argument);
}

TEST_CASE("chi-square bias calibration near the significance level") {
    // 2000 honest multinomial trials at p = 0.01: flag rate within ~1% +- 0.9%
    testsupport::Rng rng(404);
    const int trials = 2000;
    int flagged = 0;
    for (int t = 0; t < trials; ++t) {
        std::vector<std::uint64_t> counters(20, 0);
        for (int pkt = 0; pkt < 4000; ++pkt) ++counters[rng.below(20)];
        if (chi_square_bias(counters, 0.01).biased) ++flagged;
    }
    double rate = double(flagged) / trials;
    CHECK(rate < 0.022);  // 0.01 + 3 sigma + WH slack
}

TEST_CASE("blocklist: threshold expulsion and frivolous-blocker expulsion") {
    Topology topo(3, 4, 4);
    BlocklistConfig cfg;
    cfg.successor_fraction = 0.5;
    cfg.epochs_required = 2;
    cfg.peer_limit = 8;
    Blocklist bl(cfg);

    CHECK(bl.burned_edges().empty());
    bl.update({}, topo, 0);
    CHECK(bl.burned_edges().empty());
    CHECK(bl.expelled().empty());

    NodeId rider = topo.mix_node(1, 0);
    auto make_reports = [&](std::uint32_t flaggers) {
        std::vector<FreeRideReport> reports;
        for (std::uint32_t i = 0; i < flaggers; ++i) {
            FreeRideReport r;
            r.node = topo.mix_node(2, i);
            r.all_clear = false;
            r.flagged_predecessors.push_back(rider);
            reports.push_back(r);
        }
        return reports;
    };

    // flagged by half its successors in one epoch: burned edges, not expelled
    bl.update(make_reports(2), topo, 1);
    CHECK(bl.edge_burned(rider, topo.mix_node(2, 0)));
    CHECK_FALSE(bl.expelled().contains(rider));
    // second epoch over threshold: expelled
    bl.update(make_reports(2), topo, 2);
    CHECK(bl.expelled().contains(rider));

    // a node blocklisting more than peer_limit others is itself expelled
    Blocklist bl2(cfg);
    std::vector<FreeRideReport> greedy(1);
    greedy[0].node = topo.mix_node(2, 0);
    for (std::uint32_t i = 0; i < 4; ++i)
        greedy[0].flagged_predecessors.push_back(topo.mix_node(1, i));
    for (std::uint32_t i = 0; i < 4; ++i)
        greedy[0].flagged_predecessors.push_back(NodeId(i));  // gateways too
    greedy[0].flagged_predecessors.push_back(topo.mix_node(3, 0));
    bl2.update(greedy, topo, 0);
    CHECK(bl2.expelled().contains(topo.mix_node(2, 0)));
}

TEST_CASE("h_hat conservation on honest forwarders") {
    SweepFixture fx;
    auto reports = fx.run();
    for (const auto& rep : reports) {
        double h_out = 0, f_in = 0;
        for (const auto& [succ, h] : rep.h_hat) h_out += h;
        for (const auto& [pred, det] : rep.incoming) f_in += det.f_total;
        if (h_out > 0) CHECK(h_out <= f_in + 1e-9);
    }
}
