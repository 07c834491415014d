#pragma once

#include <filesystem>
#include <fstream>

#include "mixmeter/sim/analysis.hpp"

namespace mixmeter::csv {

// UTF-8, comma-separated, header row, '.' decimal point.
void write_link_tally(const std::filesystem::path& file, std::uint32_t epoch,
                      const TallyMap& tallies);
void write_link_estimates(const std::filesystem::path& file, std::uint32_t epoch,
                          const TallyMap& tallies, double z, IntervalMethod method);
void write_node_scores(const std::filesystem::path& file, std::uint32_t epoch,
                       const std::vector<NodeScore>& scores);
void write_freeride(const std::filesystem::path& file, std::uint32_t epoch,
                    const std::vector<FreeRideReport>& reports);
void write_bias(const std::filesystem::path& file, std::uint32_t epoch,
                const std::vector<std::pair<NodeId, BiasTestResult>>& bias);
void write_ground_truth_edges(const std::filesystem::path& file, std::uint32_t epoch,
                              const sim::GroundTruth& truth);
void write_ground_truth_nodes(const std::filesystem::path& file, std::uint32_t epoch,
                              const sim::GroundTruth& truth,
                              const std::vector<NodeScore>& scores);
void write_costs(const std::filesystem::path& file,
                 const std::vector<std::tuple<std::uint32_t, double, double>>& rows);

}  // namespace mixmeter::csv
