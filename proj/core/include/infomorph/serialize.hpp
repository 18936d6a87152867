#pragma once

#include <span>
#include <string>
#include <vector>

#include "infomorph/joint.hpp"
#include "infomorph/lattice.hpp"
#include "infomorph/network.hpp"

namespace infomorph {

inline constexpr int kSchemaVersion = 1;

// Atom/goal vectors serialize as JSON arrays in canonical antichain order
// (with the trailing residual-entropy entry) plus a schema-version field.
std::string vector_to_json(std::span<const double> values, const PidLattice& lattice,
                           const std::string& kind);
std::vector<double> goal_vector_from_json(const std::string& json_text,
                                          const PidLattice& lattice);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Deterministic JSON body: config echo, per-epoch metrics, final accuracies.
// No timestamps; identical runs produce byte-identical files.
std::string train_report_to_json(const TrainReport& report);

// CSV with header epoch,train_acc,val_acc,median_Dc,mean_goal.
std::string train_metrics_to_csv(const TrainReport& report);

std::string network_config_to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const std::string& json_text);

}  // namespace infomorph
