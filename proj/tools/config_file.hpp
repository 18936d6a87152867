#pragma once

#include <map>
#include <string>
#include <vector>

#include "infomorph/network.hpp"

namespace infomorph::cli {

// Plain-text key=value configuration with [section] headers; keys are
// addressed by their flattened form "section.key". Unknown keys are
// rejected. `--set` overrides accept either the flat name or a unique
// trailing component ("n_hidden=100").
class RunConfig {
 public:
  static RunConfig defaults();

  void load_file(const std::string& path);
  void apply_override(const std::string& assignment);  // "key=value"
  void finalize();  // env fallbacks, consistency checks

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  // Assembles the network configuration; n_inputs comes from the dataset.
  NetworkConfig network_config(int n_inputs) const;

  std::string data_dir() const { return get("data.dir"); }
  std::string out_dir() const { return get("out.dir"); }

  // Resolved key=value view (defaults + file + overrides), echoed into
  // every command's artifacts.
  std::string to_json() const;

 private:
  void set_checked(const std::string& key, const std::string& value,
                   const std::string& where);
  std::map<std::string, std::string> values_;
};

// Parses a goal vector from an inline spec: either comma-separated values in
// canonical order or name=value pairs like "{F}{C}=0.98 {F}{L}=-0.99".
std::vector<double> parse_goal_spec(const std::string& spec, const PidLattice& lattice);

}  // namespace infomorph::cli
