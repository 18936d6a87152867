#include "config_file.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "infomorph/errors.hpp"
#include "infomorph/serialize.hpp"

namespace infomorph::cli {

namespace {

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> defaults = {
      {"data.dir", ""},
      {"data.validation_fraction", "0.2"},
      {"out.dir", "runs/out"},
      {"network.n_hidden", "100"},
      {"network.n_classes", "10"},
      {"network.setup", "1"},
      {"network.max_lateral", "100"},
      {"network.activation", "modulatory"},
      {"network.hidden_goal", ""},
      {"network.hidden_goal_file", ""},
      {"network.output_goal", ""},
      {"train.epochs", "100"},
      {"train.batch_size", "1024"},
      {"train.lr_hidden", "0.002"},
      {"train.lr_output", "0.003"},
      {"train.weight_decay_hidden", "0.00035"},
      {"train.weight_decay_output", "0.00015"},
      {"train.bins", "20"},
      {"train.bin_lo", "-20"},
      {"train.bin_hi", "20"},
      {"train.seed", "1"},
      {"train.threads", "0"},
  };
  return defaults;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig config;
  config.values_ = default_values();
  return config;
}

void RunConfig::set_checked(const std::string& key, const std::string& value,
                            const std::string& where) {
  if (values_.count(key)) {
    values_[key] = value;
    return;
  }
  // accept a unique trailing component
  std::vector<std::string> matches;
  for (const auto& [known, _] : values_) {
    if (known.size() > key.size() && known.ends_with(key) &&
        known[known.size() - key.size() - 1] == '.') {
      matches.push_back(known);
    }
  }
  if (matches.size() == 1) {
    values_[matches[0]] = value;
    return;
  }
  if (matches.size() > 1) {
    throw ConfigError("ambiguous key '" + key + "' in " + where);
  }
  throw ConfigError("unknown key '" + key + "' in " + where);
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    set_checked(key, value, path + ":" + std::to_string(line_no));
  }
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  }
  set_checked(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)),
              "--set override");
}

void RunConfig::finalize() {
  if (values_["data.dir"].empty()) {
    if (const char* env = std::getenv("INFOMORPH_DATA_DIR")) {
      values_["data.dir"] = env;
    }
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& raw = get(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + raw + "' is not a number");
  }
}

int RunConfig::get_int(const std::string& key) const {
  const double v = get_double(key);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw ConfigError("config key '" + key + "' must be an integer");
  }
  return i;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& raw = get(key);
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + raw +
                      "' is not an unsigned integer");
  }
}

std::vector<double> parse_goal_spec(const std::string& spec, const PidLattice& lattice) {
  const std::size_t n = lattice.size() + 1;
  const auto labels = lattice.atom_labels();
  if (spec.find('{') != std::string::npos || spec.find("H_res") != std::string::npos) {
    // name=value pairs separated by whitespace or commas
    std::vector<double> gamma(n, 0.0);
    std::string token;
    std::istringstream stream(spec);
    std::string normalized = spec;
    std::replace(normalized.begin(), normalized.end(), ',', ' ');
    std::istringstream tokens(normalized);
    while (tokens >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("goal entry '" + token + "' must be name=value");
      }
      const std::string name = token.substr(0, eq);
      const auto it = std::find(labels.begin(), labels.end(), name);
      if (it == labels.end()) {
        throw ConfigError("unknown atom label '" + name + "' in goal spec");
      }
      gamma[it - labels.begin()] = std::stod(token.substr(eq + 1));
    }
    return gamma;
  }
  // comma-separated values in canonical order
  std::vector<double> gamma;
  std::string item;
  std::istringstream stream(spec);
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      gamma.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("goal entry '" + item + "' is not a number");
    }
  }
  if (gamma.size() != n) {
    throw ConfigError("goal spec has " + std::to_string(gamma.size()) +
                      " entries, expected " + std::to_string(n));
  }
  return gamma;
}

NetworkConfig RunConfig::network_config(int n_inputs) const {
  NetworkConfig config;
  config.n_inputs = n_inputs;
  config.n_classes = get_int("network.n_classes");
  config.n_hidden = get_int("network.n_hidden");
  const int setup = get_int("network.setup");
  if (setup < 1 || setup > 3) throw ConfigError("network.setup must be 1, 2 or 3");
  config.setup = static_cast<Setup>(setup);
  config.max_lateral = get_int("network.max_lateral");
  const std::string& activation = get("network.activation");
  if (activation == "modulatory") config.activation = ActivationKind::modulatory;
  else if (activation == "linear") config.activation = ActivationKind::linear;
  else throw ConfigError("network.activation must be 'modulatory' or 'linear'");

  const std::string& goal_inline = get("network.hidden_goal");
  const std::string& goal_file = get("network.hidden_goal_file");
  if (!goal_inline.empty() && !goal_file.empty()) {
    throw ConfigError("set either network.hidden_goal or network.hidden_goal_file, not both");
  }
  if (!goal_inline.empty()) {
    config.hidden_goal = parse_goal_spec(goal_inline, PidLattice::trivariate());
  } else if (!goal_file.empty()) {
    config.hidden_goal =
        goal_vector_from_json(read_text_file(goal_file), PidLattice::trivariate());
  } else {
    config.hidden_goal = NetworkConfig::heuristic_hidden_goal();
  }
  const std::string& output_goal = get("network.output_goal");
  config.output_goal = output_goal.empty()
                           ? NetworkConfig::default_output_goal()
                           : parse_goal_spec(output_goal, PidLattice::bivariate());

  config.epochs = get_int("train.epochs");
  config.batch_size = get_int("train.batch_size");
  config.lr_hidden = get_double("train.lr_hidden");
  config.lr_output = get_double("train.lr_output");
  config.weight_decay_hidden = get_double("train.weight_decay_hidden");
  config.weight_decay_output = get_double("train.weight_decay_output");
  config.n_bins = get_int("train.bins");
  config.hidden_bin_lo = get_double("train.bin_lo");
  config.hidden_bin_hi = get_double("train.bin_hi");
  config.validation_fraction = get_double("data.validation_fraction");
  config.seed = get_u64("train.seed");
  config.threads = get_int("train.threads");
  config.validate();
  return config;
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  for (const auto& [key, value] : values_) j[key] = value;
  return j.dump(2) + "\n";
}

}  // namespace infomorph::cli
