#include "infomorph/serialize.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "infomorph/errors.hpp"

namespace infomorph {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json json_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

const char* setup_name(Setup setup) {
  switch (setup) {
    case Setup::dense_lateral_label: return "1";
    case Setup::sparse_lateral_label: return "2";
    case Setup::sparse_lateral_feedback: return "3";
  }
  return "?";
}

ordered_json config_to_json_obj(const NetworkConfig& c) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["n_inputs"] = c.n_inputs;
  j["n_classes"] = c.n_classes;
  j["n_hidden"] = c.n_hidden;
  j["setup"] = setup_name(c.setup);
  j["max_lateral"] = c.max_lateral;
  j["activation"] = c.activation == ActivationKind::modulatory ? "modulatory" : "linear";
  j["activation_params"] = {{"context_mix", c.activation_params.context_mix},
                            {"lateral_mix", c.activation_params.lateral_mix},
                            {"context_slope", c.activation_params.context_slope},
                            {"lateral_slope", c.activation_params.lateral_slope}};
  j["hidden_goal"] = c.hidden_goal;
  j["output_goal"] = c.output_goal;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr_hidden"] = c.lr_hidden;
  j["lr_output"] = c.lr_output;
  j["weight_decay_hidden"] = c.weight_decay_hidden;
  j["weight_decay_output"] = c.weight_decay_output;
  j["n_bins"] = c.n_bins;
  j["hidden_bin_lo"] = c.hidden_bin_lo;
  j["hidden_bin_hi"] = c.hidden_bin_hi;
  j["validation_fraction"] = c.validation_fraction;
  j["seed"] = c.seed;
  j["hidden_atom_order"] = PidLattice::trivariate().atom_labels();
  j["output_atom_order"] = PidLattice::bivariate().atom_labels();
  return j;
}

NetworkConfig config_from_json_obj(const ordered_json& j) {
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kSchemaVersion) {
    throw SchemaError("unsupported config schema version");
  }
  NetworkConfig c;
  c.n_inputs = j.at("n_inputs").get<int>();
  c.n_classes = j.at("n_classes").get<int>();
  c.n_hidden = j.at("n_hidden").get<int>();
  const std::string setup = j.at("setup").get<std::string>();
  if (setup == "1") c.setup = Setup::dense_lateral_label;
  else if (setup == "2") c.setup = Setup::sparse_lateral_label;
  else if (setup == "3") c.setup = Setup::sparse_lateral_feedback;
  else throw SchemaError("unknown setup '" + setup + "'");
  c.max_lateral = j.at("max_lateral").get<int>();
  const std::string act = j.at("activation").get<std::string>();
  if (act == "modulatory") c.activation = ActivationKind::modulatory;
  else if (act == "linear") c.activation = ActivationKind::linear;
  else throw SchemaError("unknown activation '" + act + "'");
  const auto& p = j.at("activation_params");
  c.activation_params.context_mix = p.at("context_mix").get<double>();
  c.activation_params.lateral_mix = p.at("lateral_mix").get<double>();
  c.activation_params.context_slope = p.at("context_slope").get<double>();
  c.activation_params.lateral_slope = p.at("lateral_slope").get<double>();
  c.hidden_goal = j.at("hidden_goal").get<std::vector<double>>();
  c.output_goal = j.at("output_goal").get<std::vector<double>>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lr_hidden = j.at("lr_hidden").get<double>();
  c.lr_output = j.at("lr_output").get<double>();
  c.weight_decay_hidden = j.at("weight_decay_hidden").get<double>();
  c.weight_decay_output = j.at("weight_decay_output").get<double>();
  c.n_bins = j.at("n_bins").get<int>();
  c.hidden_bin_lo = j.at("hidden_bin_lo").get<double>();
  c.hidden_bin_hi = j.at("hidden_bin_hi").get<double>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string vector_to_json(std::span<const double> values, const PidLattice& lattice,
                           const std::string& kind) {
  const auto labels = lattice.atom_labels();
  if (values.size() != labels.size()) {
    throw ConfigError(kind + " vector length " + std::to_string(values.size()) +
                      " does not match lattice order length " +
                      std::to_string(labels.size()));
  }
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind;
  j["n_sources"] = lattice.n_sources();
  j["order"] = labels;
  j["values"] = std::vector<double>(values.begin(), values.end());
  return j.dump(2) + "\n";
}

std::vector<double> goal_vector_from_json(const std::string& json_text,
                                          const PidLattice& lattice) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("goal vector JSON parse error: ") + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kSchemaVersion) {
    throw SchemaError("unsupported goal vector schema version");
  }
  const auto labels = lattice.atom_labels();
  if (j.contains("order")) {
    const auto order = j["order"].get<std::vector<std::string>>();
    if (order != labels) throw SchemaError("goal vector order does not match canonical order");
  }
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != labels.size()) {
    throw SchemaError("goal vector has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(labels.size()));
  }
  return values;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::string train_report_to_json(const TrainReport& report) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = config_to_json_obj(report.config);
  j["seed"] = report.config.seed;
  ordered_json epochs = ordered_json::array();
  for (const auto& m : report.epochs) {
    ordered_json e;
    e["epoch"] = m.epoch;
    e["train_accuracy"] = m.train_accuracy;
    e["validation_accuracy"] = m.validation_accuracy;
    e["median_self_distance"] = json_or_null(m.median_self_distance);
    e["mean_hidden_goal"] = m.mean_hidden_goal;
    e["mean_output_goal"] = m.mean_output_goal;
    epochs.push_back(e);
  }
  j["epochs"] = epochs;
  j["best_validation_accuracy"] = report.best_validation_accuracy;
  j["test_accuracy"] = json_or_null(report.test_accuracy);
  return j.dump(2) + "\n";
}

std::string train_metrics_to_csv(const TrainReport& report) {
  std::string csv = "epoch,train_acc,val_acc,median_Dc,mean_goal\n";
  char line[256];
  for (const auto& m : report.epochs) {
    if (std::isnan(m.median_self_distance)) {
      std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,,%.10g\n", m.epoch,
                    m.train_accuracy, m.validation_accuracy, m.mean_hidden_goal);
    } else {
      std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g,%.10g\n", m.epoch,
                    m.train_accuracy, m.validation_accuracy, m.median_self_distance,
                    m.mean_hidden_goal);
    }
    csv += line;
  }
  return csv;
}

std::string network_config_to_json(const NetworkConfig& config) {
  return config_to_json_obj(config).dump(2) + "\n";
}

NetworkConfig network_config_from_json(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("config JSON parse error: ") + e.what());
  }
  return config_from_json_obj(j);
}

// ---------------------------------------------------------------------------
// Checkpoint container: magic, u32 version, u64 header length, JSON header
// (config + wiring + block table), then little-endian float32 weight blocks
// per layer/class.

struct CheckpointCodec {
  static void save(const Network& net, const std::string& path);
  static Network load(const std::string& path, int threads_override);
};

namespace {

constexpr char kCheckpointMagic[8] = {'I', 'M', 'N', 'C', 'K', 'P', 'T', '\0'};

void append_block(std::string& out, const std::vector<double>& weights) {
  for (double w : weights) {
    const float f = static_cast<float>(w);
    char bytes[4];
    std::memcpy(bytes, &f, 4);
    out.append(bytes, 4);  // little-endian host assumed
  }
}

std::vector<double> read_block(const std::string& bytes, std::size_t& offset,
                               std::size_t count, const std::string& path) {
  if (offset + count * 4 > bytes.size()) {
    throw DataError("truncated checkpoint " + path);
  }
  std::vector<double> weights(count);
  for (std::size_t i = 0; i < count; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + offset + i * 4, 4);
    weights[i] = static_cast<double>(f);
  }
  offset += count * 4;
  return weights;
}

}  // namespace

void CheckpointCodec::save(const Network& net, const std::string& path) {
  const NetworkConfig& c = net.config_;
  ordered_json header;
  header["schema_version"] = kSchemaVersion;
  header["config"] = ordered_json::parse(network_config_to_json(c));
  header["wiring"] = net.wiring_;
  header["output_orientation"] = net.orientation_;
  ordered_json blocks = ordered_json::array();
  auto describe = [&](const std::string& name, std::size_t count) {
    blocks.push_back({{"name", name}, {"count", count}});
  };
  for (int n = 0; n < c.n_hidden; ++n) {
    describe("hidden." + std::to_string(n) + ".ff", net.hidden_[n].w_ff.size());
    describe("hidden." + std::to_string(n) + ".ctx", net.hidden_[n].w_ctx.size());
    describe("hidden." + std::to_string(n) + ".lat", net.hidden_[n].w_lat.size());
  }
  for (int k = 0; k < c.n_classes; ++k) {
    describe("output." + std::to_string(k) + ".ff", net.output_[k].w_ff.size());
    describe("output." + std::to_string(k) + ".ctx", net.output_[k].w_ctx.size());
  }
  header["blocks"] = blocks;
  const std::string header_text = header.dump();

  std::string out;
  out.append(kCheckpointMagic, 8);
  const std::uint32_t version = kSchemaVersion;
  char buf[8];
  std::memcpy(buf, &version, 4);
  out.append(buf, 4);
  const std::uint64_t header_len = header_text.size();
  std::memcpy(buf, &header_len, 8);
  out.append(buf, 8);
  out += header_text;
  for (int n = 0; n < c.n_hidden; ++n) {
    append_block(out, net.hidden_[n].w_ff);
    append_block(out, net.hidden_[n].w_ctx);
    append_block(out, net.hidden_[n].w_lat);
  }
  for (int k = 0; k < c.n_classes; ++k) {
    append_block(out, net.output_[k].w_ff);
    append_block(out, net.output_[k].w_ctx);
  }
  write_text_file(path, out);
}

Network CheckpointCodec::load(const std::string& path, int threads_override) {
  const std::string bytes = read_text_file(path);
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    throw SchemaError("not a checkpoint file: " + path);
  }
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 8, 4);
  if (version != static_cast<std::uint32_t>(kSchemaVersion)) {
    throw SchemaError("checkpoint schema version " + std::to_string(version) +
                      " not supported (expected " + std::to_string(kSchemaVersion) + ")");
  }
  std::uint64_t header_len;
  std::memcpy(&header_len, bytes.data() + 12, 8);
  if (20 + header_len > bytes.size()) throw SchemaError("truncated checkpoint header");
  ordered_json header;
  try {
    header = ordered_json::parse(bytes.substr(20, header_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("corrupt checkpoint header: ") + e.what());
  }
  NetworkConfig config = config_from_json_obj(header.at("config"));
  if (threads_override >= 0) config.threads = threads_override;
  Network net(config);
  const auto wiring = header.at("wiring").get<std::vector<std::vector<std::uint32_t>>>();
  if (wiring.size() != net.wiring_.size()) throw SchemaError("checkpoint wiring mismatch");
  net.wiring_ = wiring;
  const auto orientation = header.at("output_orientation").get<std::vector<std::int8_t>>();
  if (orientation.size() != net.orientation_.size()) {
    throw SchemaError("checkpoint orientation mismatch");
  }
  net.orientation_ = orientation;

  std::size_t offset = 20 + header_len;
  for (int n = 0; n < config.n_hidden; ++n) {
    net.hidden_[n].w_ff = read_block(bytes, offset, net.hidden_[n].w_ff.size(), path);
    net.hidden_[n].w_ctx = read_block(bytes, offset, net.hidden_[n].w_ctx.size(), path);
    net.hidden_[n].w_lat = read_block(bytes, offset, wiring[n].size(), path);
  }
  for (int k = 0; k < config.n_classes; ++k) {
    net.output_[k].w_ff = read_block(bytes, offset, net.output_[k].w_ff.size(), path);
    net.output_[k].w_ctx = read_block(bytes, offset, net.output_[k].w_ctx.size(), path);
  }
  if (offset != bytes.size()) {
    throw SchemaError("checkpoint has trailing bytes: " + path);
  }
  return net;
}

void Network::save_checkpoint(const std::string& path) const {
  CheckpointCodec::save(*this, path);
}

Network Network::load_checkpoint(const std::string& path, int threads_override) {
  return CheckpointCodec::load(path, threads_override);
}

}  // namespace infomorph
