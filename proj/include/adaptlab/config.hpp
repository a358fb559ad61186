#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptlab/protocols.hpp"
#include "adaptlab/synth.hpp"

namespace adaptlab::harness {

struct MetricsConfig {
  int bins = 15;
  // Restricts the evaluation to these anomaly sets; empty means all.
  std::vector<std::string> anomaly_sets;
};

// One protocol to run: a canonical name plus optional overrides. Overrides
// are keyed "lp" / "ft" (epochs, learning_rate, momentum, batch_size),
// "vat" (epsilon_rel, xi, power_iters, alpha) and "augment" (alpha, sigma,
// mask_fraction, apply_probability); each applies to all matching stages.
struct ProtocolEntry {
  std::string name;
  nlohmann::json overrides;  // null when absent

  protocols::ProtocolSpec resolve() const;
};

struct ExperimentConfig {
  nlohmann::json dataset_block;  // verbatim "dataset" value, part of the hash
  std::optional<synth::SynthSpec> synth_spec;
  std::vector<ProtocolEntry> protocols;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  MetricsConfig metrics;
  std::string output_dir;

  static ExperimentConfig from_json(const nlohmann::json& root);
  static ExperimentConfig load_file(const std::filesystem::path& path);
};

// Digest of everything that determines one cell's result: the dataset block,
// the metric settings and the protocol entry itself. Scoped per cell so that
// adding a protocol to the config never invalidates finished cells.
std::string cell_config_hash(const ExperimentConfig& config,
                             const ProtocolEntry& entry);

// base seed mixed with a stable digest of the protocol name, so adding
// protocols never shifts existing cells' randomness.
std::uint64_t cell_seed(std::uint64_t base_seed, const std::string& protocol_name);

}  // namespace adaptlab::harness
