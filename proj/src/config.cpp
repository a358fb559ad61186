#include "adaptlab/config.hpp"

#include <fstream>

namespace adaptlab::harness {

namespace {

using nlohmann::json;

void require_keys(const json& object, const std::vector<std::string>& allowed,
                  const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

double number_at(const json& object, const std::string& key, double fallback) {
  if (!object.contains(key)) {
    return fallback;
  }
  if (!object[key].is_number()) {
    throw ConfigError("'" + key + "' must be a number");
  }
  return object[key].get<double>();
}

int int_at(const json& object, const std::string& key, int fallback) {
  if (!object.contains(key)) {
    return fallback;
  }
  if (!object[key].is_number_integer()) {
    throw ConfigError("'" + key + "' must be an integer");
  }
  return object[key].get<int>();
}

synth::SynthSpec synth_spec_from_json(const json& object) {
  require_keys(object,
               {"input_dim", "num_classes", "trunk_widths", "n_train", "n_test",
                "shift_strength", "corruption_families", "severities",
                "pretrain_epochs", "seed"},
               "dataset.synth");
  synth::SynthSpec spec;
  spec.input_dim = int_at(object, "input_dim", spec.input_dim);
  spec.num_classes = int_at(object, "num_classes", spec.num_classes);
  if (object.contains("trunk_widths")) {
    spec.trunk_widths = object["trunk_widths"].get<std::vector<int>>();
  }
  spec.n_train = int_at(object, "n_train", spec.n_train);
  spec.n_test = int_at(object, "n_test", spec.n_test);
  spec.shift_strength = number_at(object, "shift_strength", spec.shift_strength);
  if (object.contains("corruption_families")) {
    spec.corruption_families =
        object["corruption_families"].get<std::vector<std::string>>();
  }
  spec.severities = int_at(object, "severities", spec.severities);
  spec.pretrain_epochs = int_at(object, "pretrain_epochs", spec.pretrain_epochs);
  if (object.contains("seed")) {
    spec.seed = object["seed"].get<std::uint64_t>();
  }
  spec.validate();
  return spec;
}

void apply_stage_overrides(protocols::ProtocolSpec& spec,
                           protocols::StageKind kind, const json& object) {
  require_keys(object, {"epochs", "learning_rate", "momentum", "batch_size"},
               "protocol overrides");
  bool touched = false;
  for (protocols::StageConfig& stage : spec.stages) {
    if (stage.kind != kind) {
      continue;
    }
    touched = true;
    stage.epochs = int_at(object, "epochs", stage.epochs);
    stage.optim.learning_rate =
        number_at(object, "learning_rate", stage.optim.learning_rate);
    stage.optim.momentum = number_at(object, "momentum", stage.optim.momentum);
    stage.optim.batch_size = int_at(object, "batch_size", stage.optim.batch_size);
  }
  if (!touched) {
    throw ConfigError("protocol '" + spec.name + "' has no " +
                      protocols::stage_kind_to_string(kind) + " stage to override");
  }
}

}  // namespace

protocols::ProtocolSpec ProtocolEntry::resolve() const {
  protocols::ProtocolSpec spec = protocols::parse_protocol_name(name);
  if (overrides.is_null()) {
    return spec;
  }
  if (!overrides.is_object()) {
    throw ConfigError("protocol '" + name + "': overrides must be an object");
  }
  require_keys(overrides, {"lp", "ft", "vat", "augment"},
               "protocol '" + name + "' overrides");
  if (overrides.contains("lp")) {
    apply_stage_overrides(spec, protocols::StageKind::lp, overrides["lp"]);
  }
  if (overrides.contains("ft")) {
    apply_stage_overrides(spec, protocols::StageKind::ft, overrides["ft"]);
  }
  if (overrides.contains("vat")) {
    const json& object = overrides["vat"];
    require_keys(object, {"epsilon_rel", "xi", "power_iters", "alpha"},
                 "vat overrides");
    bool touched = false;
    for (protocols::StageConfig& stage : spec.stages) {
      if (!stage.vat.has_value()) {
        continue;
      }
      touched = true;
      stage.vat->epsilon_rel =
          number_at(object, "epsilon_rel", stage.vat->epsilon_rel);
      stage.vat->xi = number_at(object, "xi", stage.vat->xi);
      stage.vat->power_iters = int_at(object, "power_iters", stage.vat->power_iters);
      stage.vat->alpha = number_at(object, "alpha", stage.vat->alpha);
    }
    if (!touched) {
      throw ConfigError("protocol '" + name + "' has no vat stage to override");
    }
  }
  if (overrides.contains("augment")) {
    const json& object = overrides["augment"];
    require_keys(object, {"alpha", "sigma", "mask_fraction", "apply_probability"},
                 "augment overrides");
    bool touched = false;
    for (protocols::StageConfig& stage : spec.stages) {
      for (augment::AugmentPolicy& policy : stage.augment) {
        touched = true;
        policy.alpha = number_at(object, "alpha", policy.alpha);
        policy.sigma = number_at(object, "sigma", policy.sigma);
        policy.mask_fraction =
            number_at(object, "mask_fraction", policy.mask_fraction);
        policy.apply_probability =
            number_at(object, "apply_probability", policy.apply_probability);
      }
    }
    if (!touched) {
      throw ConfigError("protocol '" + name + "' has no augmentation to override");
    }
  }
  spec.validate();
  return spec;
}

ExperimentConfig ExperimentConfig::from_json(const json& root) {
  if (!root.is_object()) {
    throw ConfigError("config root must be an object");
  }
  require_keys(root, {"dataset", "protocols", "seeds", "metrics", "output"},
               "config");
  ExperimentConfig config;

  if (root.contains("dataset")) {
    config.dataset_block = root["dataset"];
    if (!config.dataset_block.is_object()) {
      throw ConfigError("'dataset' must be an object");
    }
    require_keys(config.dataset_block, {"synth", "manifest"}, "dataset");
    if (config.dataset_block.contains("synth")) {
      config.synth_spec = synth_spec_from_json(config.dataset_block["synth"]);
    }
  }

  if (!root.contains("protocols") || !root["protocols"].is_array() ||
      root["protocols"].empty()) {
    throw ConfigError("config needs a nonempty 'protocols' array");
  }
  for (const json& item : root["protocols"]) {
    ProtocolEntry entry;
    if (item.is_string()) {
      entry.name = item.get<std::string>();
    } else if (item.is_object()) {
      require_keys(item, {"name", "overrides"}, "protocols[]");
      if (!item.contains("name") || !item["name"].is_string()) {
        throw ConfigError("protocol entries need a 'name' string");
      }
      entry.name = item["name"].get<std::string>();
      if (item.contains("overrides")) {
        entry.overrides = item["overrides"];
      }
    } else {
      throw ConfigError("protocol entries must be names or objects");
    }
    entry.resolve();  // fail fast on bad names or overrides
    config.protocols.push_back(std::move(entry));
  }

  if (root.contains("seeds")) {
    if (!root["seeds"].is_array() || root["seeds"].empty()) {
      throw ConfigError("'seeds' must be a nonempty array");
    }
    config.seeds = root["seeds"].get<std::vector<std::uint64_t>>();
  }

  if (root.contains("metrics")) {
    const json& object = root["metrics"];
    require_keys(object, {"bins", "anomaly_sets"}, "metrics");
    config.metrics.bins = int_at(object, "bins", config.metrics.bins);
    if (config.metrics.bins < 1) {
      throw ConfigError("metrics.bins must be positive");
    }
    if (object.contains("anomaly_sets")) {
      config.metrics.anomaly_sets =
          object["anomaly_sets"].get<std::vector<std::string>>();
    }
  }

  if (root.contains("output")) {
    const json& object = root["output"];
    require_keys(object, {"dir"}, "output");
    if (object.contains("dir")) {
      config.output_dir = object["dir"].get<std::string>();
    }
  }
  return config;
}

ExperimentConfig ExperimentConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path.string() + "'");
  }
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " +
                      e.what());
  }
  return from_json(root);
}

std::string cell_config_hash(const ExperimentConfig& config,
                             const ProtocolEntry& entry) {
  json cell;
  cell["dataset"] = config.dataset_block;
  cell["metrics"] = {{"bins", config.metrics.bins},
                     {"anomaly_sets", config.metrics.anomaly_sets}};
  cell["protocol"] = {{"name", entry.name}, {"overrides", entry.overrides}};
  const std::uint64_t digest = fnv1a64(cell.dump());
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(digest));
  return buffer;
}

std::uint64_t cell_seed(std::uint64_t base_seed,
                        const std::string& protocol_name) {
  return mix_seed(base_seed, fnv1a64(protocol_name));
}

}  // namespace adaptlab::harness
