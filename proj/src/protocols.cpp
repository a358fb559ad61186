#include "adaptlab/protocols.hpp"

#include <algorithm>
#include <cmath>

namespace adaptlab::protocols {

namespace {

// Desk-scale defaults. Learning rates were grid-searched once against the
// bundled synthetic benchmark and then frozen.
constexpr int kDeskLpEpochs = 100;
constexpr int kDeskFtEpochs = 20;
constexpr double kDeskLpLearningRate = 0.5;
constexpr double kDeskFtLearningRate = 0.01;

constexpr std::uint64_t kShuffleSalt = 1;
constexpr std::uint64_t kAugmentSalt = 2;
constexpr std::uint64_t kVatSalt = 3;

augment::AugmentPolicy default_policy(augment::Kind kind) {
  augment::AugmentPolicy policy;
  policy.kind = kind;
  return policy;
}

}  // namespace

std::string stage_kind_to_string(StageKind kind) {
  return kind == StageKind::lp ? "lp" : "ft";
}

void StageConfig::validate() const {
  if (epochs < 0) {
    throw ConfigError("stage: epochs must be nonnegative");
  }
  optim.validate();
  for (const augment::AugmentPolicy& policy : augment) {
    policy.validate();
  }
  if (vat.has_value()) {
    if (kind != StageKind::lp) {
      throw ConfigError("vat only permitted when kind = lp");
    }
    vat->validate();
  }
}

void ProtocolSpec::validate() const {
  if (stages.empty()) {
    throw ConfigError("protocol '" + name + "': needs at least one stage");
  }
  for (const StageConfig& stage : stages) {
    stage.validate();
  }
}

AdaptedModel::AdaptedModel(nn::Mlp trunk, nn::Layer head)
    : net_(std::move(trunk)), trunk_layer_count_(net_.layers.size()) {
  if (!net_.layers.empty() &&
      net_.layers.back().W.rows() != head.W.cols()) {
    throw ShapeError("adapted model: trunk output width does not match head input");
  }
  net_.layers.push_back(std::move(head));
  net_.validate();
}

nn::Mlp AdaptedModel::trunk() const {
  nn::Mlp trunk;
  trunk.activation = net_.activation;
  trunk.layers.assign(net_.layers.begin(),
                      net_.layers.begin() + static_cast<std::ptrdiff_t>(trunk_layer_count_));
  return trunk;
}

int AdaptedModel::feature_dim() const {
  return static_cast<int>(net_.layers.back().W.cols());
}

AdaptedModel run_stage_impl(AdaptedModel model, const Dataset& train,
                            const StageConfig& stage, std::uint64_t seed) {
  stage.validate();
  train.validate();
  if (!train.has_labels()) {
    throw ArgumentError("training requires a labeled dataset");
  }
  if (train.num_classes != model.num_classes()) {
    throw ShapeError("training set class count does not match the head");
  }
  if (train.dim() != model.net().input_dim()) {
    throw ShapeError("training set dimension does not match the model");
  }

  const bool lp = stage.kind == StageKind::lp;
  StageLog log;
  log.kind = stage_kind_to_string(stage.kind);
  for (const augment::AugmentPolicy& policy : stage.augment) {
    if (policy.kind != augment::Kind::none) {
      log.augment_applications[augment::kind_to_string(policy.kind)] = 0;
    }
  }

  // Independent streams so that disabling one consumer (say, a zero-weight
  // smoothness term) cannot shift another consumer's draws.
  Rng shuffle_rng(mix_seed(seed, kShuffleSalt));
  Rng augment_rng(mix_seed(seed, kAugmentSalt));
  Rng vat_rng(mix_seed(seed, kVatSalt));

  const Matrix all_features = train.features.cast<double>();
  const int n = train.rows();
  const int batch_size = stage.optim.batch_size;
  const int num_classes = train.num_classes;

  // In lp the head is trained as a standalone one-layer model on trunk
  // features; the trunk layers are never touched.
  nn::Mlp head_net;
  head_net.activation = model.net().activation;
  head_net.layers.push_back(model.net().layers.back());
  nn::MomentumState head_state = nn::MomentumState::zeros_like(head_net);
  nn::MomentumState full_state = nn::MomentumState::zeros_like(model.net_);

  const bool use_vat = lp && stage.vat.has_value() && stage.vat->alpha > 0.0;

  for (int epoch = 0; epoch < stage.epochs; ++epoch) {
    const std::vector<int> order = shuffle_rng.permutation(n);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += batch_size) {
      const int size = std::min(batch_size, n - start);
      Matrix batch(size, train.dim());
      std::vector<std::int32_t> batch_labels(static_cast<std::size_t>(size));
      for (int i = 0; i < size; ++i) {
        const int row = order[static_cast<std::size_t>(start + i)];
        batch.row(i) = all_features.row(row);
        batch_labels[static_cast<std::size_t>(i)] =
            train.labels[static_cast<std::size_t>(row)];
      }

      Matrix targets = nn::one_hot(batch_labels, num_classes);
      for (const augment::AugmentPolicy& policy : stage.augment) {
        long* counter = policy.kind == augment::Kind::none
                            ? nullptr
                            : &log.augment_applications[augment::kind_to_string(policy.kind)];
        augment::AugmentedBatch augmented =
            augment::apply_policy(policy, batch, targets, augment_rng, counter);
        batch = std::move(augmented.features);
        targets = std::move(augmented.soft_targets);
      }

      double batch_loss = 0.0;
      if (lp) {
        const Matrix z = model.net_.layers.size() == 1
                             ? batch
                             : nn::forward(model.net_, batch).penultimate;
        if (use_vat) {
          vat::VatObjective objective =
              vat::vat_objective(head_net, z, targets, *stage.vat, vat_rng);
          nn::sgd_step(head_net, objective.head_grads, head_state, stage.optim);
          batch_loss = objective.loss;
          ++log.vat_applications;
        } else {
          nn::BackwardResult back =
              nn::backward(head_net, z, nn::LossKind::soft_cross_entropy, targets);
          nn::sgd_step(head_net, back.grads, head_state, stage.optim);
          batch_loss = back.loss;
        }
        model.net_.layers.back() = head_net.layers[0];
      } else {
        nn::BackwardResult back = nn::backward(
            model.net_, batch, nn::LossKind::soft_cross_entropy, targets);
        nn::sgd_step(model.net_, back.grads, full_state, stage.optim);
        batch_loss = back.loss;
      }
      epoch_loss += batch_loss * size;
    }
    log.epoch_loss.push_back(epoch_loss / n);
  }

  model.log.stages.push_back(std::move(log));
  return model;
}

AdaptedModel run_lp(AdaptedModel model, const Dataset& train,
                    const StageConfig& stage, std::uint64_t seed) {
  if (stage.kind != StageKind::lp) {
    throw ConfigError("run_lp: stage kind must be lp");
  }
  return run_stage_impl(std::move(model), train, stage, seed);
}

AdaptedModel run_ft(AdaptedModel model, const Dataset& train,
                    const StageConfig& stage, std::uint64_t seed) {
  if (stage.kind != StageKind::ft) {
    throw ConfigError("run_ft: stage kind must be ft");
  }
  return run_stage_impl(std::move(model), train, stage, seed);
}

std::pair<AdaptedModel, TrainLog> run_protocol(const ProtocolSpec& spec,
                                               AdaptedModel model,
                                               const Dataset& train) {
  spec.validate();
  const std::size_t first_new_stage = model.log.stages.size();
  for (std::size_t k = 0; k < spec.stages.size(); ++k) {
    const StageConfig& stage = spec.stages[k];
    const std::uint64_t stage_seed = mix_seed(spec.seed, 0x100 + k);
    if (stage.kind == StageKind::lp) {
      model = run_lp(std::move(model), train, stage, stage_seed);
    } else {
      model = run_ft(std::move(model), train, stage, stage_seed);
    }
  }
  TrainLog run_log;
  run_log.stages.assign(model.log.stages.begin() +
                            static_cast<std::ptrdiff_t>(first_new_stage),
                        model.log.stages.end());
  return {std::move(model), std::move(run_log)};
}

StageConfig desk_lp_stage() {
  StageConfig stage;
  stage.kind = StageKind::lp;
  stage.epochs = kDeskLpEpochs;
  stage.optim.learning_rate = kDeskLpLearningRate;
  return stage;
}

StageConfig desk_ft_stage() {
  StageConfig stage;
  stage.kind = StageKind::ft;
  stage.epochs = kDeskFtEpochs;
  stage.optim.learning_rate = kDeskFtLearningRate;
  return stage;
}

StageConfig paper_scale_lp_stage() {
  StageConfig stage;
  stage.kind = StageKind::lp;
  stage.epochs = 200;
  stage.optim.learning_rate = 30.0;
  return stage;
}

StageConfig paper_scale_ft_stage() {
  StageConfig stage;
  stage.kind = StageKind::ft;
  stage.epochs = 20;
  stage.optim.learning_rate = 1e-5;
  return stage;
}

ProtocolSpec parse_protocol_name(const std::string& name) {
  if (name.empty()) {
    throw ConfigError("protocol name is empty");
  }
  // Split on '+' at parenthesis depth zero.
  std::vector<std::string> tokens;
  std::string current;
  int depth = 0;
  for (char c : name) {
    if (c == '(') {
      ++depth;
      current.push_back(c);
    } else if (c == ')') {
      --depth;
      if (depth < 0) {
        throw ConfigError("protocol '" + name + "': unbalanced parentheses");
      }
      current.push_back(c);
    } else if (c == '+' && depth == 0) {
      tokens.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (depth != 0) {
    throw ConfigError("protocol '" + name + "': unbalanced parentheses");
  }
  tokens.push_back(current);

  ProtocolSpec spec;
  spec.name = name;

  auto apply_suffix = [&name](StageConfig& stage, const std::string& token) {
    if (token == "vat") {
      if (stage.kind != StageKind::lp) {
        throw ConfigError("vat only permitted when kind = lp");
      }
      stage.vat = vat::VatConfig{};
      return;
    }
    const augment::Kind kind = augment::kind_from_string(token);
    if (kind == augment::Kind::none) {
      throw ConfigError("protocol '" + name + "': 'none' is not a stage suffix");
    }
    stage.augment.push_back(default_policy(kind));
  };

  auto start_stage = [&spec](const std::string& kind_token) {
    spec.stages.push_back(kind_token == "lp" ? desk_lp_stage() : desk_ft_stage());
  };

  for (const std::string& token : tokens) {
    if (token.empty()) {
      throw ConfigError("protocol '" + name + "': empty stage descriptor");
    }
    if (token.front() == '(') {
      if (token.back() != ')') {
        throw ConfigError("protocol '" + name + "': malformed stage group");
      }
      const std::string body = token.substr(1, token.size() - 2);
      std::vector<std::string> parts;
      std::string piece;
      for (char c : body) {
        if (c == '+') {
          parts.push_back(piece);
          piece.clear();
        } else {
          piece.push_back(c);
        }
      }
      parts.push_back(piece);
      if (parts.empty() || (parts[0] != "lp" && parts[0] != "ft")) {
        throw ConfigError("protocol '" + name + "': stage must start with lp or ft");
      }
      start_stage(parts[0]);
      for (std::size_t i = 1; i < parts.size(); ++i) {
        apply_suffix(spec.stages.back(), parts[i]);
      }
    } else if (token == "lp" || token == "ft") {
      start_stage(token);
    } else {
      if (spec.stages.empty()) {
        throw ConfigError("protocol '" + name + "': stage must start with lp or ft");
      }
      apply_suffix(spec.stages.back(), token);
    }
  }
  spec.validate();
  return spec;
}

std::vector<ProtocolSpec> canonical_protocols() {
  std::vector<std::string> names = {"lp", "ft", "lp+ft"};
  const std::vector<std::string> kinds = {"mixup", "cutmix", "noise", "cutout"};
  for (const std::string& kind : kinds) {
    names.push_back("lp+" + kind);
    names.push_back("ft+" + kind);
    names.push_back("(lp+" + kind + ")+ft");
    names.push_back("lp+(ft+" + kind + ")");
  }
  names.push_back("(lp+vat)+ft");
  for (const std::string& kind : kinds) {
    names.push_back("(lp+vat)+(ft+" + kind + ")");
  }
  std::vector<ProtocolSpec> specs;
  specs.reserve(names.size());
  for (const std::string& name : names) {
    specs.push_back(parse_protocol_name(name));
  }
  return specs;
}

}  // namespace adaptlab::protocols
