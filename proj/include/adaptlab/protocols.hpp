#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adaptlab/augment.hpp"
#include "adaptlab/dataset.hpp"
#include "adaptlab/nn.hpp"
#include "adaptlab/vat.hpp"

namespace adaptlab::protocols {

enum class StageKind { lp, ft };

std::string stage_kind_to_string(StageKind kind);

// One training stage. lp trains only the classifier head on frozen trunk
// features; ft trains the whole model. VAT is a head-input technique and is
// only permitted on lp stages.
struct StageConfig {
  StageKind kind = StageKind::lp;
  int epochs = 0;
  nn::OptimConfig optim;
  std::vector<augment::AugmentPolicy> augment;
  std::optional<vat::VatConfig> vat;

  void validate() const;
};

struct ProtocolSpec {
  std::string name;
  std::vector<StageConfig> stages;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StageLog {
  std::string kind;  // "lp" or "ft"
  std::vector<double> epoch_loss;
  std::map<std::string, long> augment_applications;  // by augmentation kind
  long vat_applications = 0;
};

struct TrainLog {
  std::vector<StageLog> stages;
};

// Pretrained trunk plus a single dense classifier head. Stored as one layer
// stack so the lp -> ft hand-off is the identity on parameters; the head is
// always the last layer.
class AdaptedModel {
 public:
  AdaptedModel(nn::Mlp trunk, nn::Layer head);

  const nn::Mlp& net() const { return net_; }
  nn::Mlp trunk() const;
  const nn::Layer& head() const { return net_.layers.back(); }
  std::size_t trunk_layer_count() const { return trunk_layer_count_; }

  int feature_dim() const;  // head input width
  int num_classes() const { return static_cast<int>(head().W.rows()); }

  TrainLog log;

 private:
  friend AdaptedModel run_stage_impl(AdaptedModel model, const Dataset& train,
                                     const StageConfig& stage,
                                     std::uint64_t seed);
  nn::Mlp net_;
  std::size_t trunk_layer_count_;
};

// Trains only the head for stage.epochs over reshuffled mini-batches.
// Augmentations hit the raw inputs before the trunk; VAT (when configured)
// acts on the penultimate representation. Trunk parameters are bitwise
// unchanged. Deterministic given (model, data, stage, seed).
AdaptedModel run_lp(AdaptedModel model, const Dataset& train,
                    const StageConfig& stage, std::uint64_t seed);

// Trains trunk and head together; otherwise as run_lp.
AdaptedModel run_ft(AdaptedModel model, const Dataset& train,
                    const StageConfig& stage, std::uint64_t seed);

// Runs the stages in order on the same model; the head entering stage k+1 is
// exactly the head leaving stage k. Returns the log of this run.
std::pair<AdaptedModel, TrainLog> run_protocol(const ProtocolSpec& spec,
                                               AdaptedModel model,
                                               const Dataset& train);

// Parses the protocol grammar: stage descriptors joined by '+', each "lp" or
// "ft" optionally suffixed with "+<augment-kind>" or "+vat", parenthesized
// per stage, e.g. "(lp+vat)+(ft+mixup)". Unparenthesized suffix tokens attach
// to the preceding stage, so "lp+mixup" is one stage and "lp+ft" is two.
// Stages come out with the desk-scale defaults.
ProtocolSpec parse_protocol_name(const std::string& name);

// Every named protocol the reports cover: lp, ft, lp+ft, the four placement
// variants per augmentation kind, and the vat-hardened compositions.
std::vector<ProtocolSpec> canonical_protocols();

// Desk-scale stage defaults (benchmark-tuned learning rates).
StageConfig desk_lp_stage();
StageConfig desk_ft_stage();

// Full-scale preset: lp 200 epochs at lr 30, ft 20 epochs at lr 1e-5.
StageConfig paper_scale_lp_stage();
StageConfig paper_scale_ft_stage();

}  // namespace adaptlab::protocols
