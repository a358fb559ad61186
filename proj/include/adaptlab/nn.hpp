#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "adaptlab/common.hpp"

namespace adaptlab::nn {

// Probabilities are clamped here before any log.
inline constexpr double kProbFloor = 1e-12;

enum class Activation { relu, tanh, identity };

// Dense layer, y = x W^T + b. Also reused as the value holder for gradients
// and momentum buffers, which share the parameter shapes.
struct Layer {
  Matrix W;  // out x in
  Vector b;  // out
};

// Plain feed-forward stack. The activation is applied after every layer
// except the last; the input to the last layer is the penultimate
// representation.
struct Mlp {
  std::vector<Layer> layers;
  Activation activation = Activation::relu;

  int input_dim() const;
  int output_dim() const;

  void validate() const;  // dimension chain + finite parameters
};

struct Gradients {
  std::vector<Layer> layers;  // shape-congruent with the source model
};

struct OptimConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  int batch_size = 128;

  void validate() const;
};

struct MomentumState {
  std::vector<Layer> velocity;

  static MomentumState zeros_like(const Mlp& model);
};

struct ForwardResult {
  Matrix penultimate;  // n x h, input to the last layer
  Matrix logits;       // n x C, pre-softmax scores
};

ForwardResult forward(const Mlp& model, const Matrix& x);

// Row-wise softmax with max-subtraction.
Matrix softmax(const Matrix& logits);

Matrix one_hot(std::span<const std::int32_t> labels, int num_classes);

// Mean over rows of -log p[label].
double cross_entropy(const Matrix& probs, std::span<const std::int32_t> labels);

// Mean over rows of -sum_c q_c log p_c. Target rows must sum to 1 within 1e-6.
double soft_cross_entropy(const Matrix& probs, const Matrix& soft_targets);

// sum_c p_c (log p_c - log q_c), 0 log 0 = 0, both operands floored at
// kProbFloor inside the log so KL(p, p) is exactly zero. Never negative.
double kl_divergence(const Vector& p, const Vector& q);

enum class LossKind {
  cross_entropy,       // targets: one-hot rows
  soft_cross_entropy,  // targets: soft label rows summing to 1
  kl_to_reference,     // targets: fixed reference distributions
};

struct BackwardResult {
  Gradients grads;
  double loss = 0.0;
  Matrix input_gradient;  // n x d, filled only on request
};

// Closed-form gradients of the mean loss with respect to every parameter.
// `targets` is an n x C matrix whose meaning depends on the loss kind; the
// logit gradient is (softmax(logits) - targets) / n for all three kinds.
BackwardResult backward(const Mlp& model, const Matrix& x, LossKind kind,
                        const Matrix& targets, bool want_input_gradient = false);

// Hard-label convenience wrapper.
BackwardResult backward(const Mlp& model, const Matrix& x,
                        std::span<const std::int32_t> labels,
                        bool want_input_gradient = false);

// grads += scale * other, shape-checked.
void axpy(Gradients& grads, double scale, const Gradients& other);

// v <- momentum v + g; theta <- theta - lr v.
void sgd_step(Mlp& model, const Gradients& grads, MomentumState& state,
              const OptimConfig& config);

enum class InitScheme { fan_in_uniform, zeros };

// widths = {in, hidden..., out}. fan_in_uniform draws every weight and bias
// from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Mlp init_params(const std::vector<int>& widths, Activation activation,
                InitScheme scheme, std::uint64_t seed);

// AMDL checkpoint container, little-endian:
//   magic "AMDL", version u32 = 1, layer count u32, then per layer
//   out u32, in u32, W as float32 row-major, b as float32,
//   then one activation tag u32 (relu 0, tanh 1, identity 2).
void save_model(const Mlp& model, const std::filesystem::path& path);
Mlp load_model(const std::filesystem::path& path);

}  // namespace adaptlab::nn
