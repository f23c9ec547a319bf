#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hsx/numkit.hpp"

namespace hsx {

enum class Activation { relu, tanh };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct DenseLayer {
  Matrix weight;  // in x out
  Vector bias;    // out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Multi-layer perceptron. Hidden layers apply the activation; the output
/// layer is affine so embeddings keep their raw magnitude.
struct MlpParams {
  std::vector<std::size_t> widths;  // [in, h1, ..., d]
  Activation activation = Activation::relu;
  std::vector<DenseLayer> layers;

  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  std::size_t parameter_count() const;
  void validate() const;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

struct ForwardCache {
  // activations[0] is the input, activations[L] the embeddings.
  std::vector<Matrix> activations;
  // Pre-activation outputs of each layer.
  std::vector<Matrix> pre_activations;
};

struct MlpGradients {
  std::vector<DenseLayer> layers;
  Matrix d_inputs;
};

/// All-zero parameters with the given shape.
MlpParams make_mlp(std::vector<std::size_t> widths, Activation activation);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
MlpParams init_mlp(std::vector<std::size_t> widths, Activation activation, Rng& rng);

Matrix mlp_forward(const MlpParams& params, const Matrix& inputs, ForwardCache* cache = nullptr);

/// Gradients of sum(embeddings .* d_embeddings). The input gradient is
/// skipped (left empty) when want_input_grad is false.
MlpGradients mlp_backward(const MlpParams& params, const ForwardCache& cache,
                          const Matrix& d_embeddings, bool want_input_grad = true);

// Checkpoint I/O for the backbone alone; see training.hpp for full model files.
void write_mlp(std::ostream& out, const MlpParams& params);
MlpParams read_mlp(std::istream& in);

}  // namespace hsx
