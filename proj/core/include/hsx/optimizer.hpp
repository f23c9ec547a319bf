#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hsx/numkit.hpp"

namespace hsx {

struct SgdConfig {
  double learning_rate = 1e-2;
  double weight_decay = 5e-4;
  double momentum = 0.0;

  void validate() const;
};

/// One contiguous parameter tensor and its gradient.
struct ParamBlock {
  std::span<double> values;
  std::span<const double> grads;
};

/// Per-block velocity buffers, created lazily on the first step.
struct SgdState {
  std::vector<Vector> velocity;
};

/// v <- momentum * v + (g + weight_decay * p);  p <- p - lr * v.
///
/// Every gradient is checked before any parameter is touched, so a
/// non-finite gradient aborts the whole step (NumericError with the block
/// index).
void sgd_step(std::span<const ParamBlock> blocks, const SgdConfig& cfg, SgdState& state);

}  // namespace hsx
