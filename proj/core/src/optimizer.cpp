#include "hsx/optimizer.hpp"

#include <cmath>
#include <string>

#include "hsx/error.hpp"

namespace hsx {

void SgdConfig::validate() const {
  // lr == 0 is accepted so a run can be replayed without moving parameters.
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ContractError("SgdConfig: learning_rate must be finite and >= 0");
  }
  if (!(weight_decay >= 0.0)) throw ContractError("SgdConfig: weight_decay must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ContractError("SgdConfig: momentum must lie in [0, 1)");
  }
}

void sgd_step(std::span<const ParamBlock> blocks, const SgdConfig& cfg, SgdState& state) {
  cfg.validate();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].values.size() != blocks[b].grads.size()) {
      throw ContractError("sgd_step: block " + std::to_string(b) + " shape mismatch");
    }
    for (double g : blocks[b].grads) {
      if (!std::isfinite(g)) {
        throw NumericError("sgd_step: non-finite gradient in block " + std::to_string(b),
                           static_cast<std::ptrdiff_t>(b));
      }
    }
  }
  if (state.velocity.empty()) {
    state.velocity.resize(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      state.velocity[b].assign(blocks[b].values.size(), 0.0);
    }
  }
  if (state.velocity.size() != blocks.size()) {
    throw ContractError("sgd_step: optimizer state does not match parameter blocks");
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto values = blocks[b].values;
    auto grads = blocks[b].grads;
    Vector& v = state.velocity[b];
    if (v.size() != values.size()) throw ContractError("sgd_step: velocity shape mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      v[i] = cfg.momentum * v[i] + (grads[i] + cfg.weight_decay * values[i]);
      values[i] -= cfg.learning_rate * v[i];
    }
  }
}

}  // namespace hsx
