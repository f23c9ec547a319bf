#include "hsx/network.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "hsx/binary_io.hpp"
#include "hsx/error.hpp"

namespace hsx {

namespace {

constexpr char kMlpMagic[4] = {'H', 'S', 'X', 'M'};
constexpr std::uint32_t kMlpVersion = 1;

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::tanh:
      return std::tanh(z);
  }
  return z;
}

// Derivative expressed through the pre-activation z and output h.
double activate_slope(Activation a, double z, double h) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh:
      return 1.0 - h * h;
  }
  return 1.0;
}

}  // namespace

std::string_view to_string(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw ContractError("unknown activation '" + std::string(name) + "'");
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void MlpParams::validate() const {
  if (widths.size() < 2) throw ContractError("MlpParams: need at least input and output widths");
  if (layers.size() != widths.size() - 1) throw ContractError("MlpParams: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].weight.rows() != widths[l] || layers[l].weight.cols() != widths[l + 1] ||
        layers[l].bias.size() != widths[l + 1]) {
      throw ContractError("MlpParams: layer " + std::to_string(l) + " shape does not compose");
    }
  }
}

MlpParams make_mlp(std::vector<std::size_t> widths, Activation activation) {
  MlpParams p;
  p.widths = std::move(widths);
  p.activation = activation;
  if (p.widths.size() < 2) throw ContractError("make_mlp: need at least two widths");
  for (std::size_t w : p.widths) {
    if (w == 0) throw ContractError("make_mlp: widths must be positive");
  }
  for (std::size_t l = 0; l + 1 < p.widths.size(); ++l) {
    p.layers.push_back({Matrix(p.widths[l], p.widths[l + 1]), Vector(p.widths[l + 1], 0.0)});
  }
  return p;
}

MlpParams init_mlp(std::vector<std::size_t> widths, Activation activation, Rng& rng) {
  MlpParams p = make_mlp(std::move(widths), activation);
  for (auto& layer : p.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.rows()));
    for (double& w : layer.weight.flat()) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
  }
  return p;
}

Matrix mlp_forward(const MlpParams& params, const Matrix& inputs, ForwardCache* cache) {
  params.validate();
  if (inputs.cols() != params.input_width()) {
    throw ContractError("mlp_forward: input width " + std::to_string(inputs.cols()) +
                        " != " + std::to_string(params.input_width()));
  }
  if (cache) {
    cache->activations.clear();
    cache->pre_activations.clear();
    cache->activations.push_back(inputs);
  }
  Matrix h = inputs;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Matrix z = matmul(h, layer.weight);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto zi = z.row(i);
      for (std::size_t j = 0; j < zi.size(); ++j) zi[j] += layer.bias[j];
    }
    if (l == last) {
      h = z;
    } else {
      h = Matrix(z.rows(), z.cols());
      auto src = z.flat();
      auto dst = h.flat();
      for (std::size_t a = 0; a < src.size(); ++a) dst[a] = activate(params.activation, src[a]);
    }
    if (cache) {
      cache->pre_activations.push_back(std::move(z));
      cache->activations.push_back(h);
    }
  }
  return h;
}

MlpGradients mlp_backward(const MlpParams& params, const ForwardCache& cache,
                          const Matrix& d_embeddings, bool want_input_grad) {
  params.validate();
  const std::size_t layer_count = params.layers.size();
  if (cache.activations.size() != layer_count + 1 || cache.pre_activations.size() != layer_count) {
    throw ContractError("mlp_backward: cache does not match parameters");
  }
  const Matrix& out = cache.activations.back();
  if (d_embeddings.rows() != out.rows() || d_embeddings.cols() != out.cols()) {
    throw ContractError("mlp_backward: upstream gradient shape mismatch");
  }
  MlpGradients g;
  g.layers.resize(layer_count);
  Matrix upstream = d_embeddings;  // gradient w.r.t. pre-activation of the current layer
  for (std::size_t l = layer_count; l-- > 0;) {
    const Matrix& input = cache.activations[l];
    g.layers[l].weight = matmul_tn(input, upstream);
    g.layers[l].bias.assign(upstream.cols(), 0.0);
    for (std::size_t i = 0; i < upstream.rows(); ++i) {
      const auto ui = upstream.row(i);
      for (std::size_t j = 0; j < ui.size(); ++j) g.layers[l].bias[j] += ui[j];
    }
    if (l == 0 && !want_input_grad) break;
    Matrix d_input = matmul_nt(upstream, params.layers[l].weight);
    if (l > 0) {
      const auto z = cache.pre_activations[l - 1].flat();
      const auto h = cache.activations[l].flat();
      auto di = d_input.flat();
      for (std::size_t a = 0; a < di.size(); ++a) {
        di[a] *= activate_slope(params.activation, z[a], h[a]);
      }
    }
    upstream = std::move(d_input);
  }
  if (want_input_grad) g.d_inputs = std::move(upstream);
  return g;
}

void write_mlp(std::ostream& out, const MlpParams& params) {
  params.validate();
  out.write(kMlpMagic, 4);
  binary::write_u32(out, kMlpVersion);
  binary::write_u32(out, params.activation == Activation::relu ? 0u : 1u);
  binary::write_u32(out, static_cast<std::uint32_t>(params.layers.size()));
  for (std::size_t w : params.widths) binary::write_u64(out, w);
  for (const auto& layer : params.layers) {
    for (double v : layer.weight.flat()) binary::write_f64(out, v);
    for (double v : layer.bias) binary::write_f64(out, v);
  }
  if (!out) throw IoError("write_mlp: stream failure");
}

MlpParams read_mlp(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4) throw TruncatedFileError("read_mlp: missing header");
  if (std::string_view(magic, 4) != std::string_view(kMlpMagic, 4)) {
    throw BadMagicError("read_mlp: bad magic");
  }
  const std::uint32_t version = binary::read_u32(in);
  if (version != kMlpVersion) throw FormatError("read_mlp: unsupported version");
  const std::uint32_t act = binary::read_u32(in);
  if (act > 1) throw FormatError("read_mlp: unknown activation tag");
  const std::uint32_t layer_count = binary::read_u32(in);
  if (layer_count == 0 || layer_count > 1024) throw FormatError("read_mlp: bad layer count");
  std::vector<std::size_t> widths(layer_count + 1);
  for (auto& w : widths) {
    w = binary::read_u64(in);
    if (w == 0 || w > (1u << 24)) throw FormatError("read_mlp: bad width");
  }
  MlpParams p = make_mlp(std::move(widths), act == 0 ? Activation::relu : Activation::tanh);
  for (auto& layer : p.layers) {
    for (double& v : layer.weight.flat()) v = binary::read_f64(in);
    for (double& v : layer.bias) v = binary::read_f64(in);
  }
  return p;
}

}  // namespace hsx
