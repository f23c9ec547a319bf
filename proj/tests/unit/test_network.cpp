#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hsx/error.hpp"
#include "hsx/losses.hpp"
#include "hsx/network.hpp"
#include "testkit.hpp"

using namespace hsx;

namespace {

// Straight-line evaluation of one sample, independent of the matrix code.
Vector reference_forward(const MlpParams& p, std::span<const double> in) {
  Vector h(in.begin(), in.end());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    Vector z(layer.bias);
    for (std::size_t o = 0; o < z.size(); ++o) {
      for (std::size_t i = 0; i < h.size(); ++i) z[o] += h[i] * layer.weight(i, o);
    }
    if (l + 1 < p.layers.size()) {
      for (double& v : z) v = p.activation == Activation::relu ? std::max(0.0, v) : std::tanh(v);
    }
    h = std::move(z);
  }
  return h;
}

Vector flatten(const MlpParams& p) {
  Vector out;
  for (const auto& l : p.layers) {
    out.insert(out.end(), l.weight.flat().begin(), l.weight.flat().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

void assign(MlpParams& p, std::span<const double> flat) {
  std::size_t at = 0;
  for (auto& l : p.layers) {
    for (double& v : l.weight.flat()) v = flat[at++];
    for (double& v : l.bias) v = flat[at++];
  }
}

Vector flatten(const MlpGradients& g) {
  Vector out;
  for (const auto& l : g.layers) {
    out.insert(out.end(), l.weight.flat().begin(), l.weight.flat().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

}  // namespace

TEST(MlpForward, IdentityLayerPassesInputsThrough) {
  MlpParams p = make_mlp({3, 3}, Activation::relu);
  p.layers[0].weight = Matrix::identity(3);
  Rng rng(41);
  const Matrix x = testkit::random_matrix(rng, 5, 3);
  EXPECT_EQ(mlp_forward(p, x), x);
}

TEST(MlpForward, ZeroParametersGiveZeroEmbeddings) {
  const MlpParams p = make_mlp({4, 6, 2}, Activation::tanh);
  Rng rng(42);
  EXPECT_EQ(mlp_forward(p, testkit::random_matrix(rng, 3, 4)), Matrix(3, 2));
}

TEST(MlpForward, MatchesStraightLineEvaluation) {
  Rng rng(43);
  for (const Activation act : {Activation::relu, Activation::tanh}) {
    const MlpParams p = init_mlp({5, 7, 4, 2}, act, rng);
    const Matrix x = testkit::random_matrix(rng, 6, 5);
    const Matrix out = mlp_forward(p, x);
    for (std::size_t i = 0; i < 6; ++i) {
      const Vector ref = reference_forward(p, x.row(i));
      for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(out(i, j), ref[j], 1e-12);
    }
  }
}

TEST(MlpForward, DeterministicAndShapeChecked) {
  Rng a(44), b(44);
  const MlpParams pa = init_mlp({3, 8, 2}, Activation::relu, a);
  const MlpParams pb = init_mlp({3, 8, 2}, Activation::relu, b);
  EXPECT_EQ(pa, pb);
  Rng rng(1);
  const Matrix x = testkit::random_matrix(rng, 4, 3);
  EXPECT_EQ(mlp_forward(pa, x), mlp_forward(pb, x));
  EXPECT_THROW(mlp_forward(pa, Matrix(2, 4)), ContractError);
  EXPECT_THROW(make_mlp({3}, Activation::relu), ContractError);
  EXPECT_THROW(make_mlp({3, 0, 2}, Activation::relu), ContractError);
}

TEST(MlpBackward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(45);
  const MlpParams p = init_mlp({3, 5, 2}, Activation::tanh, rng);
  ForwardCache cache;
  mlp_forward(p, testkit::random_matrix(rng, 4, 3), &cache);
  const MlpGradients g = mlp_backward(p, cache, Matrix(4, 2));
  for (double v : flatten(g)) EXPECT_EQ(v, 0.0);
}

TEST(MlpBackward, LinearNetWeightGradient) {
  Rng rng(46);
  const MlpParams p = init_mlp({3, 2}, Activation::relu, rng);
  const Matrix x = testkit::random_matrix(rng, 5, 3);
  const Matrix up = testkit::random_matrix(rng, 5, 2);
  ForwardCache cache;
  mlp_forward(p, x, &cache);
  const MlpGradients g = mlp_backward(p, cache, up);
  const Matrix expect = matmul(x.transposed(), up);
  for (std::size_t a = 0; a < expect.size(); ++a) {
    EXPECT_NEAR(g.layers[0].weight.flat()[a], expect.flat()[a], 1e-12);
  }
  EXPECT_EQ(g.d_inputs.rows(), 5u);
  const MlpGradients no_input = mlp_backward(p, cache, up, false);
  EXPECT_TRUE(no_input.d_inputs.empty());
  EXPECT_EQ(no_input.layers[0].weight, g.layers[0].weight);
}

TEST(MlpBackward, EndToEndDistArcMatchesFiniteDifferences) {
  Rng rng(47);
  for (const TermMask mask : ablation_masks()) {
    for (const Activation act : {Activation::tanh, Activation::relu}) {
      for (int rep = 0; rep < 3; ++rep) {
        MlpParams p = init_mlp({4, 8, 6, 3}, act, rng);
        const Matrix x = testkit::random_matrix(rng, 5, 4);
        const auto y = testkit::random_labels(rng, 5, 4);
        const ProxyBank bank = testkit::random_bank(rng, 3, 4);
        DistArcConfig cfg;
        cfg.mask = mask;
        cfg.lambda = 0.005;

        ForwardCache cache;
        const Matrix emb = mlp_forward(p, x, &cache);
        const LossBreakdown fwd = distarc_forward(emb, y, bank, cfg);
        const GradientBundle lg = distarc_backward(emb, y, bank, cfg, fwd);
        const MlpGradients g = mlp_backward(p, cache, lg.d_x);

        const Vector p0 = flatten(p);
        MlpParams probe = p;
        const Vector numeric = finite_difference_gradient(
            [&](std::span<const double> q) {
              assign(probe, q);
              return distarc_forward(mlp_forward(probe, x), y, bank, cfg).loss;
            },
            p0);
        EXPECT_LE(relative_error(flatten(g), numeric), 1e-3) << mask.name() << " rep " << rep;

        // Input gradient through the same chain.
        Matrix xi = x;
        const Vector numeric_in = finite_difference_gradient(
            [&](std::span<const double> q) {
              std::copy(q.begin(), q.end(), xi.flat().begin());
              return distarc_forward(mlp_forward(p, xi), y, bank, cfg).loss;
            },
            x.flat());
        EXPECT_LE(relative_error(g.d_inputs.flat(), numeric_in), 1e-3);
      }
    }
  }
}

TEST(MlpIo, RoundTrip) {
  Rng rng(48);
  const MlpParams p = init_mlp({6, 5, 3}, Activation::tanh, rng);
  std::stringstream ss;
  write_mlp(ss, p);
  EXPECT_EQ(read_mlp(ss), p);
}

TEST(MlpIo, RejectsCorruptStreams) {
  Rng rng(49);
  const MlpParams p = init_mlp({2, 3, 2}, Activation::relu, rng);
  std::stringstream ss;
  write_mlp(ss, p);
  std::string bytes = ss.str();

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::istringstream a(bad_magic);
  EXPECT_THROW(read_mlp(a), BadMagicError);

  std::istringstream b(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_mlp(b), TruncatedFileError);

  std::istringstream c("");
  EXPECT_THROW(read_mlp(c), TruncatedFileError);
}

TEST(Activation, Parse) {
  EXPECT_EQ(parse_activation("relu"), Activation::relu);
  EXPECT_EQ(parse_activation("tanh"), Activation::tanh);
  EXPECT_EQ(to_string(Activation::tanh), "tanh");
  EXPECT_THROW(parse_activation("gelu"), ContractError);
}
