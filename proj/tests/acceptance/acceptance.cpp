// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "hsx/evaluation.hpp"
#include "hsx/geometry.hpp"
#include "hsx/losses.hpp"
#include "hsx/training.hpp"
#include "testkit.hpp"

using namespace hsx;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and thresholds.
constexpr double kGradRelErr = 1e-4;
constexpr double kGradSeconds = 10.0;
constexpr std::size_t kGradMinInstances = 200;
constexpr double kTriangleAbsErr = 1e-9;
constexpr std::size_t kTrianglePairs = 100000;
constexpr std::size_t kPredictInstances = 1000;
constexpr double kWorkedLoss = -0.686764;
constexpr double kWorkedLossCosTheta = 0.313262;
constexpr double kWorkedTol = 1e-6;
constexpr double kSynthMinAcc = 0.98;
constexpr double kSynthNormBand = 0.15;
constexpr double kSynthSeconds = 120.0;
constexpr double kAblationSlack = 0.005;
constexpr double kGapSlack = 0.003;
constexpr double kMnistSlack = 0.005;
constexpr double kMnistNormBand = 0.20;
constexpr double kMnistSeconds = 600.0;
constexpr double kEceTol = 1e-12;

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <typename... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// 1 ---------------------------------------------------------------------------

void gradient_fidelity() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  std::size_t count = 0;
  double worst = 0.0;
  for (const TermMask mask : ablation_masks())
    for (const double m : {0.0, 0.4})
      for (const double lambda : {0.0, 0.005})
        for (const std::size_t d : {2u, 8u})
          for (const std::size_t k : {2u, 5u})
            for (int rep = 0; rep < 4; ++rep) {
              const auto inst = testkit::well_conditioned_instance(rng, 4, d, k);
              DistArcConfig cfg;
              cfg.mask = mask;
              cfg.margin = m;
              cfg.lambda = lambda;
              worst = std::max(worst, testkit::distarc_gradient_error(inst, cfg, 1e-5));
              ++count;
            }
  const double secs = seconds_since(t0);
  report(1, worst <= kGradRelErr && count >= kGradMinInstances && secs < kGradSeconds,
         fmt("%zu instances, worst rel err %.3e (<= %.0e), %.2f s (< %.0f s)", count, worst,
             kGradRelErr, secs, kGradSeconds));
}

// 2 ---------------------------------------------------------------------------

void geometry_oracle() {
  Rng rng(1002);
  double worst = 0.0;
  std::size_t used = 0;
  while (used < kTrianglePairs) {
    const std::size_t d = 2 + rng.uniform_index(7);
    const Vector x = testkit::random_vector(rng, d);
    const Vector wr = testkit::random_vector(rng, d);
    const Vector r = resultant(x, wr);
    if (l2_norm(r) < 1e-6) continue;
    Vector minus_wr = wr;
    for (double& v : minus_wr) v = -v;
    const double theta = testkit::angle_between(x, wr);
    const double phi = testkit::angle_between(r, minus_wr);
    const double law =
        triangle_magnitude(l2_norm(x), l2_norm(wr), theta, phi, TriangleVariant::projection_law);
    worst = std::max(worst, std::abs(law - l2_norm(r)));
    ++used;
  }
  // x = (1, 1), w_r = (1, 0): theta = pi/4, phi = pi/2, ||R|| = 1.
  const double wx = std::sqrt(2.0);
  const double law = triangle_magnitude(wx, 1.0, std::numbers::pi / 4, std::numbers::pi / 2,
                                        TriangleVariant::projection_law);
  const double swapped = triangle_magnitude(wx, 1.0, std::numbers::pi / 4, std::numbers::pi / 2,
                                            TriangleVariant::swapped_sides);
  const bool example = std::abs(law - 1.0) < 1e-12 && std::abs(swapped - std::sqrt(0.5)) < 1e-12;
  report(2, worst <= kTriangleAbsErr && example,
         fmt("%zu pairs, worst |law - ||R||| %.3e (<= %.0e); example law %.4f, swapped %.4f",
             used, worst, kTriangleAbsErr, law, swapped));
}

// 3 ---------------------------------------------------------------------------

void predictive_oracle() {
  Rng rng(1003);
  std::size_t agree = 0;
  for (std::size_t t = 0; t < kPredictInstances; ++t) {
    const std::size_t d = 2 + rng.uniform_index(7), k = 2 + rng.uniform_index(9);
    const ProxyBank bank = testkit::random_bank(rng, d, k, 1.0, 10.0 * static_cast<double>(k));
    const Vector x = testkit::random_vector(rng, d, rng.uniform(0.5, 20.0));
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t c = 0; c < k; ++c) {
      const Vector raw = bank.raw(c);
      const double n = l2_norm(raw);
      double s = 0;
      for (std::size_t a = 0; a < d; ++a) {
        const double v = x[a] - bank.radius(c) * raw[a] / n;
        s += v * v;
      }
      if (s < best_d) best_d = s, best = c;
    }
    agree += predict_radial_angular(x, bank).predicted == best;
  }
  report(3, agree == kPredictInstances, fmt("%zu / %zu exact agreement", agree, kPredictInstances));
}

// 4 ---------------------------------------------------------------------------

void worked_loss() {
  Matrix w(2, 2);
  w(0, 0) = 1.0;
  w(1, 1) = 1.0;
  const ProxyBank bank(w, Vector{1.0, 2.0});
  const Matrix x(1, 2, std::vector<double>{1.0, 0.0});
  const std::vector<std::size_t> y{0};
  DistArcConfig cfg;
  cfg.margin = 0.0;
  cfg.lambda = 0.0;
  cfg.mask = TermMask::full();
  const double full = distarc_forward(x, y, bank, cfg).loss;
  cfg.mask = TermMask::cos_theta_only();
  const double ct = distarc_forward(x, y, bank, cfg).loss;
  const double closed_form = std::log(std::exp(1.0) + 1.0) - 2.0;
  report(4, std::abs(full - kWorkedLoss) <= kWorkedTol && std::abs(ct - kWorkedLossCosTheta) <= kWorkedTol,
         fmt("full %.7f vs %.6f (tol %.0e; log(e+1)-2 = %.7f), cos_theta only %.7f vs %.6f", full,
             kWorkedLoss, kWorkedTol, closed_form, ct, kWorkedLossCosTheta));
}

// 5 ---------------------------------------------------------------------------

void lambda_schedule_check() {
  const std::size_t epochs[] = {0, 9, 10, 100};
  const double want[] = {0.001, 0.001, 0.002, 0.005};
  bool ok = true;
  std::string got;
  for (int i = 0; i < 4; ++i) {
    const double v = lambda_schedule(epochs[i]);
    ok = ok && v == want[i];
    got += fmt("%s%.17g", i ? ", " : "", v);
  }
  report(5, ok, "epochs (0, 9, 10, 100) -> (" + got + ")");
}

// Synthetic runs, cached by (mask, gap, seed) ---------------------------------------

RunConfig synth_config(const TermMask& mask, double gap, std::uint64_t seed) {
  RunConfig c;
  c.dataset.source = DataSource::synth;
  c.dataset.classes = 10;
  c.dataset.input_dim = 2;
  c.dataset.per_class = 1000;
  c.dataset.spread = 0.5;
  c.hidden = {64, 64};
  c.embedding_dim = 2;
  c.activation = Activation::tanh;
  c.loss = LossKind::distarc;
  c.distarc.margin = 0.4;
  c.distarc.lambda = 0.005;
  c.distarc.mask = mask;
  c.radii_gap = gap;
  c.sgd = {1e-2, 5e-4, 0.0};
  c.epochs = 200;
  c.batch_size = 32;
  c.seed = seed;
  c.eval_every = 200;
  return c;
}

struct SynthRun {
  TrainResult result;
  double seconds = 0.0;
};

std::map<std::tuple<std::string, double, std::uint64_t>, SynthRun> synth_cache;

const SynthRun& synth_run(const TermMask& mask, double gap, std::uint64_t seed) {
  const auto key = std::make_tuple(mask.name(), gap, seed);
  if (auto it = synth_cache.find(key); it != synth_cache.end()) return it->second;
  const RunConfig cfg = synth_config(mask, gap, seed);
  const auto t0 = Clock::now();
  const Split split = load_dataset(cfg);
  SynthRun run{train(cfg, split.train, split.test), 0.0};
  run.seconds = seconds_since(t0);
  std::printf("    synth %-24s gap %-4g seed %llu: acc %.4f, %.1f s\n", mask.name().c_str(), gap,
              static_cast<unsigned long long>(seed), run.result.final_test.acc_radial, run.seconds);
  std::fflush(stdout);
  return synth_cache.emplace(key, std::move(run)).first->second;
}

// 6 ---------------------------------------------------------------------------

void synthetic_training() {
  const std::uint64_t seeds[] = {1, 2, 3};
  std::vector<double> accs;
  Vector ratio(10, 0.0);
  double secs = 0.0;
  for (const auto s : seeds) {
    const SynthRun& r = synth_run(TermMask::full(), 10.0, s);
    accs.push_back(r.result.final_test.acc_radial);
    secs += r.seconds;
    const Vector& radii = r.result.model.bank.radii();
    for (std::size_t k = 0; k < 10; ++k) ratio[k] += r.result.test_class_norms[k] / radii[k] / 3.0;
  }
  double worst = 0.0;
  std::size_t worst_k = 0;
  for (std::size_t k = 0; k < 10; ++k) {
    if (!(std::abs(ratio[k] - 1.0) <= worst)) worst = std::abs(ratio[k] - 1.0), worst_k = k;
  }
  const double acc = mean(accs);
  report(6, acc >= kSynthMinAcc && worst <= kSynthNormBand && secs < kSynthSeconds,
         fmt("mean acc %.4f (>= %.2f), worst class norm deviation %.3f at class %zu (<= %.2f), "
             "3 runs %.1f s (< %.0f s)",
             acc, kSynthMinAcc, worst, worst_k, kSynthNormBand, secs, kSynthSeconds));
}

// 7 ---------------------------------------------------------------------------

void ablation_trend() {
  const std::uint64_t seeds[] = {1, 2, 3, 4, 5};
  std::vector<std::pair<std::string, double>> means;
  for (const TermMask mask : ablation_masks()) {
    std::vector<double> accs;
    for (const auto s : seeds) accs.push_back(synth_run(mask, 10.0, s).result.final_test.acc_radial);
    means.emplace_back(mask.name(), mean(accs));
  }
  const double full = means.back().second;
  bool ok = true;
  std::string detail = fmt("full %.4f", full);
  for (std::size_t i = 0; i + 1 < means.size(); ++i) {
    ok = ok && full >= means[i].second - kAblationSlack;
    detail += fmt(", %s %.4f", means[i].first.c_str(), means[i].second);
  }
  report(7, ok, detail + fmt(" (slack %.3f)", kAblationSlack));
}

// 8 ---------------------------------------------------------------------------

void radii_trend() {
  const std::uint64_t seeds[] = {1, 2, 3, 4, 5};
  std::vector<double> means;
  for (const double gap : {1.0, 5.0, 10.0}) {
    std::vector<double> accs;
    for (const auto s : seeds) accs.push_back(synth_run(TermMask::full(), gap, s).result.final_test.acc_radial);
    means.push_back(mean(accs));
  }
  const bool ok = means[1] >= means[0] - kGapSlack && means[2] >= means[1] - kGapSlack;
  report(8, ok, fmt("gap 1: %.4f, gap 5: %.4f, gap 10: %.4f (no drop > %.3f)", means[0], means[1],
                    means[2], kGapSlack));
}

// 10 --------------------------------------------------------------------------

void convergence() {
  const auto& h = synth_run(TermMask::full(), 10.0, 1).result.history;
  const bool dropped = h.back().loss < h.front().loss;
  // ma[e] = mean loss over epochs e-9..e (1-based), defined from epoch 10.
  std::vector<double> ma(h.size() + 1, 0.0);
  for (std::size_t e = 10; e <= h.size(); ++e) {
    double s = 0;
    for (std::size_t j = e - 10; j < e; ++j) s += h[j].loss;
    ma[e] = s / 10.0;
  }
  std::size_t rises = 0;
  double worst = 0.0;
  std::size_t first = 0;
  for (std::size_t e = 21; e <= h.size(); ++e) {
    if (ma[e] > ma[e - 1]) {
      if (!rises) first = e;
      ++rises;
      worst = std::max(worst, ma[e] - ma[e - 1]);
    }
  }
  report(10, dropped && rises == 0,
         fmt("loss epoch 1 %.4f -> epoch %zu %.4f; 10-epoch moving average rises at %zu epochs after "
             "20 (first at %zu, largest rise %.2e)",
             h.front().loss, h.size(), h.back().loss, rises, first, worst));
}

// 9 ---------------------------------------------------------------------------

RunConfig mnist_config(LossKind loss) {
  const std::filesystem::path dir = HSX_DATA_DIR "/mnist";
  RunConfig c;
  c.dataset.source = DataSource::idx;
  c.dataset.images = dir / "train-images-idx3-ubyte.gz";
  c.dataset.labels = dir / "train-labels-idx1-ubyte.gz";
  c.dataset.test_images = dir / "t10k-images-idx3-ubyte.gz";
  c.dataset.test_labels = dir / "t10k-labels-idx1-ubyte.gz";
  c.dataset.limit = 10000;
  c.hidden = {256, 64};
  c.embedding_dim = 2;
  c.activation = Activation::relu;
  c.loss = loss;
  c.distarc.margin = 0.4;
  c.distarc.lambda = 0.005;
  c.distarc.mask = TermMask::full();
  c.radii_gap = 10.0;
  c.sgd = {1e-2, 5e-4, 0.0};
  c.epochs = 30;
  c.batch_size = 32;
  c.seed = 1;
  c.eval_every = 30;
  return c;
}

void mnist_run() {
  const RunConfig dc = mnist_config(LossKind::distarc);
  if (!std::filesystem::exists(dc.dataset.images)) {
    report(9, false, "MNIST files missing under " HSX_DATA_DIR "/mnist (run scripts/fetch_mnist.py)");
    return;
  }
  const auto t0 = Clock::now();
  const Split split = load_dataset(dc);
  const TrainResult d = train(dc, split.train, split.test);
  const TrainResult c = train(mnist_config(LossKind::cross_entropy), split.train, split.test);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  for (std::size_t k = 0; k < 10; ++k) {
    worst = std::max(worst, std::abs(d.test_class_norms[k] / d.model.bank.radius(k) - 1.0));
  }
  const double acc_d = d.final_test.acc_radial, acc_c = c.final_test.acc_head;
  report(9, acc_d >= acc_c - kMnistSlack && worst <= kMnistNormBand && secs <= kMnistSeconds,
         fmt("train %zu / test %zu: DistArc radial %.4f vs cross-entropy head %.4f (slack %.3f), "
             "worst class norm deviation %.3f (<= %.2f), %.1f s (<= %.0f s)",
             split.train.size(), split.test.size(), acc_d, acc_c, kMnistSlack, worst,
             kMnistNormBand, secs, kMnistSeconds));
}

// 11 --------------------------------------------------------------------------

void calibration_statistics() {
  bool ok = true;
  const double e1 = ece(std::vector<double>{0.9, 0.9}, {true, false}, 10);
  const double e2 = ece(std::vector<double>{0.3, 0.8, 0.8, 0.8}, {false, true, true, false}, 10);
  const double e2_hand = 0.3 / 4.0 + (0.8 - 2.0 / 3.0) * 0.75;
  const double e3 = ece(std::vector<double>{1.0, 1.0, 0.55}, {true, true, true}, 10);
  ok = ok && std::abs(e1 - 0.4) <= kEceTol && std::abs(e2 - e2_hand) <= kEceTol &&
       std::abs(e3 - 0.45 / 3.0) <= kEceTol;

  Rng rng(1011);
  const Vector grid{0.1, 0.25, 0.5, 0.75, 1.25, 1.5, 2.0, 3.0, 5.0};
  std::size_t worsened = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 30 + rng.uniform_index(100), k = 2 + rng.uniform_index(8);
    const Matrix scores = testkit::random_matrix(rng, n, k, rng.uniform(0.5, 5.0));
    std::vector<bool> correct(n);
    for (std::size_t i = 0; i < n; ++i) correct[i] = rng.uniform() < 0.7;
    const double tstar = temperature_calibrate(scores, correct, grid);
    worsened += ece(max_confidence(scores, tstar), correct) > ece(max_confidence(scores, 1.0), correct);
  }
  const double m1 = mcnemar_from_counts(10, 0), m2 = mcnemar_from_counts(5, 5);
  ok = ok && worsened == 0 && m1 == 8.1 && m2 == 0.1;
  report(11, ok,
         fmt("ECE fixtures %.12f / %.12f / %.12f, temperature search worsened %zu of 200, "
             "McNemar %.17g and %.17g",
             e1, e2, e3, worsened, m1, m2));
}

}  // namespace

int main() {
  gradient_fidelity();
  geometry_oracle();
  predictive_oracle();
  worked_loss();
  lambda_schedule_check();
  synthetic_training();
  ablation_trend();
  radii_trend();
  mnist_run();
  convergence();
  calibration_statistics();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
