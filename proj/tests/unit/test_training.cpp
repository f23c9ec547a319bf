#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "hsx/error.hpp"
#include "hsx/training.hpp"
#include "testkit.hpp"

using namespace hsx;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.dataset.classes = 3;
  c.dataset.per_class = 30;
  c.hidden = {8};
  c.epochs = 4;
  c.batch_size = 16;
  c.seed = 5;
  c.sgd.learning_rate = 1e-2;
  c.sgd.weight_decay = 5e-4;
  return c;
}

}  // namespace

TEST(Checkpoint, RoundTripAllLosses) {
  testkit::TempDir dir;
  for (const LossKind k : {LossKind::distarc, LossKind::cross_entropy, LossKind::arcface,
                           LossKind::cosface}) {
    RunConfig c = small_config();
    c.loss = k;
    const Model m = init_model(c, 5, 4);
    save_checkpoint(dir / "m.ckpt", m);
    const Model back = load_checkpoint(dir / "m.ckpt");
    EXPECT_EQ(back.loss, m.loss);
    EXPECT_EQ(back.backbone, m.backbone);
    EXPECT_EQ(back.bank.weights(), m.bank.weights());
    EXPECT_EQ(back.bank.radii(), m.bank.radii());
    EXPECT_EQ(back.head_bias, m.head_bias);
  }
}

TEST(Checkpoint, Defects) {
  testkit::TempDir dir;
  const Model m = init_model(small_config(), 2, 3);
  save_checkpoint(dir / "m.ckpt", m);
  std::ifstream in(dir / "m.ckpt", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});

  std::ofstream(dir / "cut.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  EXPECT_THROW(load_checkpoint(dir / "cut.ckpt"), TruncatedFileError);
  std::string bad = bytes;
  bad[1] = '?';
  std::ofstream(dir / "bad.ckpt", std::ios::binary) << bad;
  EXPECT_THROW(load_checkpoint(dir / "bad.ckpt"), BadMagicError);
  EXPECT_THROW(load_checkpoint(dir / "none.ckpt"), IoError);
}

TEST(Training, ZeroLearningRateLeavesModelUnchanged) {
  RunConfig c = small_config();
  c.sgd.learning_rate = 0.0;
  const Split s = load_dataset(c);
  const TrainResult r = train(c, s.train, s.test);
  EXPECT_EQ(r.model.backbone, r.initial.backbone);
  EXPECT_EQ(r.model.bank.weights(), r.initial.bank.weights());
  EXPECT_EQ(r.history.size(), c.epochs);
}

TEST(Training, DeterministicMetrics) {
  const RunConfig c = small_config();
  const Split s = load_dataset(c);
  std::ostringstream a, b;
  train(c, s.train, s.test, [&](const MetricsRecord& r) { a << to_json_line(r) << '\n'; });
  train(c, s.train, s.test, [&](const MetricsRecord& r) { b << to_json_line(r) << '\n'; });
  EXPECT_EQ(a.str(), b.str());
  EXPECT_FALSE(a.str().empty());

  RunConfig other = c;
  other.seed = 6;
  std::ostringstream d;
  train(other, s.train, s.test, [&](const MetricsRecord& r) { d << to_json_line(r) << '\n'; });
  EXPECT_NE(a.str(), d.str());
}

TEST(Training, HistoryAndRadii) {
  RunConfig c = small_config();
  c.lambda_schedule.enabled = true;
  c.epochs = 12;
  const Split s = load_dataset(c);
  const TrainResult r = train(c, s.train, s.test);
  ASSERT_EQ(r.history.size(), 12u);
  EXPECT_EQ(r.history.front().epoch, 1u);
  EXPECT_DOUBLE_EQ(r.history.front().lambda, 0.001);
  EXPECT_DOUBLE_EQ(r.history.back().lambda, 0.002);
  EXPECT_EQ(r.model.bank.radii(), default_radii(3, c.radii_gap));
  for (const auto& h : r.history) EXPECT_TRUE(std::isfinite(h.loss));
  EXPECT_EQ(r.test_class_norms.size(), 3u);
}

TEST(Training, NumericBlowupIsReported) {
  RunConfig c = small_config();
  c.sgd.learning_rate = 1e200;
  c.loss = LossKind::cross_entropy;
  const Split s = load_dataset(c);
  EXPECT_THROW(train(c, s.train, s.test), NumericError);
}

TEST(Evaluate, ClassMeanNorms) {
  Matrix e(3, 2);
  e(0, 0) = 3.0;
  e(0, 1) = 4.0;
  e(1, 0) = 1.0;
  e(2, 1) = 2.0;
  const Vector n = class_mean_norms(e, std::vector<std::size_t>{0, 0, 2}, 3);
  EXPECT_DOUBLE_EQ(n[0], 3.0);
  EXPECT_TRUE(std::isnan(n[1]));
  EXPECT_DOUBLE_EQ(n[2], 2.0);
}

TEST(Evaluate, VerifyAndClassifyRun) {
  const RunConfig c = small_config();
  const Split s = load_dataset(c);
  const TrainResult r = train(c, s.train, s.test);
  const ClassifyReport cr = evaluate_classify(r.model, s.test);
  EXPECT_DOUBLE_EQ(cr.acc_radial, r.final_test.acc_radial);
  const VerificationResult v = evaluate_verify(r.model, s.test, DistanceMetric::euclidean, 10, 1);
  EXPECT_GE(v.best_accuracy, 0.5);
  EXPECT_LE(v.best_accuracy, 1.0);
}
