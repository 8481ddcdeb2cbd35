#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "mzet/errors.hpp"
#include "mzet/training.hpp"
#include "oracles.hpp"

using namespace mzet;

namespace {

Vec V(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("margin loss examples") {
  std::vector<int> pos = {0}, neg = {1};
  CHECK(ComputeMarginLoss(V({0.9, 0.1}), pos, neg).loss == doctest::Approx(0.2));
  CHECK(ComputeMarginLoss(V({1.0, 0.0}), pos, neg).loss == 0.0);
  CHECK(ComputeMarginLoss(V({0.0, 1.0}), pos, neg).loss == doctest::Approx(2.0));
  std::vector<int> neg2 = {1, 2};
  auto ml = ComputeMarginLoss(V({0.2, 0.3, 0.9}), pos, neg2);
  CHECK(ml.loss == doctest::Approx(1.1 + 1.7));
  CHECK(ml.d_scores[0] == -2.0);
  CHECK(ml.d_scores[1] == 1.0);
  CHECK(ml.d_scores[2] == 1.0);
  // exactly on the hinge: zero subgradient, counted as a kink
  auto kink = ComputeMarginLoss(V({1.0, 0.0}), pos, neg);
  CHECK(kink.d_scores.isZero());
  CHECK(kink.kinks == 1);
  CHECK(ComputeMarginLoss(V({0.5}), pos, {}).skipped);
  CHECK(ComputeMarginLoss(V({0.5}), {}, neg).skipped);
}

TEST_CASE("property: margin loss matches the oracle and is non-negative") {
  Rng rng(1);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 2 + static_cast<int>(rng.Below(6));
    Vec s(n);
    std::vector<double> sv(n);
    for (int i = 0; i < n; ++i) sv[i] = s[i] = rng.Uniform(0.0, 1.0);
    std::vector<int> pos, neg;
    for (int i = 0; i < n; ++i) (rng.Below(3) == 0 ? pos : neg).push_back(i);
    auto ml = ComputeMarginLoss(s, pos, neg);
    CHECK(ml.loss >= 0.0);
    if (pos.empty() || neg.empty()) {
      CHECK(ml.skipped);
      continue;
    }
    CHECK(std::abs(ml.loss - oracle::MarginLoss(sv, pos, neg)) <= 1e-12);
    // a perfectly separated prediction costs nothing
    Vec ideal = Vec::Zero(n);
    for (int i : pos) ideal[i] = 1.0;
    CHECK(ComputeMarginLoss(ideal, pos, neg).loss == 0.0);
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Mat w = Mat::Constant(2, 2, 0.5), g = Mat::Zero(2, 2);
    Mat* ws[] = {&w};
    const Mat* gs[] = {&g};
    AdamState st;
    AdamStep(ws, gs, &st, 0.1);
    CHECK(w == Mat::Constant(2, 2, 0.5));
  }
  SUBCASE("first step moves by about lr against the gradient sign") {
    Mat w(1, 3), g(1, 3);
    w << 0.0, 1.0, -1.0;
    g << 3.0, -0.01, 200.0;
    Mat* ws[] = {&w};
    const Mat* gs[] = {&g};
    AdamState st;
    AdamStep(ws, gs, &st, 0.01);
    CHECK(w(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(w(0, 1) == doctest::Approx(1.01).epsilon(1e-6));
    CHECK(w(0, 2) == doctest::Approx(-1.01).epsilon(1e-6));
  }
  SUBCASE("two steps against a scalar reference") {
    Mat w(1, 1), g(1, 1);
    w << 1.0;
    Mat* ws[] = {&w};
    const Mat* gs[] = {&g};
    AdamState st;
    double ref = 1.0, m = 0, v = 0;
    const double grads[] = {0.4, -1.3};
    for (int t = 1; t <= 2; ++t) {
      g << grads[t - 1];
      AdamStep(ws, gs, &st, 0.05);
      m = 0.9 * m + 0.1 * grads[t - 1];
      v = 0.999 * v + 0.001 * grads[t - 1] * grads[t - 1];
      const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
      ref -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(w(0, 0) == doctest::Approx(ref).epsilon(1e-12));
    }
    CHECK(st.step == 2);
  }
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.Validate();
  c.batch_size = 0;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = {};
  c.learning_rate = -1;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = {};
  c.epochs = -1;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
}

TEST_CASE("gradient check: full model on a toy problem") {
  for (uint64_t seed : {1ULL, 2ULL}) {
    auto t = fixture::MakeTiny(seed);
    auto report = fixture::CheckModelGradients(t);
    INFO("seed ", seed, " worst ", report.worst_tensor, "[", report.worst_index, "] a=", report.worst_analytic,
         " n=", report.worst_numeric);
    CHECK(report.checked > 500);
    CHECK(report.max_rel_error < 1e-3);
  }
}

TEST_CASE("gradient check: bilinear baseline model") {
  auto t = fixture::MakeTiny(3, 8, 6, 5, true);
  auto report = fixture::CheckModelGradients(t);
  INFO(report.worst_tensor);
  CHECK(report.max_rel_error < 1e-3);
}

TEST_CASE("threads give the same gradient") {
  auto t = fixture::MakeTiny(4, 8, 6, 5, false, 6);
  auto ctx = MakeScoringContext(t.model, t.bank, t.h, CandidateSet::kSeen);
  TrainConfig one, four;
  four.threads = 4;
  auto g1 = t.model.params.ZerosLike(), g4 = t.model.params.ZerosLike();
  auto l1 = ComputeBatch(t.model, ctx, t.examples, one, &g1);
  auto l4 = ComputeBatch(t.model, ctx, t.examples, four, &g4);
  CHECK(l1.loss == doctest::Approx(l4.loss).epsilon(1e-12));
  auto a = g1.Tensors(), b = g4.Tensors();
  for (size_t i = 0; i < a.size(); ++i) CHECK((*a[i].value - *b[i].value).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero epochs leave the model untouched") {
  auto t = fixture::MakeTiny(5);
  const Model before = t.model;
  TrainConfig c;
  c.epochs = 0;
  auto res = Train(c, t.examples, &t.model, t.bank, t.h);
  CHECK(res.log.empty());
  auto a = before.params.Tensors();
  auto b = t.model.params.Tensors();
  for (size_t i = 0; i < a.size(); ++i) CHECK(*a[i].second == *b[i].value);
}

TEST_CASE("examples without seen labels are skipped") {
  auto t = fixture::MakeTiny(6);
  t.examples[0].positives.clear();
  TrainConfig c;
  c.epochs = 1;
  auto res = Train(c, t.examples, &t.model, t.bank, t.h);
  CHECK(res.skipped_examples == 1);
}

TEST_CASE("training on a separable synthetic corpus") {
  testutil::TempDir dir;
  SyntheticSpec spec;
  spec.examples_per_type = 30;
  auto files = GenerateSynthetic(spec, dir.path());
  Config c = fixture::SmallTrainingConfig(files);
  auto data = LoadDataset(c);
  std::vector<EpochLog> seen;
  auto a = TrainModel(c, data, [&](const EpochLog& e) { seen.push_back(e); });
  REQUIRE(a.result.log.size() == 15);
  CHECK(seen.size() == 15);
  CHECK(a.result.log.back().mean_loss < 0.1 * a.result.log.front().mean_loss);
  CHECK(a.result.log[0].lr == doctest::Approx(0.003));
  CHECK(a.result.log[2].lr == doctest::Approx(0.003 * 0.81));

  auto b = TrainModel(c, data);
  for (size_t i = 0; i < 15; ++i) CHECK(a.result.log[i].mean_loss == b.result.log[i].mean_loss);
  auto ta = a.model.params.Tensors();
  auto tb = b.model.params.Tensors();
  for (size_t i = 0; i < ta.size(); ++i) CHECK(*ta[i].value == *tb[i].value);

  c.Set("seed", "2");
  auto other = TrainModel(c, data);
  CHECK(other.result.log[0].mean_loss != a.result.log[0].mean_loss);
}

TEST_CASE("train log csv") {
  testutil::TempDir dir;
  WriteTrainLog((dir.path() / "log.csv").string(), {{1, 0.5, 0.01}, {2, 0.25, 0.009}});
  const auto text = testutil::ReadFile(dir.path() / "log.csv");
  CHECK(text.rfind("epoch,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
