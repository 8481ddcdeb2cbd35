#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mzet/errors.hpp"
#include "mzet/grad_check.hpp"
#include "mzet/lstm.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mzet;

namespace {

std::vector<Vec> RandSeq(Rng& rng, int n, int dim) {
  std::vector<Vec> s;
  for (int i = 0; i < n; ++i) s.push_back(testutil::RandVec(rng, dim));
  return s;
}

LstmParams RandLstm(Rng& rng, int in, int hd) {
  return {testutil::RandMat(rng, 4 * hd, in + hd, 0.8), testutil::RandMat(rng, 4 * hd, 1, 0.5)};
}

}  // namespace

TEST_CASE("zero weights give zero states") {
  auto p = BiLstmParams::Zeros(3, 4);
  Rng rng(1);
  auto run = RunBiLstm(p, RandSeq(rng, 5, 3));
  CHECK(run.Final().isZero());
  for (size_t t = 0; t < 5; ++t) CHECK(run.Output(t).isZero());
}

TEST_CASE("length one: final equals the single step in both directions") {
  Rng rng(2);
  BiLstmParams p = BiLstmParams::Init(3, 4, rng);
  auto run = RunBiLstm(p, RandSeq(rng, 1, 3));
  CHECK(run.Final() == run.Output(0));
}

TEST_CASE("init: forget bias one, glorot bound") {
  Rng rng(3);
  auto p = LstmParams::Init(5, 4, rng);
  CHECK(p.b.block(4, 0, 4, 1).isOnes());
  CHECK(p.b.block(0, 0, 4, 1).isZero());
  CHECK(p.b.block(8, 0, 8, 1).isZero());
  CHECK(p.w.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / (9 + 16)));
  CHECK(p.input_dim() == 5);
  CHECK(p.hidden_dim() == 4);
}

TEST_CASE("width mismatch is a dimension error") {
  Rng rng(4);
  auto p = LstmParams::Init(3, 2, rng);
  std::vector<Vec> seq = {Vec::Zero(4)};
  CHECK_THROWS_AS(RunLstm(p, seq, {}, false), DimensionError);
  std::vector<Vec> ok = {Vec::Zero(3)};
  CHECK_THROWS_AS(RunLstm(p, ok, {true, false}, false), DimensionError);
}

TEST_CASE("property: matches the step-by-step oracle with random masks") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int in = 1 + static_cast<int>(rng.Below(4)), hd = 1 + static_cast<int>(rng.Below(4));
    const int n = static_cast<int>(rng.Below(6));
    auto p = RandLstm(rng, in, hd);
    auto seq = RandSeq(rng, n, in);
    std::vector<bool> pad(n);
    for (int t = 0; t < n; ++t) pad[t] = rng.Below(4) == 0;
    for (bool reverse : {false, true}) {
      auto run = RunLstm(p, seq, pad, reverse);
      auto ref = oracle::Lstm(p.w, p.b, seq, pad, reverse);
      CHECK((run.final_h - ref.final_h).cwiseAbs().maxCoeff() <= 1e-12);
      for (int t = 0; t < n; ++t) {
        CHECK((run.outputs[t] - ref.outputs[t]).cwiseAbs().maxCoeff() <= 1e-12);
        if (pad[t]) CHECK(run.outputs[t].isZero());
      }
    }
  }
}

TEST_CASE("fully masked sequence returns zeros") {
  Rng rng(6);
  auto p = BiLstmParams::Init(2, 3, rng);
  auto run = RunBiLstm(p, RandSeq(rng, 3, 2), {true, true, true});
  CHECK(run.Final().isZero());
}

TEST_CASE("gradient check through a BiLSTM with padding") {
  Rng rng(7);
  BiLstmParams p{RandLstm(rng, 3, 2), RandLstm(rng, 3, 2)};
  auto seq = RandSeq(rng, 4, 3);
  const std::vector<bool> pad = {false, true, false, false};
  std::vector<Vec> wo;
  for (int t = 0; t < 4; ++t) wo.push_back(testutil::RandVec(rng, 4));
  const Vec wf = testutil::RandVec(rng, 4);
  auto loss = [&] {
    auto run = RunBiLstm(p, seq, pad);
    double l = wf.dot(run.Final());
    for (int t = 0; t < 4; ++t) l += wo[t].dot(run.Output(t));
    return LossProbe{l, 0};
  };
  BiLstmParams grad = BiLstmParams::Zeros(3, 2);
  auto run = RunBiLstm(p, seq, pad);
  auto d_in = BackpropBiLstm(p, run, wo, wf, &grad);
  std::vector<GradCheckEntry> entries = {{"fwd.w", &p.fwd.w, &grad.fwd.w},
                                         {"fwd.b", &p.fwd.b, &grad.fwd.b},
                                         {"bwd.w", &p.bwd.w, &grad.bwd.w},
                                         {"bwd.b", &p.bwd.b, &grad.bwd.b}};
  auto report = GradCheck(entries, loss);
  CHECK(report.max_rel_error < 1e-6);
  CHECK(report.checked == static_cast<size_t>(2 * (8 * 5 + 8)));

  // Input gradients, including zero for the padded step.
  CHECK(d_in[1].isZero());
  std::vector<Mat> xs;
  for (auto& v : seq) xs.push_back(v);
  std::vector<Mat> d_xs;
  for (auto& v : d_in) d_xs.push_back(v);
  auto loss_x = [&] {
    for (int t = 0; t < 4; ++t) seq[t] = xs[t].col(0);
    return loss();
  };
  std::vector<GradCheckEntry> inputs;
  for (int t = 0; t < 4; ++t) inputs.push_back({"x" + std::to_string(t), &xs[t], &d_xs[t]});
  CHECK(GradCheck(inputs, loss_x).max_rel_error < 1e-6);
}

TEST_CASE("grad check harness: linear model and kink exclusion") {
  Mat w(1, 1);
  w << 0.7;
  Mat g(1, 1);
  g << 3.0;
  std::vector<GradCheckEntry> e = {{"w", &w, &g}};
  auto r = GradCheck(e, [&] { return LossProbe{3.0 * w(0, 0), 0}; });
  CHECK(std::abs(r.worst_numeric - 3.0) < 1e-8);
  CHECK(r.max_rel_error < 1e-8);

  // Hinge max(0, 1 - w) evaluated at the kink w = 1.
  w << 1.0;
  g << 0.0;  // subgradient convention
  auto hinge = [&] {
    const double v = 1.0 - w(0, 0);
    return LossProbe{std::max(0.0, v), static_cast<uint64_t>(v > 0 ? 2 : (v == 0 ? 1 : 0))};
  };
  auto k = GradCheck(e, hinge);
  CHECK(k.excluded == 1);
  CHECK(k.checked == 0);
}
