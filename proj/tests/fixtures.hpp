#pragma once

#include <string>
#include <vector>

#include "mzet/grad_check.hpp"
#include "mzet/pipeline.hpp"
#include "mzet/model.hpp"
#include "mzet/training.hpp"
#include "test_util.hpp"

namespace fixture {

using namespace mzet;

// A toy problem small enough for finite differences: 4 seen coarse types
// with 3 unseen children, random label semantics and random mention inputs.
struct TinyProblem {
  TypeHierarchy h;
  LabelBank bank;
  Model model;
  std::vector<MentionInput> inputs;
  std::vector<TrainingExample> examples;
};

inline TinyProblem MakeTiny(uint64_t seed, int hidden = 8, int memory_dim = 6, int width = 5,
                            bool no_memory = false, int n_examples = 2) {
  TinyProblem t;
  t.h = TypeHierarchy::Build({"/A", "/B", "/C", "/D", "/A/X", "/B/Y", "/C/Z"}, {1});
  Rng rng(seed);
  const int d_b = 4;
  t.bank = BuildLabelReprs(testutil::RandMat(rng, t.h.size(), d_b), BuildHierMatrix(t.h));

  ModelConfig mc;
  mc.encoder.char_vocab = 5;
  mc.encoder.char_dim = 3;
  mc.encoder.char_hidden = 4;
  mc.encoder.word_dim = 3;
  mc.encoder.ctx_dim = 4;
  mc.encoder.hidden = hidden;
  mc.encoder.attn_dim = 3;
  mc.memory_dim = memory_dim;
  mc.label_width = d_b;
  mc.d_seen = t.h.d_seen();
  mc.ablations.no_memory = no_memory;
  t.model = Model::Init(mc, seed + 100);
  // Break the symmetric initialization so gradients are generic.
  for (auto& tensor : t.model.params.Tensors())
    *tensor.value += testutil::RandMat(rng, static_cast<int>(tensor.value->rows()),
                                       static_cast<int>(tensor.value->cols()), 0.3);

  for (int e = 0; e < n_examples; ++e) {
    MentionInput in;
    const int k = 1 + static_cast<int>(rng.Below(3));
    for (int i = 0; i < k; ++i) {
      in.char_ids.push_back({static_cast<int>(rng.Below(5)), static_cast<int>(rng.Below(5))});
      in.word_vectors.push_back(testutil::RandVec(rng, 3));
      in.mention_ctx.push_back(testutil::RandVec(rng, 4));
    }
    in.window.left = testutil::RandMat(rng, width, 4);
    in.window.right = testutil::RandMat(rng, width, 4);
    in.window.left_pad.assign(width, false);
    in.window.right_pad.assign(width, false);
    in.window.left_pad[width - 1] = true;
    in.window.left.row(width - 1).setZero();
    t.inputs.push_back(in);
  }
  for (int e = 0; e < n_examples; ++e)
    t.examples.push_back({"m" + std::to_string(e), &t.inputs[e], {e % t.h.d_seen()}});
  return t;
}

// Checks every trainable tensor of the model against the seen-mode margin
// loss over all examples of the problem.
inline GradCheckReport CheckModelGradients(TinyProblem& t, double epsilon = 1e-4) {
  TrainConfig tc;
  auto ctx = MakeScoringContext(t.model, t.bank, t.h, CandidateSet::kSeen);
  ModelParams grad = t.model.params.ZerosLike();
  ComputeBatch(t.model, ctx, t.examples, tc, &grad);
  ModelParams scratch = t.model.params.ZerosLike();
  auto loss = [&] {
    RefreshMemory(t.model, &ctx);
    const BatchLoss bl = ComputeBatch(t.model, ctx, t.examples, tc, &scratch);
    return LossProbe{bl.loss, bl.signature + static_cast<uint64_t>(bl.kinks) * 0x9e3779b97f4a7c15ULL};
  };
  std::vector<GradCheckEntry> entries;
  auto values = t.model.params.Tensors();
  auto grads = grad.Tensors();
  for (size_t i = 0; i < values.size(); ++i) entries.push_back({values[i].name, values[i].value, grads[i].value});
  return GradCheck(entries, loss, epsilon);
}

// Desk-scale training settings used by the end-to-end tests.
inline Config SmallTrainingConfig(const SyntheticFiles& files) {
  Config c;
  c.MergeFile(files.config);
  c.Set("hidden", "16");
  c.Set("char_hidden", "8");
  c.Set("attn_dim", "16");
  c.Set("memory_dim", "16");
  c.Set("batch_size", "16");
  c.Set("epochs", "15");
  c.Set("lr", "0.003");
  return c;
}

}  // namespace fixture
