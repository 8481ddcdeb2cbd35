#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mzet/model.hpp"

namespace mzet {

struct TrainConfig {
  double learning_rate = 1e-4;
  double decay_rate = 0.9;
  int decay_steps = 0;  // 0: decay once per epoch; N: once every N optimizer steps
  double margin = 1.0;
  int epochs = 30;
  int batch_size = 64;
  uint64_t seed = 1;
  int negative_cap = 0;  // 0: every non-gold seen type is a negative
  int threads = 1;
  NormalizationAxis axis = NormalizationAxis::kSeen;

  void Validate() const;
};

struct MarginLoss {
  double loss = 0.0;
  bool skipped = false;   // no positive (or no negative) labels
  Vec d_scores;           // subgradient, 0 at the kink
  uint64_t signature = 0; // hash of the active hinge set
  int kinks = 0;          // pairs sitting exactly on the hinge
};

// sum_{pos} sum_{neg} max(0, margin - p_pos + p_neg)
MarginLoss ComputeMarginLoss(const Vec& scores, std::span<const int> positives,
                             std::span<const int> negatives, double margin = 1.0);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<Mat> m;
  std::vector<Mat> v;
};

void AdamStep(std::span<Mat* const> params, std::span<const Mat* const> grads, AdamState* state,
              double lr);

struct TrainingExample {
  std::string id;
  const MentionInput* input = nullptr;
  std::vector<int> positives;  // seen ids
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  size_t skipped_examples = 0;
};

// Loss and gradient over a set of examples, averaged over the examples that
// contribute. *grad is overwritten. rng drives negative sampling when
// negative_cap > 0.
struct BatchLoss {
  double loss = 0.0;
  size_t counted = 0;
  size_t skipped = 0;
  uint64_t signature = 0;
  int kinks = 0;
};

BatchLoss ComputeBatch(const Model& model, const ScoringContext& ctx,
                       std::span<const TrainingExample> batch, const TrainConfig& config,
                       ModelParams* grad, uint64_t negative_seed = 0);

// Seen-mode training with per-epoch shuffling. Throws DivergenceError on a
// non-finite loss.
TrainResult Train(const TrainConfig& config, std::span<const TrainingExample> examples,
                  Model* model, const LabelBank& bank, const TypeHierarchy& h,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

void WriteTrainLog(const std::string& path, const std::vector<EpochLog>& log);

}  // namespace mzet
