#include "mzet/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <thread>

#include "mzet/errors.hpp"
#include "mzet/random.hpp"

namespace mzet {
namespace {

uint64_t Mix(uint64_t h, uint64_t v) {
  h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return h;
}

struct Partial {
  double loss_sum = 0.0;
  size_t counted = 0;
  size_t skipped = 0;
  uint64_t signature = 0;
  int kinks = 0;
};

// Unnormalized loss/gradient sums over batch[begin, end).
Partial Accumulate(const Model& model, const ScoringContext& ctx,
                   std::span<const TrainingExample> batch, size_t begin, size_t end,
                   const TrainConfig& config, uint64_t negative_seed, ModelParams* grad) {
  Partial part;
  const int d_s = model.config.d_seen;
  ForwardTrace trace;
  for (size_t k = begin; k < end; ++k) {
    const TrainingExample& ex = batch[k];
    std::vector<int> negatives;
    for (int j = 0; j < d_s; ++j)
      if (std::find(ex.positives.begin(), ex.positives.end(), j) == ex.positives.end())
        negatives.push_back(j);
    if (config.negative_cap > 0 && static_cast<int>(negatives.size()) > config.negative_cap) {
      Rng rng(Mix(negative_seed, HashKey(ex.id)));
      rng.Shuffle(negatives);
      negatives.resize(config.negative_cap);
      std::sort(negatives.begin(), negatives.end());
    }
    const PredictionRecord rec = Forward(model, ctx, *ex.input, &trace);
    const MarginLoss ml = ComputeMarginLoss(rec.scores, ex.positives, negatives, config.margin);
    part.signature = Mix(part.signature, ml.signature);
    part.kinks += ml.kinks;
    if (ml.skipped) {
      ++part.skipped;
      continue;
    }
    part.loss_sum += ml.loss;
    ++part.counted;
    Backward(model, ctx, *ex.input, trace, rec, ml.d_scores, grad);
  }
  return part;
}

void Scale(ModelParams* grad, double factor) {
  for (auto& t : grad->Tensors()) *t.value *= factor;
}

void AddInto(ModelParams* dst, ModelParams& src) {
  auto d = dst->Tensors();
  auto s = src.Tensors();
  for (size_t i = 0; i < d.size(); ++i) *d[i].value += *s[i].value;
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
  if (!(margin > 0)) throw ConfigError("margin must be positive");
  if (!(decay_rate > 0) || decay_rate > 1) throw ConfigError("decay rate must be in (0, 1]");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (decay_steps < 0 || negative_cap < 0) throw ConfigError("decay_steps/negative_cap must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

MarginLoss ComputeMarginLoss(const Vec& scores, std::span<const int> positives,
                             std::span<const int> negatives, double margin) {
  MarginLoss out;
  out.d_scores = Vec::Zero(scores.size());
  if (positives.empty() || negatives.empty()) {
    out.skipped = true;
    return out;
  }
  uint64_t sig = 1469598103934665603ULL;
  for (int pos : positives) {
    for (int neg : negatives) {
      const double hinge = margin - scores[pos] + scores[neg];
      const bool active = hinge > 0.0;
      sig = (sig ^ static_cast<uint64_t>(active ? 2 : (hinge == 0.0 ? 1 : 0))) * 1099511628211ULL;
      if (hinge == 0.0) ++out.kinks;
      if (!active) continue;
      out.loss += hinge;
      out.d_scores[pos] -= 1.0;
      out.d_scores[neg] += 1.0;
    }
  }
  out.signature = sig;
  return out;
}

void AdamStep(std::span<Mat* const> params, std::span<const Mat* const> grads, AdamState* st,
              double lr) {
  if (params.size() != grads.size()) throw DimensionError("parameter/gradient count mismatch");
  if (st->m.empty()) {
    for (Mat* p : params) {
      st->m.push_back(Mat::Zero(p->rows(), p->cols()));
      st->v.push_back(Mat::Zero(p->rows(), p->cols()));
    }
  }
  if (st->m.size() != params.size()) throw DimensionError("optimizer state does not match parameters");
  ++st->step;
  const double c1 = 1.0 - std::pow(st->beta1, static_cast<double>(st->step));
  const double c2 = 1.0 - std::pow(st->beta2, static_cast<double>(st->step));
  for (size_t i = 0; i < params.size(); ++i) {
    Mat& p = *params[i];
    const Mat& g = *grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols()) {
      throw DimensionError("gradient shape mismatch for tensor " + std::to_string(i));
    }
    st->m[i] = st->beta1 * st->m[i] + (1.0 - st->beta1) * g;
    st->v[i] = st->beta2 * st->v[i] + (1.0 - st->beta2) * g.cwiseProduct(g);
    p.array() -= lr * (st->m[i].array() / c1) / ((st->v[i].array() / c2).sqrt() + st->epsilon);
  }
}

BatchLoss ComputeBatch(const Model& model, const ScoringContext& ctx,
                       std::span<const TrainingExample> batch, const TrainConfig& config,
                       ModelParams* grad, uint64_t negative_seed) {
  grad->SetZero();
  const size_t n = batch.size();
  const size_t workers = std::min<size_t>(static_cast<size_t>(config.threads), std::max<size_t>(n, 1));
  std::vector<Partial> parts(workers);
  if (workers <= 1) {
    parts[0] = Accumulate(model, ctx, batch, 0, n, config, negative_seed, grad);
  } else {
    // Fixed contiguous chunks reduced in chunk order keep the sum deterministic.
    std::vector<ModelParams> local(workers - 1, grad->ZerosLike());
    std::vector<std::thread> pool;
    auto bounds = [&](size_t w) { return std::pair{n * w / workers, n * (w + 1) / workers}; };
    for (size_t w = 1; w < workers; ++w) {
      pool.emplace_back([&, w] {
        auto [b, e] = bounds(w);
        parts[w] = Accumulate(model, ctx, batch, b, e, config, negative_seed, &local[w - 1]);
      });
    }
    auto [b0, e0] = bounds(0);
    parts[0] = Accumulate(model, ctx, batch, b0, e0, config, negative_seed, grad);
    for (auto& t : pool) t.join();
    for (auto& l : local) AddInto(grad, l);
  }
  BatchLoss out;
  double sum = 0.0;
  for (const Partial& p : parts) {
    sum += p.loss_sum;
    out.counted += p.counted;
    out.skipped += p.skipped;
    out.signature = Mix(out.signature, p.signature);
    out.kinks += p.kinks;
  }
  if (out.counted > 0) {
    out.loss = sum / static_cast<double>(out.counted);
    Scale(grad, 1.0 / static_cast<double>(out.counted));
  }
  return out;
}

TrainResult Train(const TrainConfig& config, std::span<const TrainingExample> examples, Model* model,
                  const LabelBank& bank, const TypeHierarchy& h,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  config.Validate();
  TrainResult result;
  if (config.epochs == 0) return result;
  ScoringContext ctx = MakeScoringContext(*model, bank, h, CandidateSet::kSeen, config.axis);
  for (const auto& ex : examples)
    for (int id : ex.positives)
      if (id < 0 || id >= h.d_seen())
        throw LabelingError("training example '" + ex.id + "' has a non-seen gold label");

  ModelParams grad = model->params.ZerosLike();
  auto param_tensors = model->params.Tensors();
  auto grad_tensors = grad.Tensors();
  std::vector<Mat*> params;
  std::vector<const Mat*> grads;
  for (size_t i = 0; i < param_tensors.size(); ++i) {
    params.push_back(param_tensors[i].value);
    grads.push_back(grad_tensors[i].value);
  }

  AdamState adam;
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(config.seed ^ 0xB47C4ULL);
  long step = 0;
  std::vector<TrainingExample> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.Shuffle(order);
    const double epoch_lr = config.learning_rate * std::pow(config.decay_rate, epoch);
    double loss_sum = 0.0;
    double logged_lr = -1.0;
    size_t counted = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      batch.clear();
      for (size_t k = start; k < end; ++k) batch.push_back(examples[order[k]]);
      const uint64_t neg_seed = Mix(config.seed, static_cast<uint64_t>(step));
      const BatchLoss bl = ComputeBatch(*model, ctx, batch, config, &grad, neg_seed);
      if (epoch == 0) result.skipped_examples += bl.skipped;
      if (!std::isfinite(bl.loss)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", step " +
                              std::to_string(step));
      }
      if (bl.counted == 0) continue;
      loss_sum += bl.loss * static_cast<double>(bl.counted);
      counted += bl.counted;
      const double lr = config.decay_steps > 0
                            ? config.learning_rate *
                                  std::pow(config.decay_rate, static_cast<double>(step / config.decay_steps))
                            : epoch_lr;
      if (logged_lr < 0) logged_lr = lr;
      AdamStep(params, grads, &adam, lr);
      RefreshMemory(*model, &ctx);
      ++step;
    }
    EpochLog entry{epoch + 1, counted ? loss_sum / static_cast<double>(counted) : 0.0,
                   logged_lr < 0 ? epoch_lr : logged_lr};
    if (!std::isfinite(entry.mean_loss)) {
      throw DivergenceError("non-finite mean loss at epoch " + std::to_string(epoch + 1));
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

void WriteTrainLog(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write training log: " + path);
  out << "epoch,mean_loss,lr\n" << std::setprecision(17);
  for (const auto& e : log) out << e.epoch << ',' << e.mean_loss << ',' << e.lr << '\n';
}

}  // namespace mzet
