#include "mzet/model.hpp"

#include <sstream>

#include "mzet/errors.hpp"

namespace mzet {
namespace {

template <typename Fn>
void VisitBiLstm(const std::string& prefix, BiLstmParams& p, Fn&& fn) {
  fn(prefix + ".fwd.w", p.fwd.w);
  fn(prefix + ".fwd.b", p.fwd.b);
  fn(prefix + ".bwd.w", p.bwd.w);
  fn(prefix + ".bwd.b", p.bwd.b);
}

template <typename Fn>
void Visit(ModelParams& p, Fn&& fn) {
  fn("encoder.char_embedding", p.encoder.char_embedding);
  VisitBiLstm("encoder.char_lstm", p.encoder.char_lstm, fn);
  VisitBiLstm("encoder.wordchar_lstm", p.encoder.wordchar_lstm, fn);
  VisitBiLstm("encoder.mention_lstm", p.encoder.mention_lstm, fn);
  VisitBiLstm("encoder.context_lstm", p.encoder.context_lstm, fn);
  VisitBiLstm("encoder.context_lstm_right", p.encoder.context_lstm_right, fn);
  fn("encoder.w_e", p.encoder.w_e);
  fn("encoder.w_a", p.encoder.w_a);
  fn("memory.w_map", p.memory.w_map);
  fn("memory.w_f1", p.memory.w_f1);
  fn("memory.w_f2", p.memory.w_f2);
  fn("memory.w_p", p.memory.w_p);
  fn("baseline.a_map", p.baseline.a_map);
  fn("baseline.b_map", p.baseline.b_map);
}

}  // namespace

std::string Ablations::ToString() const {
  std::vector<std::string> names;
  if (no_memory) names.push_back("no_memory");
  if (no_context_attn) names.push_back("no_context_attn");
  if (no_word_char) names.push_back("no_word_char");
  if (no_bert_mention) names.push_back("no_bert_mention");
  std::string out;
  for (size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i];
  return out;
}

Ablations Ablations::Parse(const std::string& text) {
  Ablations a;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item == "none") continue;
    if (item == "no_memory") a.no_memory = true;
    else if (item == "no_context_attn") a.no_context_attn = true;
    else if (item == "no_word_char") a.no_word_char = true;
    else if (item == "no_bert_mention") a.no_bert_mention = true;
    else throw ConfigError("unknown ablation '" + item + "'");
  }
  if (a.no_context_attn && a.no_word_char && a.no_bert_mention) {
    throw ConfigError("at least one mention component must stay enabled");
  }
  return a;
}

std::vector<NamedTensor> ModelParams::Tensors() {
  std::vector<NamedTensor> out;
  Visit(*this, [&](const std::string& name, Mat& m) {
    if (m.size() > 0) out.push_back({name, &m});
  });
  return out;
}

std::vector<std::pair<std::string, const Mat*>> ModelParams::Tensors() const {
  std::vector<std::pair<std::string, const Mat*>> out;
  for (auto& t : const_cast<ModelParams*>(this)->Tensors()) out.emplace_back(t.name, t.value);
  return out;
}

ModelParams ModelParams::ZerosLike() const {
  ModelParams z = *this;
  z.SetZero();
  return z;
}

void ModelParams::SetZero() {
  for (auto& t : Tensors()) t.value->setZero();
}

Model Model::Init(const ModelConfig& config, uint64_t seed) {
  if (config.d_seen <= 0) throw DimensionError("model needs at least one seen type");
  if (config.memory_dim <= 0) throw DimensionError("memory width must be positive");
  Rng rng(seed);
  Model model;
  model.config = config;
  model.params.encoder = EncoderParams::Init(config.encoder, rng);
  const int d_e = config.encoder.mention_dim();
  const int d_b = config.label_dim();
  model.params.memory = MemoryParams::Init(d_e, d_b, config.d_seen, config.memory_dim, rng);
  model.params.baseline = BilinearParams::Init(config.resolved_shared_dim(), d_e, d_b, rng);
  return model;
}

ScoringContext MakeScoringContext(const Model& model, const LabelBank& bank, const TypeHierarchy& h,
                                  CandidateSet set, NormalizationAxis axis) {
  if (bank.d_b() != model.config.label_dim()) {
    throw DimensionError("label representation width " + std::to_string(bank.d_b()) +
                         " differs from the model's " + std::to_string(model.config.label_dim()));
  }
  if (h.d_seen() != model.config.d_seen) {
    throw DimensionError("hierarchy has " + std::to_string(h.d_seen()) + " seen types, model expects " +
                         std::to_string(model.config.d_seen));
  }
  ScoringContext ctx;
  const Mat r_train = SimilarityMatrix(bank, h, SimilarityMode::kTraining, axis);
  switch (set) {
    case CandidateSet::kSeen:
      ctx.candidate_ids = h.SeenIds();
      ctx.r = r_train;
      break;
    case CandidateSet::kUnseen:
      ctx.candidate_ids = h.UnseenIds();
      ctx.r = SimilarityMatrix(bank, h, SimilarityMode::kZeroShot, axis);
      break;
    case CandidateSet::kAll: {
      ctx.candidate_ids = h.SeenIds();
      for (int id : h.UnseenIds()) ctx.candidate_ids.push_back(id);
      const Mat r_zero = SimilarityMatrix(bank, h, SimilarityMode::kZeroShot, axis);
      ctx.r.resize(h.d_seen(), h.size());
      ctx.r << r_train, r_zero;
      break;
    }
  }
  ctx.candidates.resize(static_cast<Eigen::Index>(ctx.candidate_ids.size()), bank.d_b());
  for (size_t j = 0; j < ctx.candidate_ids.size(); ++j)
    ctx.candidates.row(static_cast<Eigen::Index>(j)) = bank.reprs.row(ctx.candidate_ids[j]);
  ctx.memory.f_seen = bank.reprs.topRows(h.d_seen());
  RefreshMemory(model, &ctx);
  return ctx;
}

void RefreshMemory(const Model& model, ScoringContext* ctx) {
  ctx->memory = BuildMemory(model.params.memory, ctx->memory.f_seen);
}

PredictionRecord Forward(const Model& model, const ScoringContext& ctx, const MentionInput& in,
                         ForwardTrace* trace) {
  ForwardTrace local;
  ForwardTrace& t = trace ? *trace : local;
  const auto& cfg = model.config;
  t.repr = Encode(model.params.encoder, in, cfg.ablations.Toggles(),
                  cfg.encoder.separate_context_lstm, &t.encode);
  if (cfg.ablations.no_memory) {
    PredictionRecord rec;
    t.score.logits = BilinearScores(model.params.baseline, t.repr.m, ctx.candidates);
    t.score.m = t.repr.m;
    rec.scores = Sigmoid(t.score.logits);
    return rec;
  }
  return Score(model.params.memory, ctx.memory, t.repr.m, ctx.r, &t.score);
}

void Backward(const Model& model, const ScoringContext& ctx, const MentionInput& in,
              const ForwardTrace& t, const PredictionRecord& rec, const Vec& d_scores,
              ModelParams* grad) {
  const auto& cfg = model.config;
  Vec d_m;
  if (cfg.ablations.no_memory) {
    const Vec d_raw = d_scores.cwiseProduct(rec.scores.cwiseProduct((1.0 - rec.scores.array()).matrix()));
    d_m = BackpropBilinear(model.params.baseline, t.repr.m, ctx.candidates, d_raw, &grad->baseline);
  } else {
    d_m = BackpropScore(model.params.memory, ctx.memory, ctx.r, rec, t.score, d_scores, &grad->memory);
  }
  BackpropEncode(model.params.encoder, in, cfg.ablations.Toggles(), cfg.encoder.separate_context_lstm,
                 t.encode, d_m, &grad->encoder);
}

}  // namespace mzet
