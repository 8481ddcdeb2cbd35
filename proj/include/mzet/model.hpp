#pragma once

#include <string>
#include <vector>

#include "mzet/memory_network.hpp"
#include "mzet/mention_encoder.hpp"
#include "mzet/ontology.hpp"

namespace mzet {

// Run-time switches for the ablation variants.
struct Ablations {
  bool no_memory = false;        // bilinear scorer instead of the memory network
  bool no_context_attn = false;  // drop m_c
  bool no_word_char = false;     // drop m_w
  bool no_bert_mention = false;  // drop m_b

  EncoderToggles Toggles() const { return {!no_word_char, !no_bert_mention, !no_context_attn}; }
  // Comma-separated names of the enabled flags ("" when none).
  std::string ToString() const;
  static Ablations Parse(const std::string& text);
};

struct ModelConfig {
  EncoderDims encoder;
  int memory_dim = 200;
  int shared_dim = 0;   // 0 means D_b
  int label_width = 0;  // label semantic width; 0 means D_b
  int d_seen = 0;
  Ablations ablations;

  int label_dim() const { return label_width > 0 ? label_width : encoder.ctx_dim; }
  int resolved_shared_dim() const { return shared_dim > 0 ? shared_dim : label_dim(); }
};

struct NamedTensor {
  std::string name;
  Mat* value;
};

struct ModelParams {
  EncoderParams encoder;
  MemoryParams memory;
  BilinearParams baseline;

  // Stable order; empty tensors are omitted.
  std::vector<NamedTensor> Tensors();
  std::vector<std::pair<std::string, const Mat*>> Tensors() const;
  ModelParams ZerosLike() const;
  void SetZero();
};

struct Model {
  ModelConfig config;
  ModelParams params;

  static Model Init(const ModelConfig& config, uint64_t seed);
};

enum class CandidateSet { kSeen, kUnseen, kAll };

// Everything scoring needs besides the mention: candidate ids, the
// similarity matrix against them, their label representations, and the
// memory built from the current parameters.
struct ScoringContext {
  std::vector<int> candidate_ids;
  Mat r;           // D_s x D_cand
  Mat candidates;  // D_cand x D_b
  MemoryState memory;
};

ScoringContext MakeScoringContext(const Model& model, const LabelBank& bank, const TypeHierarchy& h,
                                  CandidateSet set,
                                  NormalizationAxis axis = NormalizationAxis::kSeen);

// Rebuilds G and C after a parameter update.
void RefreshMemory(const Model& model, ScoringContext* ctx);

struct ForwardTrace {
  EncodeTrace encode;
  MentionRepr repr;
  ScoreTrace score;
};

PredictionRecord Forward(const Model& model, const ScoringContext& ctx, const MentionInput& in,
                         ForwardTrace* trace = nullptr);

void Backward(const Model& model, const ScoringContext& ctx, const MentionInput& in,
              const ForwardTrace& trace, const PredictionRecord& record, const Vec& d_scores,
              ModelParams* grad);

}  // namespace mzet
