#pragma once

#include <vector>

#include "mzet/embeddings.hpp"
#include "mzet/lstm.hpp"
#include "mzet/tensor.hpp"

namespace mzet {

struct EncoderDims {
  int char_vocab = 1;
  int char_dim = 30;
  int char_hidden = 100;  // D_hc, both directions
  int word_dim = 300;     // D_w
  int ctx_dim = 768;      // D_b
  int hidden = 400;       // D_h, both directions
  int attn_dim = 100;     // D_a
  bool separate_context_lstm = false;

  int mention_dim() const { return 3 * hidden; }  // D_e
  void Validate() const;
};

// Which parts of m = [m_w; m_b; m_c] are computed. A disabled part is the
// zero vector, so widths and checkpoint shapes stay fixed.
struct EncoderToggles {
  bool word_char = true;
  bool mention_context = true;
  bool context_attention = true;
};

struct EncoderParams {
  Mat char_embedding;  // |chars| x char_dim
  BiLstmParams char_lstm;
  BiLstmParams wordchar_lstm;
  BiLstmParams mention_lstm;
  BiLstmParams context_lstm;
  BiLstmParams context_lstm_right;  // used only with separate_context_lstm
  Mat w_e;  // D_a x D_h
  Mat w_a;  // 1 x D_a

  static EncoderParams Zeros(const EncoderDims& dims);
  static EncoderParams Init(const EncoderDims& dims, Rng& rng);
};

// Everything the encoder reads for one mention.
struct MentionInput {
  std::vector<std::vector<int>> char_ids;  // per mention token
  std::vector<Vec> word_vectors;           // per mention token, D_w
  std::vector<Vec> mention_ctx;            // per mention token, D_b
  ContextWindow window;
};

struct MentionRepr {
  Vec m_w, m_b, m_c, m;
};

Vec CharEmbed(const EncoderParams& p, const std::vector<int>& char_ids);
Vec EncodeWordChar(const EncoderParams& p, const MentionInput& in);
Vec EncodeMentionContext(const EncoderParams& p, const MentionInput& in);

struct ContextAttention {
  Vec m_c;
  // Attention weights per window position, left (nearest first) then right.
  Vec weights;
  bool empty_context = false;
};

ContextAttention AttendContext(const EncoderParams& p, const ContextWindow& window,
                               bool separate_lstm = false);

// Forward activations for backprop.
struct EncodeTrace {
  std::vector<BiLstmRun> char_runs;
  std::vector<Vec> token_inputs;  // [w_k; c_k]
  BiLstmRun wordchar_run;
  BiLstmRun mention_run;
  // Context side: sequence order (far -> near for the left window).
  std::vector<Vec> left_seq, right_seq;
  std::vector<bool> left_pad, right_pad;
  BiLstmRun left_run, right_run;
  std::vector<Vec> hidden;       // 2n per-position [h_fwd; h_bwd]
  std::vector<Vec> attn_hidden;  // e_t = tanh(W_e h_t)
  std::vector<bool> pad;         // 2n
  Vec weights;                   // 2n
  bool empty_context = false;
};

MentionRepr Encode(const EncoderParams& p, const MentionInput& in, const EncoderToggles& toggles,
                   bool separate_lstm = false, EncodeTrace* trace = nullptr);

// Accumulates d(loss)/d(params) given d(loss)/dm.
void BackpropEncode(const EncoderParams& p, const MentionInput& in, const EncoderToggles& toggles,
                    bool separate_lstm, const EncodeTrace& trace, const Vec& d_m,
                    EncoderParams* grad);

}  // namespace mzet
