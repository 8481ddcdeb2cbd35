#include "mzet/mention_encoder.hpp"

#include <cmath>
#include <string>

#include "mzet/errors.hpp"

namespace mzet {
namespace {

std::vector<Vec> CharSequence(const EncoderParams& p, const std::vector<int>& ids) {
  if (ids.empty()) throw EmptyTokenError("token has no characters");
  std::vector<Vec> seq;
  seq.reserve(ids.size());
  for (int id : ids) {
    const int row = (id >= 0 && id < p.char_embedding.rows()) ? id : 0;
    seq.push_back(p.char_embedding.row(row).transpose());
  }
  return seq;
}

void RunWordChar(const EncoderParams& p, const MentionInput& in, EncodeTrace* t) {
  if (in.word_vectors.size() != in.char_ids.size() || in.word_vectors.empty()) {
    throw DimensionError("mention needs one word vector and one character sequence per token");
  }
  t->char_runs.clear();
  t->token_inputs.clear();
  for (size_t k = 0; k < in.char_ids.size(); ++k) {
    const auto chars = CharSequence(p, in.char_ids[k]);
    t->char_runs.push_back(RunBiLstm(p.char_lstm, chars));
    const Vec c = t->char_runs.back().Final();
    const Vec& w = in.word_vectors[k];
    Vec x(w.size() + c.size());
    x << w, c;
    t->token_inputs.push_back(std::move(x));
  }
  t->wordchar_run = RunBiLstm(p.wordchar_lstm, t->token_inputs);
}

void RunContext(const EncoderParams& p, const ContextWindow& win, bool separate, EncodeTrace* t) {
  const auto n = win.left.rows();
  t->left_seq.clear();
  t->right_seq.clear();
  t->left_pad.clear();
  t->right_pad.clear();
  // The LSTM reads the left window in sentence order.
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    t->left_seq.push_back(win.left.row(i).transpose());
    t->left_pad.push_back(win.left_pad[i]);
  }
  for (Eigen::Index i = 0; i < win.right.rows(); ++i) {
    t->right_seq.push_back(win.right.row(i).transpose());
    t->right_pad.push_back(win.right_pad[i]);
  }
  const BiLstmParams& right_lstm = separate ? p.context_lstm_right : p.context_lstm;
  t->left_run = RunBiLstm(p.context_lstm, t->left_seq, t->left_pad);
  t->right_run = RunBiLstm(right_lstm, t->right_seq, t->right_pad);

  // Positions in reporting order: left nearest-first, then right.
  t->hidden.clear();
  t->pad.clear();
  t->attn_hidden.clear();
  for (Eigen::Index i = 0; i < n; ++i) {
    const size_t seq_pos = static_cast<size_t>(n - 1 - i);
    t->hidden.push_back(t->left_run.Output(seq_pos));
    t->pad.push_back(t->left_pad[seq_pos]);
  }
  for (size_t i = 0; i < t->right_seq.size(); ++i) {
    t->hidden.push_back(t->right_run.Output(i));
    t->pad.push_back(t->right_pad[i]);
  }
  const size_t total = t->hidden.size();
  Vec scores = Vec::Zero(static_cast<Eigen::Index>(total));
  double best = -INFINITY;
  for (size_t k = 0; k < total; ++k) {
    t->attn_hidden.push_back((p.w_e * t->hidden[k]).array().tanh().matrix());
    if (t->pad[k]) continue;
    scores[k] = (p.w_a * t->attn_hidden[k])(0, 0);
    best = std::max(best, scores[k]);
  }
  t->weights = Vec::Zero(static_cast<Eigen::Index>(total));
  t->empty_context = !std::isfinite(best);
  if (t->empty_context) return;
  double norm = 0;
  for (size_t k = 0; k < total; ++k) {
    if (t->pad[k]) continue;
    t->weights[k] = std::exp(scores[k] - best);
    norm += t->weights[k];
  }
  t->weights /= norm;
}

Vec ContextVector(const EncodeTrace& t, int hidden) {
  Vec m_c = Vec::Zero(hidden);
  for (size_t k = 0; k < t.hidden.size(); ++k)
    if (!t.pad[k]) m_c += t.weights[k] * t.hidden[k];
  return m_c;
}

}  // namespace

void EncoderDims::Validate() const {
  if (hidden <= 0 || hidden % 2 != 0) throw DimensionError("hidden width D_h must be positive and even");
  if (char_hidden <= 0 || char_hidden % 2 != 0) {
    throw DimensionError("character hidden width must be positive and even");
  }
  if (char_vocab <= 0 || char_dim <= 0 || word_dim <= 0 || ctx_dim <= 0 || attn_dim <= 0) {
    throw DimensionError("encoder widths must be positive");
  }
}

EncoderParams EncoderParams::Zeros(const EncoderDims& d) {
  d.Validate();
  EncoderParams p;
  p.char_embedding = Mat::Zero(d.char_vocab, d.char_dim);
  p.char_lstm = BiLstmParams::Zeros(d.char_dim, d.char_hidden / 2);
  p.wordchar_lstm = BiLstmParams::Zeros(d.word_dim + d.char_hidden, d.hidden / 2);
  p.mention_lstm = BiLstmParams::Zeros(d.ctx_dim, d.hidden / 2);
  p.context_lstm = BiLstmParams::Zeros(d.ctx_dim, d.hidden / 2);
  if (d.separate_context_lstm) p.context_lstm_right = BiLstmParams::Zeros(d.ctx_dim, d.hidden / 2);
  p.w_e = Mat::Zero(d.attn_dim, d.hidden);
  p.w_a = Mat::Zero(1, d.attn_dim);
  return p;
}

EncoderParams EncoderParams::Init(const EncoderDims& d, Rng& rng) {
  d.Validate();
  EncoderParams p;
  p.char_embedding = rng.UniformMatrix(d.char_vocab, d.char_dim, std::sqrt(6.0 / (d.char_vocab + d.char_dim)));
  p.char_lstm = BiLstmParams::Init(d.char_dim, d.char_hidden / 2, rng);
  p.wordchar_lstm = BiLstmParams::Init(d.word_dim + d.char_hidden, d.hidden / 2, rng);
  p.mention_lstm = BiLstmParams::Init(d.ctx_dim, d.hidden / 2, rng);
  p.context_lstm = BiLstmParams::Init(d.ctx_dim, d.hidden / 2, rng);
  if (d.separate_context_lstm) p.context_lstm_right = BiLstmParams::Init(d.ctx_dim, d.hidden / 2, rng);
  p.w_e = rng.UniformMatrix(d.attn_dim, d.hidden, std::sqrt(6.0 / (d.attn_dim + d.hidden)));
  p.w_a = rng.UniformMatrix(1, d.attn_dim, std::sqrt(6.0 / (1 + d.attn_dim)));
  return p;
}

Vec CharEmbed(const EncoderParams& p, const std::vector<int>& char_ids) {
  return RunBiLstm(p.char_lstm, CharSequence(p, char_ids)).Final();
}

Vec EncodeWordChar(const EncoderParams& p, const MentionInput& in) {
  EncodeTrace t;
  RunWordChar(p, in, &t);
  return t.wordchar_run.Final();
}

Vec EncodeMentionContext(const EncoderParams& p, const MentionInput& in) {
  if (in.mention_ctx.empty()) throw DimensionError("mention has no contextual vectors");
  return RunBiLstm(p.mention_lstm, in.mention_ctx).Final();
}

ContextAttention AttendContext(const EncoderParams& p, const ContextWindow& window, bool separate) {
  EncodeTrace t;
  RunContext(p, window, separate, &t);
  return {ContextVector(t, static_cast<int>(p.w_e.cols())), t.weights, t.empty_context};
}

MentionRepr Encode(const EncoderParams& p, const MentionInput& in, const EncoderToggles& toggles,
                   bool separate, EncodeTrace* trace) {
  EncodeTrace local;
  EncodeTrace& t = trace ? *trace : local;
  const int hidden = static_cast<int>(p.w_e.cols());
  MentionRepr r;
  if (toggles.word_char) {
    RunWordChar(p, in, &t);
    r.m_w = t.wordchar_run.Final();
  } else {
    r.m_w = Vec::Zero(hidden);
  }
  if (toggles.mention_context) {
    if (in.mention_ctx.empty()) throw DimensionError("mention has no contextual vectors");
    t.mention_run = RunBiLstm(p.mention_lstm, in.mention_ctx);
    r.m_b = t.mention_run.Final();
  } else {
    r.m_b = Vec::Zero(hidden);
  }
  if (toggles.context_attention) {
    RunContext(p, in.window, separate, &t);
    r.m_c = ContextVector(t, hidden);
  } else {
    r.m_c = Vec::Zero(hidden);
  }
  r.m.resize(3 * hidden);
  r.m << r.m_w, r.m_b, r.m_c;
  return r;
}

void BackpropEncode(const EncoderParams& p, const MentionInput& in, const EncoderToggles& toggles,
                    bool separate, const EncodeTrace& t, const Vec& d_m, EncoderParams* grad) {
  const int hidden = static_cast<int>(p.w_e.cols());
  if (toggles.word_char) {
    const auto d_tokens = BackpropBiLstm(p.wordchar_lstm, t.wordchar_run, {}, d_m.segment(0, hidden),
                                         &grad->wordchar_lstm);
    const int wd = static_cast<int>(in.word_vectors.front().size());
    for (size_t k = 0; k < d_tokens.size(); ++k) {
      const Vec d_c = d_tokens[k].tail(d_tokens[k].size() - wd);
      const auto d_chars = BackpropBiLstm(p.char_lstm, t.char_runs[k], {}, d_c, &grad->char_lstm);
      for (size_t j = 0; j < d_chars.size(); ++j) {
        const int id = in.char_ids[k][j];
        const int row = (id >= 0 && id < p.char_embedding.rows()) ? id : 0;
        grad->char_embedding.row(row) += d_chars[j].transpose();
      }
    }
  }
  if (toggles.mention_context) {
    BackpropBiLstm(p.mention_lstm, t.mention_run, {}, d_m.segment(hidden, hidden), &grad->mention_lstm);
  }
  if (toggles.context_attention && !t.empty_context) {
    const Vec d_mc = d_m.segment(2 * hidden, hidden);
    const size_t total = t.hidden.size();
    std::vector<Vec> d_hidden(total, Vec::Zero(hidden));
    Vec d_weight = Vec::Zero(static_cast<Eigen::Index>(total));
    double weighted = 0;
    for (size_t k = 0; k < total; ++k) {
      if (t.pad[k]) continue;
      d_hidden[k] += t.weights[k] * d_mc;
      d_weight[k] = t.hidden[k].dot(d_mc);
      weighted += t.weights[k] * d_weight[k];
    }
    for (size_t k = 0; k < total; ++k) {
      if (t.pad[k]) continue;
      const double d_score = t.weights[k] * (d_weight[k] - weighted);
      grad->w_a += d_score * t.attn_hidden[k].transpose();
      const Vec d_pre = (d_score * p.w_a.row(0).transpose()).cwiseProduct(
          (1.0 - t.attn_hidden[k].array().square()).matrix());
      grad->w_e.noalias() += d_pre * t.hidden[k].transpose();
      d_hidden[k] += p.w_e.transpose() * d_pre;
    }
    // Map back from reporting order to each side's sequence order.
    const size_t n = t.left_seq.size();
    std::vector<Vec> d_left(n), d_right(t.right_seq.size());
    for (size_t i = 0; i < n; ++i) d_left[n - 1 - i] = d_hidden[i];
    for (size_t i = 0; i < d_right.size(); ++i) d_right[i] = d_hidden[n + i];
    BackpropBiLstm(p.context_lstm, t.left_run, d_left, Vec(), &grad->context_lstm);
    BiLstmParams* right_grad = separate ? &grad->context_lstm_right : &grad->context_lstm;
    const BiLstmParams& right_p = separate ? p.context_lstm_right : p.context_lstm;
    BackpropBiLstm(right_p, t.right_run, d_right, Vec(), right_grad);
  }
}

}  // namespace mzet
