#pragma once

#include <span>
#include <vector>

#include "mzet/random.hpp"
#include "mzet/tensor.hpp"

namespace mzet {

// One LSTM direction. Gate rows of w/b are stacked as
// [input; forget; output; candidate], each hidden_dim tall, and w acts on
// the concatenation [x_t; h_{t-1}].
struct LstmParams {
  Mat w;  // 4H x (I + H)
  Mat b;  // 4H x 1

  int input_dim() const { return static_cast<int>(w.cols() - w.rows() / 4); }
  int hidden_dim() const { return static_cast<int>(w.rows() / 4); }

  static LstmParams Zeros(int input_dim, int hidden_dim);
  // Glorot-uniform weights, forget-gate bias 1, other biases 0.
  static LstmParams Init(int input_dim, int hidden_dim, Rng& rng);
};

struct BiLstmParams {
  LstmParams fwd;
  LstmParams bwd;

  int input_dim() const { return fwd.input_dim(); }
  // Width of the concatenated [h_fwd; h_bwd] output.
  int output_dim() const { return fwd.hidden_dim() + bwd.hidden_dim(); }

  static BiLstmParams Zeros(int input_dim, int hidden_per_direction);
  static BiLstmParams Init(int input_dim, int hidden_per_direction, Rng& rng);
};

// Per-step activations kept for backprop.
struct LstmStep {
  bool padded = false;
  Vec input, h_prev, c_prev;
  Vec i, f, o, g, c, h;
};

struct LstmRun {
  // Indexed by sequence position, regardless of processing direction.
  std::vector<LstmStep> steps;
  std::vector<Vec> outputs;  // zero at padded positions
  Vec final_h;
  Vec final_c;
  bool reverse = false;
};

// Runs one direction. Padded steps keep (h, c) unchanged and emit zeros.
// padding may be empty (no padding) or the same length as the sequence.
LstmRun RunLstm(const LstmParams& p, std::span<const Vec> seq, const std::vector<bool>& padding,
                bool reverse);

// Accumulates parameter gradients into *grad. d_outputs is per position
// (may be empty for "no per-step gradient"); d_final is the gradient on
// final_h. Returns the gradient w.r.t. each input vector.
std::vector<Vec> BackpropLstm(const LstmParams& p, const LstmRun& run,
                              std::span<const Vec> d_outputs, const Vec& d_final,
                              LstmParams* grad);

struct BiLstmRun {
  LstmRun fwd;
  LstmRun bwd;

  // [fwd.final_h; bwd.final_h]
  Vec Final() const;
  // [fwd.outputs[t]; bwd.outputs[t]]
  Vec Output(size_t t) const;
};

BiLstmRun RunBiLstm(const BiLstmParams& p, std::span<const Vec> seq,
                    const std::vector<bool>& padding = {});

// d_outputs holds per-position gradients on the concatenated outputs (may be
// empty); d_final the gradient on Final().
std::vector<Vec> BackpropBiLstm(const BiLstmParams& p, const BiLstmRun& run,
                                std::span<const Vec> d_outputs, const Vec& d_final,
                                BiLstmParams* grad);

}  // namespace mzet
