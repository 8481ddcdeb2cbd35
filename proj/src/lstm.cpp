#include "mzet/lstm.hpp"

#include <cmath>
#include <string>

#include "mzet/errors.hpp"

namespace mzet {

LstmParams LstmParams::Zeros(int input_dim, int hidden_dim) {
  return {Mat::Zero(4 * hidden_dim, input_dim + hidden_dim), Mat::Zero(4 * hidden_dim, 1)};
}

LstmParams LstmParams::Init(int input_dim, int hidden_dim, Rng& rng) {
  const double bound = std::sqrt(6.0 / ((input_dim + hidden_dim) + 4.0 * hidden_dim));
  LstmParams p;
  p.w = rng.UniformMatrix(4 * hidden_dim, input_dim + hidden_dim, bound);
  p.b = Mat::Zero(4 * hidden_dim, 1);
  p.b.block(hidden_dim, 0, hidden_dim, 1).setOnes();
  return p;
}

BiLstmParams BiLstmParams::Zeros(int input_dim, int hidden_per_direction) {
  return {LstmParams::Zeros(input_dim, hidden_per_direction),
          LstmParams::Zeros(input_dim, hidden_per_direction)};
}

BiLstmParams BiLstmParams::Init(int input_dim, int hidden_per_direction, Rng& rng) {
  LstmParams fwd = LstmParams::Init(input_dim, hidden_per_direction, rng);
  LstmParams bwd = LstmParams::Init(input_dim, hidden_per_direction, rng);
  return {std::move(fwd), std::move(bwd)};
}

LstmRun RunLstm(const LstmParams& p, std::span<const Vec> seq, const std::vector<bool>& padding,
                bool reverse) {
  const int in = p.input_dim();
  const int hd = p.hidden_dim();
  if (!padding.empty() && padding.size() != seq.size()) {
    throw DimensionError("padding mask length differs from sequence length");
  }
  LstmRun run;
  run.reverse = reverse;
  run.steps.resize(seq.size());
  run.outputs.assign(seq.size(), Vec::Zero(hd));
  Vec h = Vec::Zero(hd);
  Vec c = Vec::Zero(hd);
  Vec xh(in + hd);
  const size_t n = seq.size();
  for (size_t k = 0; k < n; ++k) {
    const size_t t = reverse ? n - 1 - k : k;
    if (seq[t].size() != in) {
      throw DimensionError("LSTM input width " + std::to_string(seq[t].size()) + ", expected " +
                           std::to_string(in));
    }
    LstmStep& s = run.steps[t];
    s.padded = !padding.empty() && padding[t];
    s.h_prev = h;
    s.c_prev = c;
    if (s.padded) continue;
    s.input = seq[t];
    xh << seq[t], h;
    const Vec z = p.w * xh + p.b.col(0);
    s.i = Sigmoid(Vec(z.segment(0, hd)));
    s.f = Sigmoid(Vec(z.segment(hd, hd)));
    s.o = Sigmoid(Vec(z.segment(2 * hd, hd)));
    s.g = z.segment(3 * hd, hd).array().tanh().matrix();
    s.c = s.f.cwiseProduct(c) + s.i.cwiseProduct(s.g);
    s.h = s.o.cwiseProduct(s.c.array().tanh().matrix());
    h = s.h;
    c = s.c;
    run.outputs[t] = h;
  }
  run.final_h = h;
  run.final_c = c;
  return run;
}

std::vector<Vec> BackpropLstm(const LstmParams& p, const LstmRun& run,
                              std::span<const Vec> d_outputs, const Vec& d_final,
                              LstmParams* grad) {
  const int in = p.input_dim();
  const int hd = p.hidden_dim();
  const size_t n = run.steps.size();
  std::vector<Vec> d_inputs(n, Vec::Zero(in));
  Vec dh = d_final.size() ? d_final : Vec(Vec::Zero(hd));
  Vec dc = Vec::Zero(hd);
  Vec dz(4 * hd);
  Vec xh(in + hd);
  for (size_t k = 0; k < n; ++k) {
    // Walk the processing order backwards.
    const size_t t = run.reverse ? k : n - 1 - k;
    const LstmStep& s = run.steps[t];
    if (s.padded) continue;  // state passes through untouched
    if (!d_outputs.empty()) dh += d_outputs[t];
    const Vec tanh_c = s.c.array().tanh().matrix();
    const Vec d_o = dh.cwiseProduct(tanh_c);
    dc += dh.cwiseProduct(s.o).cwiseProduct((1.0 - tanh_c.array().square()).matrix());
    const Vec d_i = dc.cwiseProduct(s.g);
    const Vec d_g = dc.cwiseProduct(s.i);
    const Vec d_f = dc.cwiseProduct(s.c_prev);
    dz.segment(0, hd) = d_i.array() * s.i.array() * (1.0 - s.i.array());
    dz.segment(hd, hd) = d_f.array() * s.f.array() * (1.0 - s.f.array());
    dz.segment(2 * hd, hd) = d_o.array() * s.o.array() * (1.0 - s.o.array());
    dz.segment(3 * hd, hd) = d_g.array() * (1.0 - s.g.array().square());
    xh << s.input, s.h_prev;
    grad->w.noalias() += dz * xh.transpose();
    grad->b.col(0) += dz;
    const Vec d_xh = p.w.transpose() * dz;
    d_inputs[t] = d_xh.head(in);
    dh = d_xh.tail(hd);
    dc = dc.cwiseProduct(s.f);
  }
  return d_inputs;
}

Vec BiLstmRun::Final() const {
  Vec out(fwd.final_h.size() + bwd.final_h.size());
  out << fwd.final_h, bwd.final_h;
  return out;
}

Vec BiLstmRun::Output(size_t t) const {
  Vec out(fwd.outputs[t].size() + bwd.outputs[t].size());
  out << fwd.outputs[t], bwd.outputs[t];
  return out;
}

BiLstmRun RunBiLstm(const BiLstmParams& p, std::span<const Vec> seq,
                    const std::vector<bool>& padding) {
  return {RunLstm(p.fwd, seq, padding, false), RunLstm(p.bwd, seq, padding, true)};
}

std::vector<Vec> BackpropBiLstm(const BiLstmParams& p, const BiLstmRun& run,
                                std::span<const Vec> d_outputs, const Vec& d_final,
                                BiLstmParams* grad) {
  const int hf = p.fwd.hidden_dim();
  const int hb = p.bwd.hidden_dim();
  std::vector<Vec> d_fwd_out, d_bwd_out;
  if (!d_outputs.empty()) {
    for (const Vec& d : d_outputs) {
      d_fwd_out.push_back(d.head(hf));
      d_bwd_out.push_back(d.tail(hb));
    }
  }
  Vec d_final_fwd = d_final.size() ? Vec(d_final.head(hf)) : Vec(Vec::Zero(hf));
  Vec d_final_bwd = d_final.size() ? Vec(d_final.tail(hb)) : Vec(Vec::Zero(hb));
  auto a = BackpropLstm(p.fwd, run.fwd, d_fwd_out, d_final_fwd, &grad->fwd);
  auto b = BackpropLstm(p.bwd, run.bwd, d_bwd_out, d_final_bwd, &grad->bwd);
  for (size_t t = 0; t < a.size(); ++t) a[t] += b[t];
  return a;
}

}  // namespace mzet
