#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mzet/ontology.hpp"
#include "mzet/random.hpp"
#include "mzet/tensor.hpp"

namespace mzet {

struct MemoryParams {
  Mat w_map;  // D_e x D_m, u = w_map^T m
  Mat w_f1;   // D_b x D_m, input memory G = F w_f1
  Mat w_f2;   // D_b x D_m, output memory C = F w_f2
  Mat w_p;    // D_s x D_m, association projection

  int d_m() const { return static_cast<int>(w_map.cols()); }

  static MemoryParams Zeros(int d_e, int d_b, int d_s, int d_m);
  static MemoryParams Init(int d_e, int d_b, int d_s, int d_m, Rng& rng);
};

struct MemoryState {
  Mat f_seen;  // D_s x D_b
  Mat g;       // D_s x D_m
  Mat c;       // D_s x D_m
};

MemoryState BuildMemory(const MemoryParams& p, const Mat& f_seen);

// p_i = softmax_i(u . g_i)
Vec AttendMemory(const MemoryState& state, const Vec& u);

// o = sum_i p_i c_i
Vec Associate(const MemoryState& state, const Vec& p);

struct PredictionRecord {
  std::string mention_id;
  Vec scores;       // sigmoid(R^T association), one per candidate
  Vec association;  // w_p (o + u), D_s
  Vec attention;    // p, D_s
  std::vector<int> selected;
};

struct ScoreTrace {
  Vec m, u, p, o, logits;
};

// r is D_s x D_cand. Throws DimensionError when shapes disagree.
PredictionRecord Score(const MemoryParams& params, const MemoryState& state, const Vec& m,
                       const Mat& r, ScoreTrace* trace = nullptr);

// Given d(loss)/d(scores), accumulates into *grad (w_map, w_f1, w_f2, w_p)
// and returns d(loss)/dm.
Vec BackpropScore(const MemoryParams& params, const MemoryState& state, const Mat& r,
                  const PredictionRecord& record, const ScoreTrace& trace, const Vec& d_scores,
                  MemoryParams* grad);

// Baseline without memory: f(x, y) = (A m) . (B f).
struct BilinearParams {
  Mat a_map;  // D_shared x D_e
  Mat b_map;  // D_shared x D_b

  static BilinearParams Zeros(int d_shared, int d_e, int d_b);
  static BilinearParams Init(int d_shared, int d_e, int d_b, Rng& rng);
};

double BilinearScore(const BilinearParams& p, const Vec& m, const Vec& label_repr);

// Raw bilinear scores against every row of candidates (D_cand x D_b).
Vec BilinearScores(const BilinearParams& p, const Vec& m, const Mat& candidates);

// d_raw is the gradient on the raw (pre-sigmoid) scores. Returns d/dm.
Vec BackpropBilinear(const BilinearParams& p, const Vec& m, const Mat& candidates,
                     const Vec& d_raw, BilinearParams* grad);

// Heatmap CSV for one mention and one unseen type. Rows are seen types;
// type_similarity is the R column, mention_association the sigmoid of the
// association vector, mention_association_raw the raw vector.
void WriteHeatmapCsv(const std::filesystem::path& path, const TypeHierarchy& h,
                     const Vec& similarity_column, const Vec& association);

}  // namespace mzet
