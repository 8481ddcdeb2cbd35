#include "mzet/memory_network.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "mzet/errors.hpp"

namespace mzet {
namespace {

double Glorot(Eigen::Index a, Eigen::Index b) { return std::sqrt(6.0 / static_cast<double>(a + b)); }

void ExpectShape(const Mat& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

}  // namespace

MemoryParams MemoryParams::Zeros(int d_e, int d_b, int d_s, int d_m) {
  return {Mat::Zero(d_e, d_m), Mat::Zero(d_b, d_m), Mat::Zero(d_b, d_m), Mat::Zero(d_s, d_m)};
}

MemoryParams MemoryParams::Init(int d_e, int d_b, int d_s, int d_m, Rng& rng) {
  MemoryParams p;
  p.w_map = rng.UniformMatrix(d_e, d_m, Glorot(d_e, d_m));
  p.w_f1 = rng.UniformMatrix(d_b, d_m, Glorot(d_b, d_m));
  p.w_f2 = rng.UniformMatrix(d_b, d_m, Glorot(d_b, d_m));
  p.w_p = rng.UniformMatrix(d_s, d_m, Glorot(d_s, d_m));
  return p;
}

MemoryState BuildMemory(const MemoryParams& p, const Mat& f_seen) {
  if (f_seen.cols() != p.w_f1.rows() || f_seen.cols() != p.w_f2.rows()) {
    throw DimensionError("memory content width " + std::to_string(f_seen.cols()) +
                         " does not match memory maps (" + std::to_string(p.w_f1.rows()) + ")");
  }
  if (f_seen.rows() != p.w_p.rows()) {
    throw DimensionError("memory holds " + std::to_string(f_seen.rows()) +
                         " seen types but the association projection expects " +
                         std::to_string(p.w_p.rows()));
  }
  return {f_seen, f_seen * p.w_f1, f_seen * p.w_f2};
}

Vec AttendMemory(const MemoryState& state, const Vec& u) {
  if (u.size() != state.g.cols()) throw DimensionError("mention input width differs from memory width");
  return Softmax(state.g * u);
}

Vec Associate(const MemoryState& state, const Vec& p) {
  if (p.size() != state.c.rows()) throw DimensionError("attention length differs from memory size");
  return state.c.transpose() * p;
}

PredictionRecord Score(const MemoryParams& params, const MemoryState& state, const Vec& m,
                       const Mat& r, ScoreTrace* trace) {
  if (m.size() != params.w_map.rows()) {
    throw DimensionError("mention width " + std::to_string(m.size()) + ", expected " +
                         std::to_string(params.w_map.rows()));
  }
  if (r.rows() != params.w_p.rows()) {
    throw DimensionError("similarity matrix has " + std::to_string(r.rows()) +
                         " rows, expected one per seen type (" + std::to_string(params.w_p.rows()) + ")");
  }
  const Vec u = params.w_map.transpose() * m;
  const Vec p = AttendMemory(state, u);
  const Vec o = Associate(state, p);
  PredictionRecord rec;
  rec.attention = p;
  rec.association = params.w_p * (o + u);
  const Vec logits = r.transpose() * rec.association;
  rec.scores = Sigmoid(logits);
  if (trace) *trace = {m, u, p, o, logits};
  return rec;
}

Vec BackpropScore(const MemoryParams& params, const MemoryState& state, const Mat& r,
                  const PredictionRecord& rec, const ScoreTrace& t, const Vec& d_scores,
                  MemoryParams* grad) {
  const Vec d_logits = d_scores.cwiseProduct(rec.scores.cwiseProduct((1.0 - rec.scores.array()).matrix()));
  const Vec d_assoc = r * d_logits;
  const Vec ou = t.o + t.u;
  grad->w_p.noalias() += d_assoc * ou.transpose();
  const Vec d_ou = params.w_p.transpose() * d_assoc;
  // o = C^T p
  const Vec d_p = state.c * d_ou;
  Mat d_c = t.p * d_ou.transpose();
  const Vec d_att = t.p.cwiseProduct((d_p.array() - t.p.dot(d_p)).matrix());
  const Vec d_u = d_ou + state.g.transpose() * d_att;
  const Mat d_g = d_att * t.u.transpose();
  grad->w_f1.noalias() += state.f_seen.transpose() * d_g;
  grad->w_f2.noalias() += state.f_seen.transpose() * d_c;
  grad->w_map.noalias() += t.m * d_u.transpose();
  return params.w_map * d_u;
}

BilinearParams BilinearParams::Zeros(int d_shared, int d_e, int d_b) {
  return {Mat::Zero(d_shared, d_e), Mat::Zero(d_shared, d_b)};
}

BilinearParams BilinearParams::Init(int d_shared, int d_e, int d_b, Rng& rng) {
  return {rng.UniformMatrix(d_shared, d_e, Glorot(d_shared, d_e)),
          rng.UniformMatrix(d_shared, d_b, Glorot(d_shared, d_b))};
}

double BilinearScore(const BilinearParams& p, const Vec& m, const Vec& f) {
  ExpectShape(p.a_map, p.a_map.rows(), m.size(), "bilinear mention map");
  ExpectShape(p.b_map, p.a_map.rows(), f.size(), "bilinear label map");
  return (p.a_map * m).dot(p.b_map * f);
}

Vec BilinearScores(const BilinearParams& p, const Vec& m, const Mat& candidates) {
  ExpectShape(p.a_map, p.a_map.rows(), m.size(), "bilinear mention map");
  ExpectShape(p.b_map, p.a_map.rows(), candidates.cols(), "bilinear label map");
  const Vec am = p.a_map * m;
  return candidates * (p.b_map.transpose() * am);
}

Vec BackpropBilinear(const BilinearParams& p, const Vec& m, const Mat& candidates,
                     const Vec& d_raw, BilinearParams* grad) {
  // raw_j = (A m) . (B f_j)
  const Vec am = p.a_map * m;
  const Vec f_mix = candidates.transpose() * d_raw;  // sum_j d_j f_j
  const Vec b_mix = p.b_map * f_mix;
  grad->a_map.noalias() += b_mix * m.transpose();
  grad->b_map.noalias() += am * f_mix.transpose();
  return p.a_map.transpose() * b_mix;
}

void WriteHeatmapCsv(const std::filesystem::path& path, const TypeHierarchy& h,
                     const Vec& similarity_column, const Vec& association) {
  if (similarity_column.size() != h.d_seen() || association.size() != h.d_seen()) {
    throw DimensionError("heatmap vectors must have one entry per seen type");
  }
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write heatmap: " + path.string());
  out << "seen_type,type_similarity,mention_association,mention_association_raw\n";
  out << std::setprecision(17);
  for (int i = 0; i < h.d_seen(); ++i) {
    out << h.node(i).path << ',' << similarity_column[i] << ',' << Sigmoid(association[i]) << ','
        << association[i] << '\n';
  }
}

}  // namespace mzet
