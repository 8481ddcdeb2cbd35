#include "mzet/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>

#include "mzet/errors.hpp"
#include "mzet/random.hpp"

namespace mzet {
namespace {

size_t Intersection(const LabelSet& a, const LabelSet& b) {
  size_t n = 0;
  for (int x : a) n += b.count(x);
  return n;
}

void CheckCounts(const std::vector<LabelSet>& gold, const std::vector<LabelSet>& pred) {
  if (gold.size() != pred.size()) {
    throw DimensionError("gold has " + std::to_string(gold.size()) + " mentions, predictions " +
                         std::to_string(pred.size()));
  }
}

double F1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

std::string JoinPaths(const LabelSet& ids, const TypeHierarchy& h) {
  std::string out;
  for (int id : ids) out += (out.empty() ? "" : ",") + h.node(id).path;
  return out;
}

}  // namespace

EvalMode ParseEvalMode(const std::string& text) {
  if (text == "overall") return EvalMode::kOverall;
  if (text == "level1") return EvalMode::kLevel1;
  if (text == "level2") return EvalMode::kLevel2;
  throw ConfigError("unknown evaluation mode '" + text + "' (overall|level1|level2)");
}

std::string ToString(EvalMode mode) {
  switch (mode) {
    case EvalMode::kOverall: return "overall";
    case EvalMode::kLevel1: return "level1";
    case EvalMode::kLevel2: return "level2";
  }
  return "?";
}

std::vector<int> SelectLabels(const Vec& scores, double tau) {
  std::vector<int> out;
  if (scores.size() == 0) return out;
  const double threshold = scores.maxCoeff() - tau;
  for (Eigen::Index j = 0; j < scores.size(); ++j)
    if (scores[j] >= threshold) out.push_back(static_cast<int>(j));
  return out;
}

LabelSet InferParents(const LabelSet& selected, const TypeHierarchy& h) {
  LabelSet out = selected;
  for (int id : selected)
    if (auto parent = h.node(id).parent) out.insert(*parent);
  return out;
}

double StrictAccuracy(const std::vector<LabelSet>& gold, const std::vector<LabelSet>& pred) {
  CheckCounts(gold, pred);
  if (gold.empty()) return 0.0;
  size_t hits = 0;
  for (size_t m = 0; m < gold.size(); ++m) hits += gold[m] == pred[m];
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

PRF MacroPRF(const std::vector<LabelSet>& gold, const std::vector<LabelSet>& pred) {
  CheckCounts(gold, pred);
  PRF out;
  if (gold.empty()) return out;
  double p = 0, r = 0;
  for (size_t m = 0; m < gold.size(); ++m) {
    const double hit = static_cast<double>(Intersection(gold[m], pred[m]));
    if (!pred[m].empty()) p += hit / static_cast<double>(pred[m].size());
    if (!gold[m].empty()) r += hit / static_cast<double>(gold[m].size());
  }
  out.precision = p / static_cast<double>(gold.size());
  out.recall = r / static_cast<double>(gold.size());
  out.f1 = F1(out.precision, out.recall);
  return out;
}

PRF MicroPRF(const std::vector<LabelSet>& gold, const std::vector<LabelSet>& pred) {
  CheckCounts(gold, pred);
  size_t hit = 0, n_pred = 0, n_gold = 0;
  for (size_t m = 0; m < gold.size(); ++m) {
    hit += Intersection(gold[m], pred[m]);
    n_pred += pred[m].size();
    n_gold += gold[m].size();
  }
  PRF out;
  out.precision = n_pred ? static_cast<double>(hit) / static_cast<double>(n_pred) : 0.0;
  out.recall = n_gold ? static_cast<double>(hit) / static_cast<double>(n_gold) : 0.0;
  out.f1 = F1(out.precision, out.recall);
  return out;
}

LabelSet GoldForMode(const std::vector<int>& gold, const TypeHierarchy& h, EvalMode mode) {
  LabelSet out;
  for (int id : gold) {
    switch (mode) {
      case EvalMode::kOverall:
        out.insert(id);
        break;
      case EvalMode::kLevel1:
        if (auto a = h.SeenAncestor(id)) out.insert(*a);
        break;
      case EvalMode::kLevel2:
        if (!h.is_seen(id)) out.insert(id);
        break;
    }
  }
  return out;
}

std::vector<ScoredExample> ScoreExamples(const Model& model, const LabelBank& bank,
                                         const TypeHierarchy& h, std::span<const EvalExample> examples,
                                         EvalMode mode, NormalizationAxis axis,
                                         std::vector<int>* candidate_ids) {
  const CandidateSet set = mode == EvalMode::kLevel1   ? CandidateSet::kSeen
                           : mode == EvalMode::kLevel2 ? CandidateSet::kUnseen
                                                       : CandidateSet::kAll;
  const ScoringContext ctx = MakeScoringContext(model, bank, h, set, axis);
  if (mode == EvalMode::kLevel2 && ctx.candidate_ids.empty()) {
    throw SplitError("level2 evaluation needs at least one unseen type");
  }
  if (candidate_ids) *candidate_ids = ctx.candidate_ids;
  std::vector<ScoredExample> out;
  for (const auto& ex : examples) {
    LabelSet gold = GoldForMode(ex.gold, h, mode);
    if (gold.empty()) continue;  // nothing to evaluate in this mode
    out.push_back({ex.id, std::move(gold), Forward(model, ctx, *ex.input).scores});
  }
  return out;
}

EvalResult EvaluateScored(const std::vector<ScoredExample>& scored,
                          const std::vector<int>& candidate_ids, const TypeHierarchy& h,
                          EvalMode mode, double tau, bool infer_parents) {
  EvalResult result;
  result.mode = mode;
  result.tau = tau;
  result.mentions = scored.size();
  std::vector<LabelSet> gold, pred;
  for (const auto& s : scored) {
    LabelSet selected;
    for (int j : SelectLabels(s.scores, tau)) selected.insert(candidate_ids[j]);
    if (infer_parents && mode == EvalMode::kOverall) selected = InferParents(selected, h);
    MentionPrediction mp{s.id, s.gold, selected, {}};
    std::vector<int> order(static_cast<size_t>(s.scores.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return s.scores[a] > s.scores[b]; });
    for (size_t k = 0; k < std::min<size_t>(5, order.size()); ++k)
      mp.top.emplace_back(candidate_ids[order[k]], s.scores[order[k]]);
    gold.push_back(s.gold);
    pred.push_back(selected);
    result.records.push_back(std::move(mp));
  }
  result.strict_acc = StrictAccuracy(gold, pred);
  result.macro = MacroPRF(gold, pred);
  result.micro = MicroPRF(gold, pred);
  return result;
}

EvalResult RunProtocol(const Model& model, const LabelBank& bank, const TypeHierarchy& h,
                       std::span<const EvalExample> examples, const EvalProtocol& protocol,
                       NormalizationAxis axis) {
  if (examples.empty()) throw SplitError("evaluation corpus is empty");
  if (protocol.tau && *protocol.tau < 0) throw ConfigError("tau must be non-negative");
  std::vector<int> candidates;
  auto scored = ScoreExamples(model, bank, h, examples, protocol.mode, axis, &candidates);
  if (scored.empty()) {
    throw SplitError("no mention has gold labels for mode " + ToString(protocol.mode));
  }
  if (protocol.tau) {
    return EvaluateScored(scored, candidates, h, protocol.mode, *protocol.tau, protocol.infer_parents);
  }
  // Seeded validation slice of the scored examples.
  std::vector<size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(protocol.validation_seed);
  rng.Shuffle(order);
  size_t n_val = static_cast<size_t>(static_cast<double>(scored.size()) * protocol.validation_fraction + 0.5);
  n_val = std::clamp<size_t>(n_val, 1, scored.size() > 1 ? scored.size() - 1 : 1);
  std::vector<bool> is_val(scored.size(), false);
  for (size_t k = 0; k < n_val; ++k) is_val[order[k]] = true;
  std::vector<ScoredExample> val, rest;
  for (size_t i = 0; i < scored.size(); ++i) (is_val[i] ? val : rest).push_back(scored[i]);
  if (rest.empty()) rest = val;

  double best_tau = 0.0, best_f1 = -1.0;
  for (double tau : TauGrid()) {
    const double f1 = EvaluateScored(val, candidates, h, protocol.mode, tau, protocol.infer_parents).micro.f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_tau = tau;
    }
  }
  return EvaluateScored(rest, candidates, h, protocol.mode, best_tau, protocol.infer_parents);
}

void WriteResultsCsv(const std::filesystem::path& path, const std::vector<EvalResult>& results) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write results: " + path.string());
  out << "mode,acc,macro_p,macro_r,macro_f1,micro_p,micro_r,micro_f1,tau\n" << std::setprecision(6)
      << std::fixed;
  for (const auto& r : results) {
    out << ToString(r.mode) << ',' << r.strict_acc << ',' << r.macro.precision << ',' << r.macro.recall
        << ',' << r.macro.f1 << ',' << r.micro.precision << ',' << r.micro.recall << ',' << r.micro.f1
        << ',' << std::setprecision(2) << r.tau << std::setprecision(6) << '\n';
  }
}

void WritePredictions(const std::filesystem::path& path, const EvalResult& result,
                      const TypeHierarchy& h) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write predictions: " + path.string());
  out << std::setprecision(6) << std::fixed;
  for (const auto& r : result.records) {
    out << r.mention_id << '\t' << JoinPaths(r.gold, h) << '\t' << JoinPaths(r.predicted, h) << '\t';
    for (size_t k = 0; k < r.top.size(); ++k)
      out << (k ? "," : "") << h.node(r.top[k].first).path << ':' << r.top[k].second;
    out << '\n';
  }
}

void WriteTypeCounts(const std::filesystem::path& path, const EvalResult& result,
                     const TypeHierarchy& h) {
  std::map<int, std::pair<size_t, size_t>> counts;
  for (const auto& r : result.records) {
    for (int id : r.gold) ++counts[id].first;
    for (int id : r.predicted) ++counts[id].second;
  }
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write type counts: " + path.string());
  out << "type,gold_count,predicted_count\n";
  for (const auto& [id, c] : counts) out << h.node(id).path << ',' << c.first << ',' << c.second << '\n';
}

}  // namespace mzet
