#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mzet/model.hpp"

namespace mzet {

using LabelSet = std::set<int>;

enum class EvalMode { kOverall, kLevel1, kLevel2 };

EvalMode ParseEvalMode(const std::string& text);
std::string ToString(EvalMode mode);

struct EvalProtocol {
  EvalMode mode = EvalMode::kOverall;
  std::optional<double> tau;  // nullopt: pick on a validation slice
  bool infer_parents = false;
  uint64_t validation_seed = 17;
  double validation_fraction = 0.1;
};

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// {j : scores_j >= max(scores) - tau}. Returns candidate indices, ascending.
std::vector<int> SelectLabels(const Vec& scores, double tau);

// Adds the immediate parent of every selected node.
LabelSet InferParents(const LabelSet& selected, const TypeHierarchy& h);

double StrictAccuracy(const std::vector<LabelSet>& gold, const std::vector<LabelSet>& pred);
PRF MacroPRF(const std::vector<LabelSet>& gold, const std::vector<LabelSet>& pred);
PRF MicroPRF(const std::vector<LabelSet>& gold, const std::vector<LabelSet>& pred);

struct MentionPrediction {
  std::string mention_id;
  LabelSet gold;
  LabelSet predicted;
  std::vector<std::pair<int, double>> top;  // best-scoring candidates
};

struct EvalResult {
  EvalMode mode = EvalMode::kOverall;
  double tau = 0.0;
  size_t mentions = 0;
  double strict_acc = 0.0;
  PRF macro;
  PRF micro;
  std::vector<MentionPrediction> records;
};

// A mention to evaluate: its encoder input plus full gold label ids.
struct EvalExample {
  std::string id;
  const MentionInput* input = nullptr;
  std::vector<int> gold;
};

// Gold restricted to what a mode evaluates: seen ancestors for level1,
// unseen labels for level2, everything for overall.
LabelSet GoldForMode(const std::vector<int>& gold, const TypeHierarchy& h, EvalMode mode);

// Scores every example once, then applies label selection.
struct ScoredExample {
  std::string id;
  LabelSet gold;
  Vec scores;
};

std::vector<ScoredExample> ScoreExamples(const Model& model, const LabelBank& bank,
                                         const TypeHierarchy& h, std::span<const EvalExample> examples,
                                         EvalMode mode,
                                         NormalizationAxis axis = NormalizationAxis::kSeen,
                                         std::vector<int>* candidate_ids = nullptr);

EvalResult EvaluateScored(const std::vector<ScoredExample>& scored,
                          const std::vector<int>& candidate_ids, const TypeHierarchy& h,
                          EvalMode mode, double tau, bool infer_parents);

inline const std::vector<double>& TauGrid() {
  static const std::vector<double> grid = {0.0,  0.05, 0.1,  0.15, 0.2, 0.25,
                                           0.3,  0.35, 0.4,  0.45, 0.5};
  return grid;
}

// Full protocol. With protocol.tau unset, a seeded validation slice picks
// tau from TauGrid() by micro-F1 and the metrics are reported on the rest.
EvalResult RunProtocol(const Model& model, const LabelBank& bank, const TypeHierarchy& h,
                       std::span<const EvalExample> examples, const EvalProtocol& protocol,
                       NormalizationAxis axis = NormalizationAxis::kSeen);

void WriteResultsCsv(const std::filesystem::path& path, const std::vector<EvalResult>& results);
void WritePredictions(const std::filesystem::path& path, const EvalResult& result,
                      const TypeHierarchy& h);
// Gold vs predicted frequency per type.
void WriteTypeCounts(const std::filesystem::path& path, const EvalResult& result,
                     const TypeHierarchy& h);

}  // namespace mzet
