#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mzet/config.hpp"
#include "mzet/corpus.hpp"
#include "mzet/evaluation.hpp"
#include "mzet/training.hpp"

namespace mzet {

inline constexpr const char* kArtifactVersion = "mzet-0.1.0/ckpt-1";

struct Dataset {
  TypeHierarchy hierarchy;
  LabelBank bank;
  std::vector<MentionExample> examples;
  WordVectorStore words{1};
  ContextualStore contextual;
  // role -> file, for manifest digests
  std::map<std::string, std::filesystem::path> inputs;
};

// Loads everything the config names. Missing required inputs raise
// ConfigError naming the flag.
Dataset LoadDataset(const Config& config);

ModelConfig MakeModelConfig(const Config& config, const Dataset& data, const CharVocab& chars);
TrainConfig MakeTrainConfig(const Config& config);

// Over mention tokens only, in corpus order.
CharVocab BuildCharVocab(const std::vector<MentionExample>& examples);

std::vector<MentionInput> BuildInputs(const std::vector<MentionExample>& examples, const Dataset& data,
                                      const CharVocab& chars, int window);

std::string HierarchySignature(const TypeHierarchy& h);

struct RunManifest {
  std::string command;
  std::optional<Config> config;
  std::vector<std::pair<std::string, std::string>> extra;
  std::map<std::string, std::string> digests;
  std::string timestamp;

  // Timestamp is the last line so it is easy to strip when comparing runs.
  std::string Serialize() const;
  void Write(const std::filesystem::path& path) const;
};

std::map<std::string, std::string> DigestInputs(const std::map<std::string, std::filesystem::path>& inputs);
std::string NowUtc();

struct TrainOutcome {
  Model model;
  CharVocab chars;
  CorpusSplit split;
  TrainResult result;
};

TrainOutcome TrainModel(const Config& config, const Dataset& data,
                        const std::function<void(const EpochLog&)>& on_epoch = {});

// Writes model.ckpt, train_log.csv and manifest.txt under out_dir.
TrainOutcome TrainCommand(const Config& config, const std::filesystem::path& out_dir,
                          const std::function<void(const EpochLog&)>& on_epoch = {});

struct TrainedModel {
  Config config;
  Model model;
  CharVocab chars;
  std::string hierarchy_signature;
  std::string corpus_digest;
};

// Rebuilds the model from a checkpoint. The hierarchy must match the one the
// checkpoint was trained on (VersionError otherwise).
TrainedModel LoadTrainedModel(const std::filesystem::path& checkpoint, const TypeHierarchy& h);
TrainedModel LoadTrainedModel(const std::filesystem::path& checkpoint);

struct EvalRequest {
  std::filesystem::path checkpoint;
  std::string corpus;  // empty: the training corpus
  std::vector<EvalMode> modes = {EvalMode::kOverall};
  std::optional<double> tau;
  bool infer_parents = false;
  // auto: the held-out test partition when evaluating the training corpus,
  // every mention otherwise.
  std::string split = "auto";
};

std::vector<EvalResult> EvalCommand(const EvalRequest& request, const std::filesystem::path& out_dir);

struct Explanation {
  std::string mention_id;
  std::string unseen_type;
  Vec similarity;   // R column for the unseen type, D_s
  Vec association;  // raw association vector, D_s
  double score = 0.0;
};

Explanation Explain(const std::filesystem::path& checkpoint, const std::string& corpus,
                    const std::string& mention_id, const std::string& unseen_type);

SyntheticFiles SynthCommand(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace mzet
