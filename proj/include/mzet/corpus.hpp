#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mzet/embeddings.hpp"
#include "mzet/mention_encoder.hpp"
#include "mzet/ontology.hpp"

namespace mzet {

struct MentionExample {
  std::string id;
  std::string sentence_key;
  std::vector<std::string> tokens;
  int start = 0;  // inclusive
  int end = 0;    // exclusive
  std::vector<int> gold;  // node ids, in file order
  // No gold label has a seen ancestor, so the mention can only be tested.
  bool test_only = false;

  bool operator==(const MentionExample&) const = default;
};

// Tab-separated records:
//   mention_id  sentence_key  tokens(space-joined)  start  end  labels(comma-joined)
std::vector<MentionExample> LoadCorpus(const std::filesystem::path& path, const TypeHierarchy& h);
void WriteCorpus(const std::filesystem::path& path, const std::vector<MentionExample>& examples,
                 const TypeHierarchy& h);

struct CorpusSplit {
  std::vector<MentionExample> train;  // gold truncated to seen ancestors
  std::vector<MentionExample> test;   // full gold
};

// Mentions carrying an unseen label go to test with probability
// test_fraction (seeded); test_only mentions always do; the rest train.
CorpusSplit ZeroShotSplit(const std::vector<MentionExample>& examples, const TypeHierarchy& h,
                          double test_fraction, uint64_t seed);

// Input features for the encoder.
MentionInput BuildMentionInput(const MentionExample& ex, const WordVectorStore& words,
                               const ContextualStore& contextual, const CharVocab& chars,
                               int window);

struct SyntheticSpec {
  uint64_t seed = 7;
  int coarse_types = 3;
  int fine_per_coarse = 2;
  int examples_per_type = 50;  // per fine type
  int vocab_size = 600;
  double noise = 0.1;  // noise norm relative to the type radius
  int word_dim = 32;
  int ctx_dim = 32;
  double radius = 1.0;         // norm of coarse centers
  double lean = 0.4;           // fine center moves this far toward a sibling coarse type
  double unique = 0.5;         // norm of each fine type's private direction
  double context_signal = 0.5; // share of the type center in context tokens

  void Validate() const;
};

struct SyntheticFiles {
  std::filesystem::path hierarchy, corpus, labels, words, contextual_index, contextual_payload, config;
  size_t examples = 0;
};

// Writes hierarchy.txt, corpus.tsv, labels.tsv, words.txt, contextual.idx,
// contextual.bin and synth.cfg under out_dir. Byte-identical for equal specs.
SyntheticFiles GenerateSynthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace mzet
