#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mzet/tensor.hpp"

namespace mzet {

inline constexpr uint64_t kDefaultOovSeed = 0x5EEDu;
inline constexpr double kOovBound = 0.25;

// Pretrained word vectors in the usual text format ("token f1 f2 ...").
// A leading "<count> <dim>" header line is accepted and fixes the width.
class WordVectorStore {
 public:
  struct LoadReport {
    size_t loaded = 0;
    size_t skipped = 0;
  };

  WordVectorStore(int dim, uint64_t oov_seed = kDefaultOovSeed);

  // expected_dim == 0 infers the width from the header or the first line.
  static WordVectorStore Load(const std::filesystem::path& path, int expected_dim = 0,
                              uint64_t oov_seed = kDefaultOovSeed,
                              LoadReport* report = nullptr);

  int dim() const { return dim_; }
  size_t size() const { return vectors_.size(); }
  bool contains(std::string_view token) const;

  // Exact match first, then lowercased; OOV vector otherwise.
  const Vec& Lookup(std::string_view token) const;
  const Vec& oov() const { return oov_; }

  void Insert(std::string token, Vec vector);

 private:
  int dim_;
  Vec oov_;
  std::unordered_map<std::string, Vec> vectors_;
};

// Precomputed token-level contextual embeddings. Backed either by an
// index + little-endian float32 payload pair, or by a seeded generator.
class ContextualStore {
 public:
  ContextualStore() = default;  // empty
  // dim == 0 infers the width from the payload layout.
  static ContextualStore Load(const std::filesystem::path& index_path,
                              const std::filesystem::path& payload_path, int dim = 0);
  static ContextualStore Synthetic(int dim, uint64_t seed);

  int dim() const { return dim_; }
  bool synthetic() const { return synthetic_; }
  size_t size() const { return entries_.size(); }

  // Throws LookupError for an unknown key and AlignmentError when the stored
  // row count differs from token_count.
  Mat Get(const std::string& sentence_key, int token_count) const;

 private:
  struct Entry {
    size_t offset_floats;
    int token_count;
  };

  int dim_ = 0;
  bool synthetic_ = false;
  uint64_t seed_ = 0;
  std::vector<float> payload_;
  std::unordered_map<std::string, Entry> entries_;
};

struct ContextualRecord {
  std::string key;
  Mat rows;  // token_count x dim
};

// Writes the index/payload pair. Offsets are byte offsets into the payload.
void WriteContextual(const std::filesystem::path& index_path,
                     const std::filesystem::path& payload_path,
                     const std::vector<ContextualRecord>& records);

// Character vocabulary over Unicode code points. Index 0 is reserved for
// unknown characters.
class CharVocab {
 public:
  CharVocab() = default;

  // Indices are assigned in first-seen order over the given tokens.
  static CharVocab Build(const std::vector<std::string>& tokens);

  int size() const { return static_cast<int>(chars_.size()) + 1; }
  int Index(char32_t c) const;
  std::vector<int> Encode(std::string_view token) const;
  void Add(char32_t c);

  // Comma-separated hex code points in index order.
  std::string Serialize() const;
  static CharVocab Deserialize(std::string_view text);

  const std::vector<char32_t>& chars() const { return chars_; }

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, int> index_;
};

std::vector<char32_t> DecodeUtf8(std::string_view text);

// Left/right windows around a mention. left row i is the token i+1 positions
// before the span start (nearest first); right row i is the token i
// positions after the span end. Padding rows are zero with mask == true.
struct ContextWindow {
  Mat left;
  Mat right;
  std::vector<bool> left_pad;
  std::vector<bool> right_pad;
};

ContextWindow ExtractContextWindow(const Mat& sentence, int start, int end, int n);

}  // namespace mzet
