#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mzet/embeddings.hpp"
#include "mzet/tensor.hpp"

namespace mzet {

struct TypeNode {
  int id = 0;
  std::string path;  // "/PERSON/ARTIST"
  std::optional<int> parent;
  int level = 1;
  bool seen = false;
};

// The label universe. Seen types occupy ids [0, d_seen), unseen types
// [d_seen, d_seen + d_unseen). Immutable once built.
class TypeHierarchy {
 public:
  TypeHierarchy() = default;

  // Marks every node whose level is in seen_levels as seen. Throws
  // StructuralError for a missing parent and DuplicateError for a repeated
  // (case-insensitive) path.
  static TypeHierarchy Build(const std::vector<std::string>& label_paths,
                             const std::set<int>& seen_levels);

  const std::vector<TypeNode>& nodes() const { return nodes_; }
  const TypeNode& node(int id) const { return nodes_.at(static_cast<size_t>(id)); }
  int size() const { return static_cast<int>(nodes_.size()); }
  int d_seen() const { return d_seen_; }
  int d_unseen() const { return size() - d_seen_; }
  bool is_seen(int id) const { return id < d_seen_; }
  int max_level() const;

  std::optional<int> Find(std::string_view path) const;
  int IdOf(std::string_view path) const;  // throws LookupError

  // Nearest ancestor-or-self that is seen, if any.
  std::optional<int> SeenAncestor(int id) const;

  std::vector<int> SeenIds() const;
  std::vector<int> UnseenIds() const;
  std::vector<std::string> Paths() const;

 private:
  std::vector<TypeNode> nodes_;
  std::unordered_map<std::string, int> by_key_;
  int d_seen_ = 0;
};

// One path per line; blank lines and '#' comments ignored.
std::vector<std::string> ReadHierarchyFile(const std::filesystem::path& path);
TypeHierarchy LoadHierarchy(const std::filesystem::path& path, const std::set<int>& seen_levels);

// Parses "1" or "1,2".
std::set<int> ParseLevels(std::string_view text);

struct LabelBank {
  Mat semantic;  // (D_s + D_u) x D_b
  Mat hier;      // (D_s + D_u) x (D_s + D_u), binary
  Mat reprs;     // (D_s + D_u) x D_b, row i = semantic^T hier_i
  int d_b() const { return static_cast<int>(semantic.cols()); }
  Mat SeenReprs(int d_seen) const { return reprs.topRows(d_seen); }
};

// hier(i, j) = 1 iff i == j or j is the immediate parent of i.
Mat BuildHierMatrix(const TypeHierarchy& h);

LabelBank BuildLabelReprs(Mat semantic, Mat hier);

// Splits a label segment on '_', '-', and case boundaries, lowercased.
std::vector<std::string> TokenizeLabel(std::string_view segment);

// Row i is the mean word vector of node i's last path segment tokens.
Mat LabelSemanticsFromWords(const TypeHierarchy& h, const WordVectorStore& vectors);

// Reads "<label-path>\t<float> <float> ..." lines. Later duplicates replace
// earlier ones and are reported on stderr and in *warnings.
Mat LabelSemanticsFromFile(const TypeHierarchy& h, const std::filesystem::path& path,
                           std::vector<std::string>* warnings = nullptr);

enum class SimilarityMode { kTraining, kZeroShot };

// kSeen normalizes each candidate column over the seen types (columns sum
// to 1). kCandidate normalizes each seen row over the candidates instead.
enum class NormalizationAxis { kSeen, kCandidate };

// D_s x D_cand matrix of softmax(-euclidean distance) affinities between
// seen representations and candidate representations (seen in training
// mode, unseen in zero-shot mode).
Mat SimilarityMatrix(const LabelBank& bank, const TypeHierarchy& h, SimilarityMode mode,
                     NormalizationAxis axis = NormalizationAxis::kSeen);

// Same computation against arbitrary candidate representations.
Mat SimilarityFromReprs(const Mat& seen_reprs, const Mat& candidate_reprs,
                        NormalizationAxis axis = NormalizationAxis::kSeen);

}  // namespace mzet
