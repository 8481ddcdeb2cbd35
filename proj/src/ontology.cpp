#include "mzet/ontology.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "mzet/errors.hpp"

namespace mzet {
namespace {

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string Upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> Segments(const std::string& path) {
  if (path.size() < 2 || path[0] != '/') throw StructuralError("malformed label path '" + path + "'");
  std::vector<std::string> segs;
  size_t i = 1;
  while (i <= path.size()) {
    size_t j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    if (j == i) throw StructuralError("empty segment in label path '" + path + "'");
    segs.push_back(path.substr(i, j - i));
    i = j + 1;
  }
  return segs;
}

}  // namespace

TypeHierarchy TypeHierarchy::Build(const std::vector<std::string>& label_paths,
                                   const std::set<int>& seen_levels) {
  struct Pending {
    std::string path;
    int level;
  };
  std::vector<Pending> pending;
  std::unordered_map<std::string, size_t> by_key;
  for (const auto& raw : label_paths) {
    std::string path = Trim(raw);
    if (!path.empty() && path.back() == '/' && path.size() > 1) path.pop_back();
    const int level = static_cast<int>(Segments(path).size());
    const std::string key = Upper(path);
    if (by_key.count(key)) throw DuplicateError("duplicate label path '" + path + "'");
    by_key[key] = pending.size();
    pending.push_back({path, level});
  }

  // Parents must exist; each parent is one level up by construction.
  std::vector<std::optional<size_t>> parent_of(pending.size());
  for (size_t i = 0; i < pending.size(); ++i) {
    if (pending[i].level == 1) continue;
    const std::string parent_path = pending[i].path.substr(0, pending[i].path.rfind('/'));
    auto it = by_key.find(Upper(parent_path));
    if (it == by_key.end()) {
      throw StructuralError("label '" + pending[i].path + "' has no parent '" + parent_path + "'");
    }
    parent_of[i] = it->second;
  }

  // Seen first, then unseen, each in input order.
  std::vector<size_t> order;
  for (size_t i = 0; i < pending.size(); ++i)
    if (seen_levels.count(pending[i].level)) order.push_back(i);
  const int d_seen = static_cast<int>(order.size());
  for (size_t i = 0; i < pending.size(); ++i)
    if (!seen_levels.count(pending[i].level)) order.push_back(i);

  std::vector<int> new_id(pending.size());
  for (size_t k = 0; k < order.size(); ++k) new_id[order[k]] = static_cast<int>(k);

  TypeHierarchy h;
  h.d_seen_ = d_seen;
  h.nodes_.resize(pending.size());
  for (size_t k = 0; k < order.size(); ++k) {
    const size_t src = order[k];
    TypeNode& n = h.nodes_[k];
    n.id = static_cast<int>(k);
    n.path = pending[src].path;
    n.level = pending[src].level;
    n.seen = static_cast<int>(k) < d_seen;
    if (parent_of[src]) n.parent = new_id[*parent_of[src]];
    h.by_key_[Upper(n.path)] = n.id;
  }
  return h;
}

int TypeHierarchy::max_level() const {
  int m = 0;
  for (const auto& n : nodes_) m = std::max(m, n.level);
  return m;
}

std::optional<int> TypeHierarchy::Find(std::string_view path) const {
  std::string p = Trim(path);
  if (p.size() > 1 && p.back() == '/') p.pop_back();
  auto it = by_key_.find(Upper(p));
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

int TypeHierarchy::IdOf(std::string_view path) const {
  auto id = Find(path);
  if (!id) throw LookupError("unknown label path '" + std::string(path) + "'");
  return *id;
}

std::optional<int> TypeHierarchy::SeenAncestor(int id) const {
  std::optional<int> cur = id;
  while (cur) {
    if (is_seen(*cur)) return cur;
    cur = node(*cur).parent;
  }
  return std::nullopt;
}

std::vector<int> TypeHierarchy::SeenIds() const {
  std::vector<int> ids(d_seen_);
  for (int i = 0; i < d_seen_; ++i) ids[i] = i;
  return ids;
}

std::vector<int> TypeHierarchy::UnseenIds() const {
  std::vector<int> ids;
  for (int i = d_seen_; i < size(); ++i) ids.push_back(i);
  return ids;
}

std::vector<std::string> TypeHierarchy::Paths() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_) out.push_back(n.path);
  return out;
}

std::vector<std::string> ReadHierarchyFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open hierarchy file: " + path.string());
  std::vector<std::string> paths;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    paths.push_back(t);
  }
  return paths;
}

TypeHierarchy LoadHierarchy(const std::filesystem::path& path, const std::set<int>& seen_levels) {
  return TypeHierarchy::Build(ReadHierarchyFile(path), seen_levels);
}

std::set<int> ParseLevels(std::string_view text) {
  std::set<int> levels;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (item.empty()) continue;
    int v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size() || v < 1) {
      throw ConfigError("invalid level '" + item + "'");
    }
    levels.insert(v);
  }
  if (levels.empty()) throw ConfigError("no seen levels given");
  return levels;
}

Mat BuildHierMatrix(const TypeHierarchy& h) {
  const int n = h.size();
  Mat m = Mat::Zero(n, n);
  for (const auto& node : h.nodes()) {
    m(node.id, node.id) = 1.0;
    if (node.parent) m(node.id, *node.parent) = 1.0;
  }
  return m;
}

LabelBank BuildLabelReprs(Mat semantic, Mat hier) {
  if (hier.rows() != hier.cols() || hier.cols() != semantic.rows()) {
    throw DimensionError("hierarchy matrix is " + std::to_string(hier.rows()) + "x" +
                         std::to_string(hier.cols()) + " but semantic matrix has " +
                         std::to_string(semantic.rows()) + " rows");
  }
  LabelBank bank;
  bank.reprs = hier * semantic;
  bank.semantic = std::move(semantic);
  bank.hier = std::move(hier);
  return bank;
}

std::vector<std::string> TokenizeLabel(std::string_view segment) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(cur);
    cur.clear();
  };
  for (size_t i = 0; i < segment.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(segment[i]);
    if (c == '_' || c == '-' || c == '/' || std::isspace(c)) {
      flush();
      continue;
    }
    if (!cur.empty() && std::isupper(c) && i > 0) {
      const unsigned char prev = static_cast<unsigned char>(segment[i - 1]);
      const bool next_lower =
          i + 1 < segment.size() && std::islower(static_cast<unsigned char>(segment[i + 1]));
      if (std::islower(prev) || std::isdigit(prev) || (std::isupper(prev) && next_lower)) flush();
    }
    cur.push_back(static_cast<char>(std::tolower(c)));
  }
  flush();
  return tokens;
}

Mat LabelSemanticsFromWords(const TypeHierarchy& h, const WordVectorStore& vectors) {
  Mat out(h.size(), vectors.dim());
  for (const auto& node : h.nodes()) {
    const std::string last = node.path.substr(node.path.rfind('/') + 1);
    const auto tokens = TokenizeLabel(last);
    if (tokens.empty()) throw LabelingError("label '" + node.path + "' has no word tokens");
    Vec sum = Vec::Zero(vectors.dim());
    for (const auto& t : tokens) sum += vectors.Lookup(t);
    out.row(node.id) = (sum / static_cast<double>(tokens.size())).transpose();
  }
  return out;
}

Mat LabelSemanticsFromFile(const TypeHierarchy& h, const std::filesystem::path& path,
                           std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open label semantics file: " + path.string());
  std::map<int, Vec> rows;
  int width = -1;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw LoadError(path.string() + ":" + std::to_string(line_no) + ": missing tab separator");
    }
    const std::string label = Trim(std::string_view(line).substr(0, tab));
    std::vector<double> values;
    std::stringstream ss(line.substr(tab + 1));
    std::string tok;
    while (ss >> tok) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw LoadError(path.string() + ":" + std::to_string(line_no) + ": bad float '" + tok + "'");
      }
      values.push_back(v);
    }
    if (width < 0) width = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != width || width == 0) {
      throw DimensionError(path.string() + ":" + std::to_string(line_no) + ": label '" + label +
                           "' has " + std::to_string(values.size()) + " values, expected " +
                           std::to_string(width));
    }
    auto id = h.Find(label);
    if (!id) continue;  // labels outside the hierarchy are ignored
    if (rows.count(*id)) {
      const std::string msg = "duplicate label '" + label + "' at line " +
                              std::to_string(line_no) + ", last one wins";
      std::cerr << "warning: " << msg << "\n";
      if (warnings) warnings->push_back(msg);
    }
    rows[*id] = Eigen::Map<Vec>(values.data(), width);
  }
  Mat out(h.size(), std::max(width, 0));
  for (const auto& node : h.nodes()) {
    auto it = rows.find(node.id);
    if (it == rows.end()) throw LookupError("label semantics missing for '" + node.path + "'");
    out.row(node.id) = it->second.transpose();
  }
  return out;
}

Mat SimilarityFromReprs(const Mat& seen, const Mat& candidates, NormalizationAxis axis) {
  if (seen.cols() != candidates.cols()) throw DimensionError("label representation widths differ");
  const auto ds = seen.rows();
  const auto dc = candidates.rows();
  Mat neg_dist(ds, dc);
  for (Eigen::Index i = 0; i < ds; ++i)
    for (Eigen::Index j = 0; j < dc; ++j)
      neg_dist(i, j) = -(seen.row(i) - candidates.row(j)).norm();
  Mat r(ds, dc);
  if (axis == NormalizationAxis::kSeen) {
    for (Eigen::Index j = 0; j < dc; ++j) r.col(j) = Softmax(neg_dist.col(j));
  } else {
    for (Eigen::Index i = 0; i < ds; ++i) r.row(i) = Softmax(neg_dist.row(i).transpose()).transpose();
  }
  return r;
}

Mat SimilarityMatrix(const LabelBank& bank, const TypeHierarchy& h, SimilarityMode mode,
                     NormalizationAxis axis) {
  const Mat seen = bank.reprs.topRows(h.d_seen());
  const Mat candidates =
      mode == SimilarityMode::kTraining ? seen : Mat(bank.reprs.bottomRows(h.d_unseen()));
  return SimilarityFromReprs(seen, candidates, axis);
}

}  // namespace mzet
