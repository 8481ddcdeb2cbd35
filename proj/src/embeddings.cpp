#include "mzet/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mzet/errors.hpp"
#include "mzet/random.hpp"

namespace mzet {
namespace {

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool ParseDouble(std::string_view s, double* out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(*out);
}

bool ParseInt(std::string_view s, long long* out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string Lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

uint32_t ToLittleEndian(uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

}  // namespace

WordVectorStore::WordVectorStore(int dim, uint64_t oov_seed) : dim_(dim) {
  if (dim <= 0) throw DimensionError("word vector width must be positive");
  Rng rng(oov_seed);
  oov_.resize(dim);
  for (int i = 0; i < dim; ++i) oov_[i] = rng.Uniform(-kOovBound, kOovBound);
}

WordVectorStore WordVectorStore::Load(const std::filesystem::path& path, int expected_dim,
                                      uint64_t oov_seed, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open word vectors: " + path.string());

  std::vector<std::pair<std::string, Vec>> rows;
  int dim = expected_dim;
  size_t skipped = 0;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = SplitWhitespace(line);
    if (fields.empty()) continue;
    if (first) {
      first = false;
      long long count = 0, header_dim = 0;
      if (fields.size() == 2 && ParseInt(fields[0], &count) && ParseInt(fields[1], &header_dim)) {
        if (dim == 0) dim = static_cast<int>(header_dim);
        continue;
      }
    }
    if (dim == 0 && fields.size() >= 2) dim = static_cast<int>(fields.size()) - 1;
    if (static_cast<int>(fields.size()) != dim + 1) {
      ++skipped;
      continue;
    }
    Vec v(dim);
    bool ok = true;
    for (int i = 0; i < dim && ok; ++i) ok = ParseDouble(fields[i + 1], &v[i]);
    if (!ok) {
      ++skipped;
      continue;
    }
    rows.emplace_back(std::string(fields[0]), std::move(v));
  }
  if (rows.empty()) throw EmptyStoreError("no usable word vectors in " + path.string());
  if (skipped > 0) {
    std::cerr << "warning: skipped " << skipped << " malformed line(s) in " << path.string()
              << "\n";
  }

  WordVectorStore store(dim, oov_seed);
  for (auto& [token, v] : rows) store.Insert(std::move(token), std::move(v));
  if (report) {
    report->loaded = rows.size();
    report->skipped = skipped;
  }
  return store;
}

bool WordVectorStore::contains(std::string_view token) const {
  return vectors_.count(std::string(token)) > 0;
}

const Vec& WordVectorStore::Lookup(std::string_view token) const {
  auto it = vectors_.find(std::string(token));
  if (it != vectors_.end()) return it->second;
  it = vectors_.find(Lowercase(token));
  if (it != vectors_.end()) return it->second;
  return oov_;
}

void WordVectorStore::Insert(std::string token, Vec vector) {
  if (vector.size() != dim_) {
    throw DimensionError("word vector for '" + token + "' has width " +
                         std::to_string(vector.size()) + ", expected " + std::to_string(dim_));
  }
  vectors_[std::move(token)] = std::move(vector);
}

ContextualStore ContextualStore::Load(const std::filesystem::path& index_path,
                                      const std::filesystem::path& payload_path, int dim) {
  std::ifstream index(index_path);
  if (!index) throw LoadError("cannot open contextual index: " + index_path.string());
  std::ifstream payload(payload_path, std::ios::binary);
  if (!payload) throw LoadError("cannot open contextual payload: " + payload_path.string());

  struct Raw {
    std::string key;
    size_t offset;
    int tokens;
  };
  std::vector<Raw> raws;
  std::string line;
  size_t line_no = 0;
  while (std::getline(index, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string key, offset_s, count_s;
    long long offset = 0, count = 0;
    if (!std::getline(ss, key, '\t') || !std::getline(ss, offset_s, '\t') ||
        !std::getline(ss, count_s, '\t') || !ParseInt(offset_s, &offset) ||
        !ParseInt(count_s, &count) || offset < 0 || count <= 0) {
      throw LoadError(index_path.string() + ":" + std::to_string(line_no) +
                      ": expected 'key<TAB>offset<TAB>token_count'");
    }
    raws.push_back({key, static_cast<size_t>(offset), static_cast<int>(count)});
  }
  if (raws.empty()) throw EmptyStoreError("contextual index is empty: " + index_path.string());

  payload.seekg(0, std::ios::end);
  const size_t bytes = static_cast<size_t>(payload.tellg());
  payload.seekg(0);

  if (dim == 0) {
    // Infer from the span between consecutive offsets.
    std::vector<Raw> sorted = raws;
    std::sort(sorted.begin(), sorted.end(),
              [](const Raw& a, const Raw& b) { return a.offset < b.offset; });
    for (size_t i = 0; i < sorted.size(); ++i) {
      const size_t end = i + 1 < sorted.size() ? sorted[i + 1].offset : bytes;
      const size_t span = end - sorted[i].offset;
      const size_t per_token = static_cast<size_t>(sorted[i].tokens) * 4;
      if (span == 0 || span % per_token != 0) {
        throw AlignmentError("cannot infer contextual width at key '" + sorted[i].key + "'");
      }
      const int d = static_cast<int>(span / per_token);
      if (dim == 0) dim = d;
      if (d != dim) throw AlignmentError("inconsistent contextual width at key '" + sorted[i].key + "'");
    }
  }
  if (bytes % 4 != 0) throw AlignmentError("contextual payload size is not a multiple of 4");

  ContextualStore store;
  store.dim_ = dim;
  std::vector<uint32_t> words(bytes / 4);
  payload.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(bytes));
  store.payload_.resize(words.size());
  for (size_t i = 0; i < words.size(); ++i) {
    const uint32_t w = ToLittleEndian(words[i]);
    std::memcpy(&store.payload_[i], &w, 4);
  }
  for (const Raw& r : raws) {
    if (r.offset % 4 != 0) throw AlignmentError("unaligned offset for key '" + r.key + "'");
    const size_t start = r.offset / 4;
    if (start + static_cast<size_t>(r.tokens) * dim > store.payload_.size()) {
      throw AlignmentError("payload too short for key '" + r.key + "'");
    }
    if (store.entries_.count(r.key)) {
      std::cerr << "warning: duplicate contextual key '" << r.key << "', last one wins\n";
    }
    store.entries_[r.key] = {start, r.tokens};
  }
  return store;
}

ContextualStore ContextualStore::Synthetic(int dim, uint64_t seed) {
  if (dim <= 0) throw DimensionError("contextual width must be positive");
  ContextualStore store;
  store.dim_ = dim;
  store.synthetic_ = true;
  store.seed_ = seed;
  return store;
}

Mat ContextualStore::Get(const std::string& sentence_key, int token_count) const {
  if (synthetic_) {
    Rng rng(HashKey(sentence_key) ^ (seed_ * 0x9E3779B97F4A7C15ULL));
    Mat out(token_count, dim_);
    for (int t = 0; t < token_count; ++t)
      for (int d = 0; d < dim_; ++d) out(t, d) = rng.Uniform(-1.0, 1.0);
    return out;
  }
  auto it = entries_.find(sentence_key);
  if (it == entries_.end()) throw LookupError("no contextual embeddings for sentence '" + sentence_key + "'");
  const Entry& e = it->second;
  if (e.token_count != token_count) {
    throw AlignmentError("sentence '" + sentence_key + "' has " + std::to_string(token_count) +
                         " tokens but " + std::to_string(e.token_count) + " contextual rows");
  }
  Mat out(token_count, dim_);
  for (int t = 0; t < token_count; ++t)
    for (int d = 0; d < dim_; ++d)
      out(t, d) = payload_[e.offset_floats + static_cast<size_t>(t) * dim_ + d];
  return out;
}

void WriteContextual(const std::filesystem::path& index_path,
                     const std::filesystem::path& payload_path,
                     const std::vector<ContextualRecord>& records) {
  std::ofstream index(index_path, std::ios::binary);
  std::ofstream payload(payload_path, std::ios::binary);
  if (!index || !payload) throw LoadError("cannot write contextual files at " + index_path.string());
  size_t offset = 0;
  for (const auto& rec : records) {
    index << rec.key << '\t' << offset << '\t' << rec.rows.rows() << '\n';
    for (Eigen::Index t = 0; t < rec.rows.rows(); ++t) {
      for (Eigen::Index d = 0; d < rec.rows.cols(); ++d) {
        const float f = static_cast<float>(rec.rows(t, d));
        uint32_t w;
        std::memcpy(&w, &f, 4);
        w = ToLittleEndian(w);
        payload.write(reinterpret_cast<const char*>(&w), 4);
      }
    }
    offset += static_cast<size_t>(rec.rows.size()) * 4;
  }
}

std::vector<char32_t> DecodeUtf8(std::string_view text) {
  std::vector<char32_t> out;
  size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    int len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else if (b0 >= 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if (b0 >= 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    }
    if (i + len > text.size()) {
      // Truncated sequence: keep the raw byte.
      out.push_back(b0);
      ++i;
      continue;
    }
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(text[i + k]) & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

CharVocab CharVocab::Build(const std::vector<std::string>& tokens) {
  CharVocab vocab;
  for (const auto& token : tokens)
    for (char32_t c : DecodeUtf8(token)) vocab.Add(c);
  return vocab;
}

void CharVocab::Add(char32_t c) {
  if (index_.count(c)) return;
  chars_.push_back(c);
  index_[c] = static_cast<int>(chars_.size());
}

int CharVocab::Index(char32_t c) const {
  auto it = index_.find(c);
  return it == index_.end() ? 0 : it->second;
}

std::vector<int> CharVocab::Encode(std::string_view token) const {
  std::vector<int> ids;
  for (char32_t c : DecodeUtf8(token)) ids.push_back(Index(c));
  return ids;
}

std::string CharVocab::Serialize() const {
  std::ostringstream out;
  out << std::hex;
  for (size_t i = 0; i < chars_.size(); ++i) {
    if (i) out << ',';
    out << static_cast<uint32_t>(chars_[i]);
  }
  return out.str();
}

CharVocab CharVocab::Deserialize(std::string_view text) {
  CharVocab vocab;
  size_t i = 0;
  while (i < text.size()) {
    size_t j = text.find(',', i);
    if (j == std::string_view::npos) j = text.size();
    uint32_t cp = 0;
    auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + j, cp, 16);
    if (ec != std::errc() || ptr != text.data() + j) throw LoadError("malformed character vocabulary");
    vocab.Add(static_cast<char32_t>(cp));
    i = j + 1;
  }
  return vocab;
}

ContextWindow ExtractContextWindow(const Mat& sentence, int start, int end, int n) {
  const int length = static_cast<int>(sentence.rows());
  if (start < 0 || end <= start || end > length) {
    throw SpanError("invalid mention span [" + std::to_string(start) + ", " + std::to_string(end) +
                    ") for sentence of " + std::to_string(length) + " tokens");
  }
  if (n < 1) throw SpanError("context window size must be >= 1");
  const auto dim = sentence.cols();
  ContextWindow w;
  w.left = Mat::Zero(n, dim);
  w.right = Mat::Zero(n, dim);
  w.left_pad.assign(n, true);
  w.right_pad.assign(n, true);
  for (int i = 0; i < n; ++i) {
    const int l = start - 1 - i;
    if (l >= 0) {
      w.left.row(i) = sentence.row(l);
      w.left_pad[i] = false;
    }
    const int r = end + i;
    if (r < length) {
      w.right.row(i) = sentence.row(r);
      w.right_pad[i] = false;
    }
  }
  return w;
}

}  // namespace mzet
