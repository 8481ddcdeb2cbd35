#include "mzet/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "mzet/errors.hpp"
#include "mzet/random.hpp"

namespace mzet {
namespace {

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool ParseInt(const std::string& s, int* out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::vector<MentionExample> LoadCorpus(const std::filesystem::path& path, const TypeHierarchy& h) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open corpus: " + path.string());
  std::vector<MentionExample> out;
  std::string line;
  size_t line_no = 0;
  auto where = [&] { return path.string() + ":" + std::to_string(line_no) + ": "; };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = Split(line, '\t');
    if (f.size() != 6) throw LoadError(where() + "expected 6 tab-separated fields, got " + std::to_string(f.size()));
    MentionExample ex;
    ex.id = f[0];
    ex.sentence_key = f[1];
    for (auto& t : Split(f[2], ' '))
      if (!t.empty()) ex.tokens.push_back(t);
    if (!ParseInt(f[3], &ex.start) || !ParseInt(f[4], &ex.end)) throw SpanError(where() + "non-integer span");
    if (ex.start < 0 || ex.end <= ex.start || ex.end > static_cast<int>(ex.tokens.size())) {
      throw SpanError(where() + "invalid span [" + f[3] + ", " + f[4] + ") for " +
                      std::to_string(ex.tokens.size()) + " tokens");
    }
    for (const auto& label : Split(f[5], ',')) {
      if (label.empty()) continue;
      auto id = h.Find(label);
      if (!id) throw LoadError(where() + "unknown label path '" + label + "'");
      if (std::find(ex.gold.begin(), ex.gold.end(), *id) == ex.gold.end()) ex.gold.push_back(*id);
    }
    if (ex.gold.empty()) throw LoadError(where() + "mention has no labels");
    ex.test_only = std::none_of(ex.gold.begin(), ex.gold.end(),
                                [&](int id) { return h.SeenAncestor(id).has_value(); });
    out.push_back(std::move(ex));
  }
  return out;
}

void WriteCorpus(const std::filesystem::path& path, const std::vector<MentionExample>& examples,
                 const TypeHierarchy& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write corpus: " + path.string());
  for (const auto& ex : examples) {
    out << ex.id << '\t' << ex.sentence_key << '\t';
    for (size_t i = 0; i < ex.tokens.size(); ++i) out << (i ? " " : "") << ex.tokens[i];
    out << '\t' << ex.start << '\t' << ex.end << '\t';
    for (size_t i = 0; i < ex.gold.size(); ++i) out << (i ? "," : "") << h.node(ex.gold[i]).path;
    out << '\n';
  }
}

CorpusSplit ZeroShotSplit(const std::vector<MentionExample>& examples, const TypeHierarchy& h,
                          double test_fraction, uint64_t seed) {
  if (test_fraction < 0 || test_fraction > 1) throw ConfigError("test fraction must be in [0, 1]");
  std::vector<size_t> eligible;
  for (size_t i = 0; i < examples.size(); ++i) {
    const auto& g = examples[i].gold;
    const bool has_unseen = std::any_of(g.begin(), g.end(), [&](int id) { return !h.is_seen(id); });
    if (has_unseen && !examples[i].test_only) eligible.push_back(i);
  }
  Rng rng(seed);
  rng.Shuffle(eligible);
  const auto n_test = static_cast<size_t>(std::llround(test_fraction * static_cast<double>(eligible.size())));
  std::vector<bool> to_test(examples.size(), false);
  for (size_t k = 0; k < n_test; ++k) to_test[eligible[k]] = true;

  CorpusSplit split;
  for (size_t i = 0; i < examples.size(); ++i) {
    const MentionExample& ex = examples[i];
    if (ex.test_only || to_test[i]) {
      split.test.push_back(ex);
      continue;
    }
    MentionExample t = ex;
    t.gold.clear();
    for (int id : ex.gold) {
      auto a = h.SeenAncestor(id);
      if (a && std::find(t.gold.begin(), t.gold.end(), *a) == t.gold.end()) t.gold.push_back(*a);
    }
    split.train.push_back(std::move(t));
  }
  if (split.train.empty()) throw SplitError("zero-shot split produced an empty training partition");
  if (split.test.empty()) throw SplitError("zero-shot split produced an empty test partition");
  return split;
}

MentionInput BuildMentionInput(const MentionExample& ex, const WordVectorStore& words,
                               const ContextualStore& contextual, const CharVocab& chars,
                               int window) {
  const Mat sentence = contextual.Get(ex.sentence_key, static_cast<int>(ex.tokens.size()));
  MentionInput in;
  for (int k = ex.start; k < ex.end; ++k) {
    const std::string& token = ex.tokens[k];
    if (token.empty()) throw EmptyTokenError("empty token in mention '" + ex.id + "'");
    in.char_ids.push_back(chars.Encode(token));
    in.word_vectors.push_back(words.Lookup(token));
    in.mention_ctx.push_back(sentence.row(k).transpose());
  }
  in.window = ExtractContextWindow(sentence, ex.start, ex.end, window);
  return in;
}

void SyntheticSpec::Validate() const {
  if (coarse_types < 1 || fine_per_coarse < 1 || examples_per_type < 1 || vocab_size < 1) {
    throw ConfigError("synthetic counts must all be >= 1");
  }
  if (word_dim < 1 || ctx_dim < 1) throw ConfigError("synthetic widths must be >= 1");
  if (noise < 0 || radius <= 0 || unique < 0 || lean < 0 || lean > 1 || context_signal < 0) {
    throw ConfigError("synthetic geometry parameters out of range");
  }
}

namespace {

// Pronounceable pseudo-words.
std::string PseudoWord(Rng& rng, int syllables) {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "th"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  std::string w;
  for (int s = 0; s < syllables; ++s) {
    w += kOnsets[rng.Below(std::size(kOnsets))];
    w += kVowels[rng.Below(std::size(kVowels))];
  }
  return w;
}

std::string Upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Random directions, orthonormalized while the width allows it.
std::vector<Vec> Directions(Rng& rng, int count, int dim) {
  std::vector<Vec> out;
  for (int k = 0; k < count; ++k) {
    Vec v(dim);
    for (int d = 0; d < dim; ++d) v[d] = rng.Normal();
    if (static_cast<int>(out.size()) < dim)
      for (const Vec& u : out) v -= v.dot(u) * u;
    v.normalize();
    out.push_back(v);
  }
  return out;
}

Vec NoiseVec(Rng& rng, int dim, double norm) {
  Vec v(dim);
  for (int d = 0; d < dim; ++d) v[d] = rng.Normal() * norm / std::sqrt(static_cast<double>(dim));
  return v;
}

void WriteVector(std::ostream& out, const Vec& v) {
  for (Eigen::Index d = 0; d < v.size(); ++d) out << (d ? " " : "") << static_cast<float>(v[d]);
}

}  // namespace

SyntheticFiles GenerateSynthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  spec.Validate();
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir = std::filesystem::absolute(out_dir);
  Rng rng(spec.seed);
  const int K = spec.coarse_types;
  const int F = spec.fine_per_coarse;
  const int n_fine = K * F;

  // Names.
  std::set<std::string> used;
  auto fresh = [&](int syllables) {
    std::string w;
    do w = PseudoWord(rng, syllables);
    while (!used.insert(w).second);
    return w;
  };
  std::vector<std::string> coarse_name(K), fine_name(n_fine);
  for (int k = 0; k < K; ++k) coarse_name[k] = Upper(fresh(2));
  for (int t = 0; t < n_fine; ++t) fine_name[t] = Upper(fresh(3));

  // Geometry in the contextual space: coarse centers c_k; fine centers lean
  // toward another coarse type plus a private direction.
  const auto dirs = Directions(rng, K + n_fine, spec.ctx_dim);
  std::vector<Vec> coarse_c(K), fine_c(n_fine);
  for (int k = 0; k < K; ++k) coarse_c[k] = spec.radius * dirs[k];
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < F; ++j) {
      const int t = k * F + j;
      Vec center = coarse_c[k];
      if (K > 1) {
        const int target = (k + 1 + j % (K - 1)) % K;
        center += spec.lean * (coarse_c[target] - coarse_c[k]);
      }
      center += spec.unique * spec.radius * dirs[K + t];
      fine_c[t] = center;
    }
  }
  // Fixed projection into the word space.
  Mat proj(spec.word_dim, spec.ctx_dim);
  for (int r = 0; r < spec.word_dim; ++r)
    for (int c = 0; c < spec.ctx_dim; ++c) proj(r, c) = rng.Normal() / std::sqrt(static_cast<double>(spec.word_dim));

  // Vocabulary: a mention-word pool per fine type plus shared filler.
  // Spelling carries no type information.
  const int pool = std::max(2, spec.vocab_size / (2 * n_fine));
  const int n_filler = std::max(4, spec.vocab_size / 2);
  const double word_noise = spec.noise * spec.radius;
  std::vector<std::vector<std::string>> pools(n_fine);
  std::vector<std::pair<std::string, Vec>> vocab;
  for (int t = 0; t < n_fine; ++t) {
    for (int w = 0; w < pool; ++w) {
      std::string word;
      do word = PseudoWord(rng, 2 + static_cast<int>(rng.Below(2)));
      while (!used.insert(word).second);
      pools[t].push_back(word);
      vocab.emplace_back(word, proj * fine_c[t] + NoiseVec(rng, spec.word_dim, word_noise));
    }
  }
  std::vector<std::string> filler;
  std::vector<Vec> filler_ctx;
  for (int w = 0; w < n_filler; ++w) {
    filler.push_back(fresh(2));
    vocab.emplace_back(filler.back(), NoiseVec(rng, spec.word_dim, spec.radius));
    filler_ctx.push_back(NoiseVec(rng, spec.ctx_dim, spec.radius));
  }
  for (int k = 0; k < K; ++k) {
    std::string lower = coarse_name[k];
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    vocab.emplace_back(lower, proj * coarse_c[k]);
  }
  for (int t = 0; t < n_fine; ++t) {
    std::string lower = fine_name[t];
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    vocab.emplace_back(lower, proj * fine_c[t]);
  }

  SyntheticFiles files;
  files.hierarchy = dir / "hierarchy.txt";
  files.corpus = dir / "corpus.tsv";
  files.labels = dir / "labels.tsv";
  files.words = dir / "words.txt";
  files.contextual_index = dir / "contextual.idx";
  files.contextual_payload = dir / "contextual.bin";
  files.config = dir / "synth.cfg";

  std::vector<std::string> coarse_path(K), fine_path(n_fine);
  {
    std::ofstream h(files.hierarchy, std::ios::binary);
    for (int k = 0; k < K; ++k) {
      coarse_path[k] = "/" + coarse_name[k];
      h << coarse_path[k] << '\n';
    }
    for (int t = 0; t < n_fine; ++t) {
      fine_path[t] = coarse_path[t / F] + "/" + fine_name[t];
      h << fine_path[t] << '\n';
    }
  }
  {
    std::ofstream l(files.labels, std::ios::binary);
    l << std::setprecision(9);
    for (int k = 0; k < K; ++k) {
      l << coarse_path[k] << '\t';
      WriteVector(l, coarse_c[k]);
      l << '\n';
    }
    for (int t = 0; t < n_fine; ++t) {
      l << fine_path[t] << '\t';
      WriteVector(l, fine_c[t]);
      l << '\n';
    }
  }
  {
    std::ofstream w(files.words, std::ios::binary);
    w << std::setprecision(9);
    for (const auto& [word, v] : vocab) {
      w << word << ' ';
      WriteVector(w, v);
      w << '\n';
    }
  }

  // Sentences. With zero noise every example of a type reuses the type's
  // first draw, so all examples of a type are identical.
  const double ctx_noise = spec.noise * spec.radius;
  std::ofstream corpus(files.corpus, std::ios::binary);
  std::vector<ContextualRecord> records;
  size_t serial = 0;
  for (int t = 0; t < n_fine; ++t) {
    const uint64_t type_seed = spec.seed * 1000003ULL + static_cast<uint64_t>(t);
    for (int e = 0; e < spec.examples_per_type; ++e, ++serial) {
      Rng ex_rng(HashKey(std::to_string(type_seed) + ":" + std::to_string(spec.noise > 0 ? e : 0)));
      const int n_left = 2 + static_cast<int>(ex_rng.Below(5));
      const int n_mention = 1 + static_cast<int>(ex_rng.Below(3));
      const int n_right = 2 + static_cast<int>(ex_rng.Below(5));
      std::vector<std::string> tokens;
      std::vector<Vec> rows;
      auto add_filler = [&] {
        const size_t w = ex_rng.Below(filler.size());
        tokens.push_back(filler[w]);
        rows.push_back(spec.context_signal * fine_c[t] + (1.0 - spec.context_signal) * filler_ctx[w] +
                       NoiseVec(ex_rng, spec.ctx_dim, ctx_noise));
      };
      for (int i = 0; i < n_left; ++i) add_filler();
      for (int i = 0; i < n_mention; ++i) {
        tokens.push_back(pools[t][ex_rng.Below(pools[t].size())]);
        rows.push_back(fine_c[t] + NoiseVec(ex_rng, spec.ctx_dim, ctx_noise));
      }
      for (int i = 0; i < n_right; ++i) add_filler();

      std::ostringstream key, id;
      key << 's' << std::setw(6) << std::setfill('0') << serial;
      id << 'm' << std::setw(6) << std::setfill('0') << serial;
      corpus << id.str() << '\t' << key.str() << '\t';
      for (size_t i = 0; i < tokens.size(); ++i) corpus << (i ? " " : "") << tokens[i];
      corpus << '\t' << n_left << '\t' << n_left + n_mention << '\t' << coarse_path[t / F] << ','
             << fine_path[t] << '\n';
      Mat m(static_cast<Eigen::Index>(rows.size()), spec.ctx_dim);
      for (size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
      records.push_back({key.str(), std::move(m)});
    }
  }
  corpus.close();
  WriteContextual(files.contextual_index, files.contextual_payload, records);
  files.examples = serial;

  {
    std::ofstream c(files.config, std::ios::binary);
    c << "# synthetic corpus, seed " << spec.seed << "\n"
      << "hierarchy=" << files.hierarchy.string() << "\n"
      << "corpus=" << files.corpus.string() << "\n"
      << "labels=" << files.labels.string() << "\n"
      << "words=" << files.words.string() << "\n"
      << "contextual=" << (dir / "contextual").string() << "\n"
      << "seen_levels=1\n"
      << "word_dim=" << spec.word_dim << "\n"
      << "ctx_dim=" << spec.ctx_dim << "\n";
  }
  return files;
}

}  // namespace mzet
