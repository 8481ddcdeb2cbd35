#include "mzet/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "mzet/errors.hpp"

namespace mzet {

const std::vector<ConfigKey>& ConfigKeys() {
  static const std::vector<ConfigKey> keys = {
      {"corpus", "", "corpus file (tab-separated mention records)"},
      {"hierarchy", "", "type hierarchy file, one label path per line"},
      {"labels", "", "label semantics file (path<TAB>floats); required when label_mode=bert_file"},
      {"label_mode", "bert_file", "label semantics source: bert_file | avg_word"},
      {"words", "", "word vector text file; empty means every token is OOV"},
      {"contextual", "", "contextual embedding prefix (<prefix>.idx, <prefix>.bin) or 'synthetic'"},
      {"seen_levels", "1", "hierarchy levels treated as seen, e.g. 1 or 1,2"},
      {"window", "10", "context window size per side"},
      {"test_fraction", "0.3", "share of mentions with unseen labels held out for testing"},
      {"split_seed", "13", "seed of the train/test split"},
      {"word_dim", "300", "word vector width"},
      {"ctx_dim", "768", "contextual embedding width"},
      {"char_dim", "30", "character embedding width"},
      {"char_hidden", "50", "character LSTM hidden size per direction"},
      {"hidden", "200", "LSTM hidden size per direction"},
      {"attn_dim", "100", "context attention width"},
      {"memory_dim", "200", "memory network width"},
      {"shared_dim", "0", "bilinear baseline width; 0 means the label width"},
      {"separate_context_lstm", "false", "use distinct LSTMs for left and right context"},
      {"similarity_axis", "seen", "similarity normalization: seen | candidate"},
      {"lr", "0.0001", "learning rate"},
      {"decay", "0.9", "learning-rate decay factor"},
      {"decay_steps", "0", "apply decay every N steps; 0 means once per epoch"},
      {"margin", "1", "hinge margin"},
      {"epochs", "30", "training epochs"},
      {"batch_size", "64", "mini-batch size"},
      {"seed", "1", "seed for initialization and batch order"},
      {"negative_cap", "0", "sample at most N negatives; 0 uses every non-gold seen type"},
      {"threads", "1", "gradient worker threads"},
      {"ablate", "", "comma-separated: no_memory,no_context_attn,no_word_char,no_bert_mention"},
  };
  return keys;
}

namespace {

bool ManifestOnly(const std::string& key) {
  return key == "command" || key == "artifact_version" || key == "timestamp" ||
         key == "char_vocab" || key == "hierarchy_signature" || key.rfind("digest.", 0) == 0 ||
         key.rfind("eval.", 0) == 0 || key.rfind("model.", 0) == 0 || key.rfind("synth.", 0) == 0;
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Config::Config() {
  for (const auto& k : ConfigKeys()) values_[k.name] = k.default_value;
}

void Config::MergeFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  MergeText(ss.str(), path.string());
}

void Config::MergeText(std::string_view text, const std::string& origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = Trim(std::string_view(t).substr(0, eq));
    const std::string value = Trim(std::string_view(t).substr(eq + 1));
    if (ManifestOnly(key)) continue;
    if (!values_.count(key)) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    values_[key] = value;
  }
}

void Config::Set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

bool Config::Has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& Config::Get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

int Config::GetInt(const std::string& key) const {
  const std::string& v = Get(key);
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

uint64_t Config::GetU64(const std::string& key) const {
  const std::string& v = Get(key);
  uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double Config::GetDouble(const std::string& key) const {
  const std::string& v = Get(key);
  try {
    size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
}

bool Config::GetBool(const std::string& key) const {
  std::string v = Get(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) return false;
  throw ConfigError("config key '" + key + "' expects a boolean, got '" + Get(key) + "'");
}

std::string Config::Serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

}  // namespace mzet
