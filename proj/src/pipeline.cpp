#include "mzet/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mzet/checkpoint.hpp"
#include "mzet/errors.hpp"

namespace mzet {
namespace {

std::filesystem::path Required(const Config& c, const std::string& key) {
  if (c.Empty(key)) {
    std::string flag = key;
    for (char& ch : flag)
      if (ch == '_') ch = '-';
    throw ConfigError("missing required flag --" + flag);
  }
  return c.Get(key);
}

NormalizationAxis ParseAxis(const std::string& s) {
  if (s == "seen") return NormalizationAxis::kSeen;
  if (s == "candidate") return NormalizationAxis::kCandidate;
  throw ConfigError("similarity_axis must be 'seen' or 'candidate', got '" + s + "'");
}

ModelConfig ModelConfigFrom(const Config& c, int word_dim, int ctx_dim, int label_width, int d_seen,
                            int char_vocab) {
  ModelConfig mc;
  mc.encoder.char_vocab = char_vocab;
  mc.encoder.char_dim = c.GetInt("char_dim");
  mc.encoder.char_hidden = 2 * c.GetInt("char_hidden");
  mc.encoder.word_dim = word_dim;
  mc.encoder.ctx_dim = ctx_dim;
  mc.encoder.hidden = 2 * c.GetInt("hidden");
  mc.encoder.attn_dim = c.GetInt("attn_dim");
  mc.encoder.separate_context_lstm = c.GetBool("separate_context_lstm");
  mc.encoder.Validate();
  mc.memory_dim = c.GetInt("memory_dim");
  mc.shared_dim = c.GetInt("shared_dim");
  mc.label_width = label_width;
  mc.d_seen = d_seen;
  mc.ablations = Ablations::Parse(c.Get("ablate"));
  return mc;
}

std::string CheckpointText(const Config& c, const TrainOutcome& run, const Dataset& data,
                           const std::map<std::string, std::string>& digests) {
  std::ostringstream out;
  out << c.Serialize();
  out << "char_vocab=" << run.chars.Serialize() << "\n";
  out << "hierarchy_signature=" << HierarchySignature(data.hierarchy) << "\n";
  out << "model.label_width=" << run.model.config.label_dim() << "\n";
  out << "model.d_seen=" << run.model.config.d_seen << "\n";
  if (auto it = digests.find("corpus"); it != digests.end()) out << "digest.corpus=" << it->second << "\n";
  return out.str();
}

std::map<std::string, std::string> ParseKeyValues(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

void CheckHierarchy(const TrainedModel& tm, const TypeHierarchy& h) {
  if (tm.hierarchy_signature != HierarchySignature(h)) {
    throw VersionError("incompatible checkpoint: it was trained on a different type hierarchy");
  }
}

std::vector<MentionExample> EvalPartition(const TrainedModel& tm, const Config& cfg, const Dataset& data,
                                          const std::string& split) {
  bool held_out = false;
  if (split == "test") {
    held_out = true;
  } else if (split == "auto") {
    held_out = !tm.corpus_digest.empty() && data.inputs.count("corpus") &&
               Sha256File(data.inputs.at("corpus")) == tm.corpus_digest;
  } else if (split != "all") {
    throw ConfigError("--split must be auto, test or all, got '" + split + "'");
  }
  if (!held_out) return data.examples;
  return ZeroShotSplit(data.examples, data.hierarchy, cfg.GetDouble("test_fraction"), cfg.GetU64("split_seed"))
      .test;
}

}  // namespace

Dataset LoadDataset(const Config& c) {
  Dataset d;
  const auto hierarchy = Required(c, "hierarchy");
  const auto corpus = Required(c, "corpus");
  const auto contextual = Required(c, "contextual");
  const std::string mode = c.Get("label_mode");
  if (mode != "bert_file" && mode != "avg_word") {
    throw ConfigError("label_mode must be bert_file or avg_word, got '" + mode + "'");
  }
  if (mode == "bert_file") Required(c, "labels");
  if (mode == "avg_word" && c.Empty("words")) throw ConfigError("label_mode=avg_word needs --words");

  d.hierarchy = LoadHierarchy(hierarchy, ParseLevels(c.Get("seen_levels")));
  d.inputs["hierarchy"] = hierarchy;
  d.examples = LoadCorpus(corpus, d.hierarchy);
  d.inputs["corpus"] = corpus;

  const int word_dim = c.GetInt("word_dim");
  if (c.Empty("words")) {
    d.words = WordVectorStore(word_dim);
  } else {
    const std::filesystem::path words = c.Get("words");
    d.words = WordVectorStore::Load(words);
    if (d.words.dim() != word_dim) {
      throw DimensionError("word vectors in " + words.string() + " have width " + std::to_string(d.words.dim()) +
                           ", config says word_dim=" + std::to_string(word_dim));
    }
    d.inputs["words"] = words;
  }

  const int ctx_dim = c.GetInt("ctx_dim");
  if (contextual == "synthetic") {
    d.contextual = ContextualStore::Synthetic(ctx_dim, c.GetU64("seed"));
  } else {
    const std::filesystem::path idx = contextual.string() + ".idx";
    const std::filesystem::path bin = contextual.string() + ".bin";
    d.contextual = ContextualStore::Load(idx, bin);
    if (d.contextual.dim() != ctx_dim) {
      throw DimensionError("contextual embeddings have width " + std::to_string(d.contextual.dim()) +
                           ", config says ctx_dim=" + std::to_string(ctx_dim));
    }
    d.inputs["contextual.idx"] = idx;
    d.inputs["contextual.bin"] = bin;
  }

  Mat semantic;
  if (mode == "bert_file") {
    const std::filesystem::path labels = c.Get("labels");
    semantic = LabelSemanticsFromFile(d.hierarchy, labels);
    d.inputs["labels"] = labels;
  } else {
    semantic = LabelSemanticsFromWords(d.hierarchy, d.words);
  }
  d.bank = BuildLabelReprs(std::move(semantic), BuildHierMatrix(d.hierarchy));
  return d;
}

ModelConfig MakeModelConfig(const Config& c, const Dataset& data, const CharVocab& chars) {
  return ModelConfigFrom(c, data.words.dim(), data.contextual.dim(), data.bank.d_b(), data.hierarchy.d_seen(),
                         chars.size());
}

TrainConfig MakeTrainConfig(const Config& c) {
  TrainConfig t;
  t.learning_rate = c.GetDouble("lr");
  t.decay_rate = c.GetDouble("decay");
  t.decay_steps = c.GetInt("decay_steps");
  t.margin = c.GetDouble("margin");
  t.epochs = c.GetInt("epochs");
  t.batch_size = c.GetInt("batch_size");
  t.seed = c.GetU64("seed");
  t.negative_cap = c.GetInt("negative_cap");
  t.threads = c.GetInt("threads");
  t.axis = ParseAxis(c.Get("similarity_axis"));
  t.Validate();
  return t;
}

CharVocab BuildCharVocab(const std::vector<MentionExample>& examples) {
  std::vector<std::string> tokens;
  for (const auto& ex : examples)
    for (int k = ex.start; k < ex.end; ++k) tokens.push_back(ex.tokens[k]);
  return CharVocab::Build(tokens);
}

std::vector<MentionInput> BuildInputs(const std::vector<MentionExample>& examples, const Dataset& data,
                                      const CharVocab& chars, int window) {
  std::vector<MentionInput> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(BuildMentionInput(ex, data.words, data.contextual, chars, window));
  return out;
}

std::string HierarchySignature(const TypeHierarchy& h) {
  std::string text;
  for (const auto& n : h.nodes()) text += n.path + (n.seen ? "\t1\n" : "\t0\n");
  return Sha256Hex(text);
}

std::string RunManifest::Serialize() const {
  std::ostringstream out;
  out << "command=" << command << "\n";
  out << "artifact_version=" << kArtifactVersion << "\n";
  if (config) out << config->Serialize();
  for (const auto& [k, v] : extra) out << k << "=" << v << "\n";
  for (const auto& [k, v] : digests) out << "digest." << k << "=" << v << "\n";
  out << "timestamp=" << timestamp << "\n";
  return out.str();
}

void RunManifest::Write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write manifest: " + path.string());
  out << Serialize();
}

std::map<std::string, std::string> DigestInputs(const std::map<std::string, std::filesystem::path>& inputs) {
  std::map<std::string, std::string> out;
  for (const auto& [role, path] : inputs) out[role] = Sha256File(path);
  return out;
}

std::string NowUtc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

TrainOutcome TrainModel(const Config& c, const Dataset& data, const std::function<void(const EpochLog&)>& on_epoch) {
  const TrainConfig tc = MakeTrainConfig(c);
  TrainOutcome run;
  run.split = ZeroShotSplit(data.examples, data.hierarchy, c.GetDouble("test_fraction"), c.GetU64("split_seed"));
  run.chars = BuildCharVocab(run.split.train);
  run.model = Model::Init(MakeModelConfig(c, data, run.chars), tc.seed);
  const auto inputs = BuildInputs(run.split.train, data, run.chars, c.GetInt("window"));
  std::vector<TrainingExample> examples;
  examples.reserve(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    examples.push_back({run.split.train[i].id, &inputs[i], run.split.train[i].gold});
  }
  run.result = Train(tc, examples, &run.model, data.bank, data.hierarchy, on_epoch);
  return run;
}

TrainOutcome TrainCommand(const Config& c, const std::filesystem::path& out_dir,
                          const std::function<void(const EpochLog&)>& on_epoch) {
  const Dataset data = LoadDataset(c);
  TrainOutcome run = TrainModel(c, data, on_epoch);
  std::filesystem::create_directories(out_dir);
  const auto digests = DigestInputs(data.inputs);
  WriteCheckpoint(out_dir / "model.ckpt", CheckpointText(c, run, data, digests), run.model.params);
  WriteTrainLog((out_dir / "train_log.csv").string(), run.result.log);
  RunManifest m;
  m.command = "train";
  m.config = c;
  m.extra = {{"model.ablations", run.model.config.ablations.ToString()},
             {"model.train_mentions", std::to_string(run.split.train.size())},
             {"model.test_mentions", std::to_string(run.split.test.size())},
             {"model.contextual_source", c.Get("contextual") == "synthetic" ? "synthetic" : "file"}};
  m.digests = digests;
  m.timestamp = NowUtc();
  m.Write(out_dir / "manifest.txt");
  return run;
}

TrainedModel LoadTrainedModel(const std::filesystem::path& checkpoint) {
  const Checkpoint ckpt = ReadCheckpoint(checkpoint);
  TrainedModel tm;
  tm.config.MergeText(ckpt.manifest, checkpoint.string());
  const auto kv = ParseKeyValues(ckpt.manifest);
  auto field = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw VersionError("incompatible checkpoint: manifest lacks '" + key + "'");
    return it->second;
  };
  tm.chars = CharVocab::Deserialize(field("char_vocab"));
  tm.hierarchy_signature = field("hierarchy_signature");
  if (auto it = kv.find("digest.corpus"); it != kv.end()) tm.corpus_digest = it->second;
  const ModelConfig mc = ModelConfigFrom(tm.config, tm.config.GetInt("word_dim"), tm.config.GetInt("ctx_dim"),
                                         std::stoi(field("model.label_width")), std::stoi(field("model.d_seen")),
                                         tm.chars.size());
  tm.model = Model::Init(mc, 0);
  AssignTensors(ckpt, &tm.model.params);
  return tm;
}

TrainedModel LoadTrainedModel(const std::filesystem::path& checkpoint, const TypeHierarchy& h) {
  TrainedModel tm = LoadTrainedModel(checkpoint);
  CheckHierarchy(tm, h);
  return tm;
}

std::vector<EvalResult> EvalCommand(const EvalRequest& req, const std::filesystem::path& out_dir) {
  if (req.tau && *req.tau < 0) throw ConfigError("--tau must be non-negative");
  TrainedModel tm = LoadTrainedModel(req.checkpoint);
  Config cfg = tm.config;
  if (!req.corpus.empty()) cfg.Set("corpus", req.corpus);
  const Dataset data = LoadDataset(cfg);
  CheckHierarchy(tm, data.hierarchy);

  const auto examples = EvalPartition(tm, cfg, data, req.split);
  const auto inputs = BuildInputs(examples, data, tm.chars, cfg.GetInt("window"));
  std::vector<EvalExample> eval;
  for (size_t i = 0; i < examples.size(); ++i) eval.push_back({examples[i].id, &inputs[i], examples[i].gold});
  const NormalizationAxis axis = ParseAxis(cfg.Get("similarity_axis"));

  std::vector<EvalResult> results;
  std::filesystem::create_directories(out_dir);
  for (EvalMode mode : req.modes) {
    EvalProtocol protocol;
    protocol.mode = mode;
    protocol.tau = req.tau;
    protocol.infer_parents = req.infer_parents;
    results.push_back(RunProtocol(tm.model, data.bank, data.hierarchy, eval, protocol, axis));
    const std::string tag = ToString(mode);
    WritePredictions(out_dir / ("predictions_" + tag + ".tsv"), results.back(), data.hierarchy);
    WriteTypeCounts(out_dir / ("type_counts_" + tag + ".csv"), results.back(), data.hierarchy);
  }
  WriteResultsCsv(out_dir / "results.csv", results);

  RunManifest m;
  m.command = "eval";
  m.config = cfg;
  std::string modes;
  for (EvalMode mode : req.modes) modes += (modes.empty() ? "" : ",") + ToString(mode);
  std::ostringstream tau;
  if (req.tau) {
    tau << std::setprecision(17) << *req.tau;
  } else {
    tau << "auto";
  }
  m.extra = {{"eval.modes", modes},
             {"eval.tau", tau.str()},
             {"eval.infer_parents", req.infer_parents ? "true" : "false"},
             {"eval.split", req.split},
             {"eval.mentions", std::to_string(examples.size())}};
  m.digests = DigestInputs(data.inputs);
  m.digests["checkpoint"] = Sha256File(req.checkpoint);
  m.timestamp = NowUtc();
  m.Write(out_dir / "manifest.txt");
  return results;
}

Explanation Explain(const std::filesystem::path& checkpoint, const std::string& corpus,
                    const std::string& mention_id, const std::string& unseen_type) {
  TrainedModel tm = LoadTrainedModel(checkpoint);
  if (tm.model.config.ablations.no_memory) {
    throw ConfigError("explain needs a model trained with the memory network (checkpoint uses no_memory)");
  }
  Config cfg = tm.config;
  if (!corpus.empty()) cfg.Set("corpus", corpus);
  const Dataset data = LoadDataset(cfg);
  CheckHierarchy(tm, data.hierarchy);
  const TypeHierarchy& h = data.hierarchy;

  const MentionExample* ex = nullptr;
  for (const auto& e : data.examples)
    if (e.id == mention_id) ex = &e;
  if (!ex) throw LookupError("unknown mention id '" + mention_id + "'");
  const auto type_id = h.Find(unseen_type);
  if (!type_id) throw LookupError("unknown type '" + unseen_type + "'");
  if (h.is_seen(*type_id)) throw LookupError("type '" + unseen_type + "' is seen, expected an unseen type");

  const ScoringContext ctx =
      MakeScoringContext(tm.model, data.bank, h, CandidateSet::kUnseen, ParseAxis(cfg.Get("similarity_axis")));
  const MentionInput in = BuildMentionInput(*ex, data.words, data.contextual, tm.chars, cfg.GetInt("window"));
  const PredictionRecord rec = Forward(tm.model, ctx, in);
  const auto col = std::find(ctx.candidate_ids.begin(), ctx.candidate_ids.end(), *type_id) - ctx.candidate_ids.begin();

  Explanation out;
  out.mention_id = mention_id;
  out.unseen_type = h.node(*type_id).path;
  out.similarity = ctx.r.col(col);
  out.association = rec.association;
  out.score = rec.scores[col];
  return out;
}

SyntheticFiles SynthCommand(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  SyntheticFiles files = GenerateSynthetic(spec, out_dir);
  RunManifest m;
  m.command = "synth";
  std::ostringstream num;
  auto fmt = [&](double v) {
    num.str("");
    num << std::setprecision(17) << v;
    return num.str();
  };
  m.extra = {{"synth.seed", std::to_string(spec.seed)},
             {"synth.coarse_types", std::to_string(spec.coarse_types)},
             {"synth.fine_per_coarse", std::to_string(spec.fine_per_coarse)},
             {"synth.examples_per_type", std::to_string(spec.examples_per_type)},
             {"synth.vocab_size", std::to_string(spec.vocab_size)},
             {"synth.noise", fmt(spec.noise)},
             {"synth.word_dim", std::to_string(spec.word_dim)},
             {"synth.ctx_dim", std::to_string(spec.ctx_dim)},
             {"synth.radius", fmt(spec.radius)},
             {"synth.lean", fmt(spec.lean)},
             {"synth.unique", fmt(spec.unique)},
             {"synth.context_signal", fmt(spec.context_signal)}};
  m.digests = DigestInputs({{"hierarchy", files.hierarchy},
                            {"corpus", files.corpus},
                            {"labels", files.labels},
                            {"words", files.words},
                            {"contextual.idx", files.contextual_index},
                            {"contextual.bin", files.contextual_payload}});
  m.timestamp = NowUtc();
  m.Write(out_dir / "manifest.txt");
  return files;
}

}  // namespace mzet
