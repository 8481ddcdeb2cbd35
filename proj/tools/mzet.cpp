// mzet command-line entry point: synth, train, eval, explain.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

#include "mzet/checkpoint.hpp"
#include "mzet/errors.hpp"
#include "mzet/memory_network.hpp"
#include "mzet/pipeline.hpp"

namespace {

std::string Dashed(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return key;
}

struct ConfigFlags {
  std::vector<std::string> config_files;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void Register(CLI::App* app) {
    app->add_option("--config", config_files, "flat key=value config file(s); flags override them");
    for (const auto& key : mzet::ConfigKeys()) {
      std::string help = key.help;
      if (!key.default_value.empty()) help += " [default: " + key.default_value + "]";
      options[key.name] = app->add_option("--" + Dashed(key.name), values[key.name], help);
    }
  }

  mzet::Config Resolve() const {
    mzet::Config c;
    for (const auto& f : config_files) c.MergeFile(f);
    for (const auto& [name, opt] : options)
      if (opt->count() > 0) c.Set(name, values.at(name));
    return c;
  }
};

int RunSynth(const mzet::SyntheticSpec& spec, const std::string& out) {
  const auto files = mzet::SynthCommand(spec, out);
  std::cout << "wrote " << files.examples << " mentions to " << out << "\n"
            << "  config: " << files.config.string() << "\n";
  return 0;
}

int RunTrain(const ConfigFlags& flags, const std::string& out) {
  const mzet::Config c = flags.Resolve();
  std::cout << "hyperparameters: lr=" << c.Get("lr") << " decay=" << c.Get("decay") << " window=" << c.Get("window")
            << " word_dim=" << c.Get("word_dim") << " hidden=" << c.Get("hidden") << " epochs=" << c.Get("epochs")
            << " batch_size=" << c.Get("batch_size") << " seed=" << c.Get("seed") << "\n";
  const auto ablations = mzet::Ablations::Parse(c.Get("ablate"));
  if (ablations.no_memory) std::cout << "ablation no_memory: bilinear baseline scorer\n";
  if (!c.Empty("ablate")) std::cout << "ablations: " << ablations.ToString() << "\n";
  std::cout << std::setprecision(10);
  const auto run = mzet::TrainCommand(c, out, [](const mzet::EpochLog& e) {
    std::cout << "epoch " << e.epoch << " mean_loss=" << e.mean_loss << " lr=" << e.lr << "\n" << std::flush;
  });
  std::cout << "trained on " << run.split.train.size() << " mentions (" << run.split.test.size()
            << " held out); outputs in " << out << "\n";
  if (run.result.skipped_examples) std::cout << "skipped " << run.result.skipped_examples << " examples\n";
  return 0;
}

int RunEval(mzet::EvalRequest req, const std::string& mode, const std::string& tau, std::string out) {
  if (mode == "all") {
    req.modes = {mzet::EvalMode::kOverall, mzet::EvalMode::kLevel1, mzet::EvalMode::kLevel2};
  } else {
    req.modes = {mzet::ParseEvalMode(mode)};
  }
  if (tau != "auto") {
    try {
      size_t used = 0;
      req.tau = std::stod(tau, &used);
      if (used != tau.size()) throw std::invalid_argument(tau);
    } catch (const std::exception&) {
      throw mzet::ConfigError("--tau expects 'auto' or a number, got '" + tau + "'");
    }
  }
  if (out.empty()) out = (std::filesystem::path(req.checkpoint).parent_path() / "eval").string();
  const auto results = mzet::EvalCommand(req, out);
  std::cout << std::fixed << std::setprecision(4);
  for (const auto& r : results) {
    std::cout << mzet::ToString(r.mode) << ": mentions=" << r.mentions << " acc=" << r.strict_acc
              << " macro_f1=" << r.macro.f1 << " micro_f1=" << r.micro.f1 << " tau=" << r.tau << "\n";
  }
  std::cout << "results in " << out << "\n";
  return 0;
}

int RunExplain(const std::string& checkpoint, const std::string& corpus, const std::string& mention,
               const std::string& type, std::string out) {
  if (out.empty()) out = (std::filesystem::path(checkpoint).parent_path() / "heatmap.csv").string();
  const auto ex = mzet::Explain(checkpoint, corpus, mention, type);
  const auto tm = mzet::LoadTrainedModel(checkpoint);
  mzet::Config cfg = tm.config;
  if (!corpus.empty()) cfg.Set("corpus", corpus);
  const auto h = mzet::LoadHierarchy(cfg.Get("hierarchy"), mzet::ParseLevels(cfg.Get("seen_levels")));
  mzet::WriteHeatmapCsv(out, h, ex.similarity, ex.association);

  mzet::RunManifest m;
  m.command = "explain";
  m.config = cfg;
  m.extra = {{"eval.mention_id", mention}, {"eval.unseen_type", ex.unseen_type}};
  m.digests = {{"checkpoint", mzet::Sha256File(checkpoint)}, {"heatmap", mzet::Sha256File(out)}};
  m.timestamp = mzet::NowUtc();
  auto manifest = std::filesystem::path(out);
  manifest.replace_extension(".manifest.txt");
  m.Write(manifest);
  std::cout << "mention " << mention << " vs " << ex.unseen_type << ": score=" << ex.score << "\nheatmap: " << out
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mzet: memory-augmented zero-shot fine-grained entity typing"};
  app.require_subcommand(1);

  mzet::SyntheticSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a deterministic synthetic corpus");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  synth->add_option("--coarse", spec.coarse_types, "number of coarse (seen) types")->capture_default_str();
  synth->add_option("--fine-per-coarse", spec.fine_per_coarse, "fine (unseen) types per coarse type")
      ->capture_default_str();
  synth->add_option("--examples-per-type", spec.examples_per_type, "mentions per fine type")->capture_default_str();
  synth->add_option("--vocab-size", spec.vocab_size, "approximate vocabulary size")->capture_default_str();
  synth->add_option("--noise", spec.noise, "embedding noise, relative to the type radius")->capture_default_str();
  synth->add_option("--word-dim", spec.word_dim, "word vector width")->capture_default_str();
  synth->add_option("--ctx-dim", spec.ctx_dim, "contextual embedding width")->capture_default_str();
  synth->add_option("--radius", spec.radius, "norm of the coarse type centers")->capture_default_str();
  synth->add_option("--lean", spec.lean, "how far fine centers move toward another coarse type")
      ->capture_default_str();
  synth->add_option("--unique", spec.unique, "norm of each fine type's private direction")->capture_default_str();
  synth->add_option("--context-signal", spec.context_signal, "share of the type center in context tokens")
      ->capture_default_str();

  ConfigFlags train_flags;
  std::string train_out;
  auto* train = app.add_subcommand("train", "train on the seen types of a corpus");
  train->add_option("--out", train_out, "output directory")->required();
  train_flags.Register(train);

  mzet::EvalRequest eval_req;
  std::string eval_mode = "overall", eval_tau = "auto", eval_out, eval_ckpt;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_ckpt, "model.ckpt written by train")->required();
  eval->add_option("--corpus", eval_req.corpus, "corpus to evaluate [default: the training corpus]");
  eval->add_option("--mode", eval_mode, "overall | level1 | level2 | all")->capture_default_str();
  eval->add_option("--tau", eval_tau, "label gap: 'auto' (validation grid search) or a number")
      ->capture_default_str();
  eval->add_flag("--infer-parents", eval_req.infer_parents, "add the parent of each predicted type (overall)");
  eval->add_option("--split", eval_req.split, "auto | test | all")->capture_default_str();
  eval->add_option("--out", eval_out, "output directory [default: <checkpoint dir>/eval]");

  std::string ex_ckpt, ex_corpus, ex_mention, ex_type, ex_out;
  auto* explain = app.add_subcommand("explain", "export the similarity/association heatmap for one mention");
  explain->add_option("--checkpoint", ex_ckpt, "model.ckpt written by train")->required();
  explain->add_option("--corpus", ex_corpus, "corpus holding the mention [default: the training corpus]");
  explain->add_option("--mention-id", ex_mention, "mention id")->required();
  explain->add_option("--unseen-type", ex_type, "unseen type path, e.g. /PERSON/ARTIST")->required();
  explain->add_option("--out", ex_out, "CSV path [default: <checkpoint dir>/heatmap.csv]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) return RunSynth(spec, synth_out);
    if (*train) return RunTrain(train_flags, train_out);
    if (*eval) {
      eval_req.checkpoint = eval_ckpt;
      return RunEval(eval_req, eval_mode, eval_tau, eval_out);
    }
    if (*explain) return RunExplain(ex_ckpt, ex_corpus, ex_mention, ex_type, ex_out);
  } catch (const mzet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
