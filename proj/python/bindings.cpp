#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mzet/errors.hpp"
#include "mzet/pipeline.hpp"

namespace py = pybind11;
using namespace mzet;

namespace {

Config MakeConfig(const std::vector<std::string>& config_files, const std::map<std::string, std::string>& overrides) {
  Config c;
  for (const auto& f : config_files) c.MergeFile(f);
  for (const auto& [k, v] : overrides) c.Set(k, v);
  return c;
}

py::dict ResultDict(const EvalResult& r) {
  py::dict d;
  d["mode"] = ToString(r.mode);
  d["tau"] = r.tau;
  d["mentions"] = r.mentions;
  d["strict_acc"] = r.strict_acc;
  d["macro_p"] = r.macro.precision;
  d["macro_r"] = r.macro.recall;
  d["macro_f1"] = r.macro.f1;
  d["micro_p"] = r.micro.precision;
  d["micro_r"] = r.micro.recall;
  d["micro_f1"] = r.micro.f1;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mzet, m) {
  m.doc() = "Memory-augmented zero-shot fine-grained entity typing";
  m.attr("artifact_version") = kArtifactVersion;

  py::register_exception<Error>(m, "MzetError", PyExc_ValueError);

  m.def(
      "synth",
      [](const std::string& out, uint64_t seed, int coarse, int fine_per_coarse, int examples_per_type, double noise,
         int word_dim, int ctx_dim) {
        SyntheticSpec s;
        s.seed = seed;
        s.coarse_types = coarse;
        s.fine_per_coarse = fine_per_coarse;
        s.examples_per_type = examples_per_type;
        s.noise = noise;
        s.word_dim = word_dim;
        s.ctx_dim = ctx_dim;
        auto f = SynthCommand(s, out);
        py::dict d;
        d["hierarchy"] = f.hierarchy.string();
        d["corpus"] = f.corpus.string();
        d["labels"] = f.labels.string();
        d["words"] = f.words.string();
        d["config"] = f.config.string();
        d["examples"] = f.examples;
        return d;
      },
      py::arg("out"), py::arg("seed") = 7, py::arg("coarse") = 3, py::arg("fine_per_coarse") = 2,
      py::arg("examples_per_type") = 50, py::arg("noise") = 0.1, py::arg("word_dim") = 32, py::arg("ctx_dim") = 32,
      "Write a synthetic corpus and return the generated paths.");

  m.def(
      "train",
      [](const std::string& out, const std::vector<std::string>& config_files,
         const std::map<std::string, std::string>& overrides) {
        auto run = TrainCommand(MakeConfig(config_files, overrides), out);
        py::list log;
        for (const auto& e : run.result.log) {
          py::dict d;
          d["epoch"] = e.epoch;
          d["mean_loss"] = e.mean_loss;
          d["lr"] = e.lr;
          log.append(d);
        }
        return log;
      },
      py::arg("out"), py::arg("config_files") = std::vector<std::string>{},
      py::arg("overrides") = std::map<std::string, std::string>{},
      "Train a model; writes model.ckpt, train_log.csv and manifest.txt under out. Returns the epoch log.");

  m.def(
      "evaluate",
      [](const std::string& checkpoint, const std::vector<std::string>& modes, std::optional<double> tau,
         bool infer_parents, const std::string& corpus, const std::string& split, const std::string& out) {
        EvalRequest req;
        req.checkpoint = checkpoint;
        req.modes.clear();
        for (const auto& mode : modes) req.modes.push_back(ParseEvalMode(mode));
        req.tau = tau;
        req.infer_parents = infer_parents;
        req.corpus = corpus;
        req.split = split;
        const std::filesystem::path dir =
            out.empty() ? std::filesystem::path(checkpoint).parent_path() / "eval" : std::filesystem::path(out);
        py::list results;
        for (const auto& r : EvalCommand(req, dir)) results.append(ResultDict(r));
        return results;
      },
      py::arg("checkpoint"), py::arg("modes") = std::vector<std::string>{"overall"}, py::arg("tau") = py::none(),
      py::arg("infer_parents") = false, py::arg("corpus") = "", py::arg("split") = "auto", py::arg("out") = "",
      "Evaluate a checkpoint. tau=None selects tau on a validation slice.");

  m.def(
      "explain",
      [](const std::string& checkpoint, const std::string& mention_id, const std::string& unseen_type,
         const std::string& corpus) {
        auto e = Explain(checkpoint, corpus, mention_id, unseen_type);
        py::dict d;
        d["mention_id"] = e.mention_id;
        d["unseen_type"] = e.unseen_type;
        d["similarity"] = e.similarity;
        d["association"] = e.association;
        d["score"] = e.score;
        return d;
      },
      py::arg("checkpoint"), py::arg("mention_id"), py::arg("unseen_type"), py::arg("corpus") = "");

  m.def(
      "similarity",
      [](const Mat& seen, const Mat& candidates, const std::string& axis) {
        if (axis != "seen" && axis != "candidate") throw ConfigError("axis must be seen or candidate");
        return SimilarityFromReprs(seen, candidates, axis == "seen" ? NormalizationAxis::kSeen : NormalizationAxis::kCandidate);
      },
      py::arg("seen"), py::arg("candidates"), py::arg("axis") = "seen",
      "softmax(-euclidean distance) between seen rows and candidate rows, D_s x D_cand.");

  m.def(
      "margin_loss",
      [](const Vec& scores, const std::vector<int>& pos, const std::vector<int>& neg, double margin) {
        return ComputeMarginLoss(scores, pos, neg, margin).loss;
      },
      py::arg("scores"), py::arg("positives"), py::arg("negatives"), py::arg("margin") = 1.0);

  m.def("select_labels", &SelectLabels, py::arg("scores"), py::arg("tau"));

  m.def(
      "metrics",
      [](const std::vector<LabelSet>& gold, const std::vector<LabelSet>& pred) {
        py::dict d;
        d["strict_acc"] = StrictAccuracy(gold, pred);
        auto ma = MacroPRF(gold, pred);
        auto mi = MicroPRF(gold, pred);
        d["macro_f1"] = ma.f1;
        d["micro_p"] = mi.precision;
        d["micro_r"] = mi.recall;
        d["micro_f1"] = mi.f1;
        return d;
      },
      py::arg("gold"), py::arg("pred"));
}
