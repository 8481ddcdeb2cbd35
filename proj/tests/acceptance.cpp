// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when everything passes).
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "mzet/checkpoint.hpp"
#include "mzet/errors.hpp"
#include "oracles.hpp"

using namespace mzet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// Synthetic setup shared by the transfer and ablation criteria.
SyntheticSpec TransferSpec() {
  SyntheticSpec s;
  s.seed = 7;
  s.examples_per_type = 100;
  s.noise = 0.1;
  return s;
}

Config TransferConfig(const SyntheticFiles& files, uint64_t seed, bool no_memory) {
  Config c = fixture::SmallTrainingConfig(files);
  c.Set("seed", std::to_string(seed));
  if (no_memory) c.Set("ablate", "no_memory");
  return c;
}

EvalResult Level2(const std::filesystem::path& run_dir) {
  EvalRequest req;
  req.checkpoint = run_dir / "model.ckpt";
  req.modes = {EvalMode::kLevel2};
  return EvalCommand(req, run_dir / "eval").front();
}

// ---------------------------------------------------------------------------

Outcome FormulaOracles() {
  const int kInstances = 1000;
  Rng rng(2024);
  double worst = 0;
  size_t set_mismatch = 0;
  auto rel = [&](const Mat& a, const Mat& b) { worst = std::max(worst, testutil::MaxRelDiff(a, b)); };
  auto to_vec = [](const std::vector<double>& v) { return Vec(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()))); };

  for (int t = 0; t < kInstances; ++t) {
    // margin loss
    const int n = 2 + static_cast<int>(rng.Below(6));
    Vec s(n);
    for (int i = 0; i < n; ++i) s[i] = rng.Uniform();
    std::vector<int> pos = {0}, neg;
    for (int i = 1; i < n; ++i) (rng.Below(3) == 0 ? pos : neg).push_back(i);
    if (neg.empty()) neg.push_back(pos.back()), pos.pop_back();
    std::vector<double> sv(s.data(), s.data() + n);
    Mat a(1, 1), b(1, 1);
    a << ComputeMarginLoss(s, pos, neg).loss;
    b << oracle::MarginLoss(sv, pos, neg);
    rel(a, b);

    // set metrics: exact equality
    std::vector<LabelSet> gold, pred;
    const int m = 1 + static_cast<int>(rng.Below(6));
    for (int i = 0; i < m; ++i) {
      LabelSet g, p;
      for (int k = 0; k < 6; ++k) {
        if (rng.Below(3) == 0) g.insert(k);
        if (rng.Below(3) == 0) p.insert(k);
      }
      gold.push_back(g);
      pred.push_back(p);
    }
    auto ma = MacroPRF(gold, pred);
    auto mi = MicroPRF(gold, pred);
    auto rma = oracle::Macro(gold, pred);
    auto rmi = oracle::Micro(gold, pred);
    set_mismatch += StrictAccuracy(gold, pred) != oracle::Strict(gold, pred);
    set_mismatch += ma.precision != rma[0] || ma.recall != rma[1] || ma.f1 != rma[2];
    set_mismatch += mi.precision != rmi[0] || mi.recall != rmi[1] || mi.f1 != rmi[2];

    // label representation and similarity
    auto h = TypeHierarchy::Build({"/A", "/B", "/C", "/A/X", "/B/Y", "/C/Z", "/A/W"}, {1});
    const int d_b = 1 + static_cast<int>(rng.Below(5));
    const Mat sem = testutil::RandMat(rng, h.size(), d_b);
    auto bank = BuildLabelReprs(sem, BuildHierMatrix(h));
    rel(bank.reprs, oracle::LabelRepr(sem, bank.hier));
    rel(SimilarityMatrix(bank, h, SimilarityMode::kZeroShot),
        oracle::Similarity(bank.reprs.topRows(3), bank.reprs.bottomRows(4)));
    rel(SimilarityMatrix(bank, h, SimilarityMode::kTraining),
        oracle::Similarity(bank.reprs.topRows(3), bank.reprs.topRows(3)));

    // memory attention and the full score path
    const int d_e = 1 + static_cast<int>(rng.Below(6)), d_s = 1 + static_cast<int>(rng.Below(5));
    const int d_m = 1 + static_cast<int>(rng.Below(5)), d_c = 1 + static_cast<int>(rng.Below(4));
    MemoryParams mp{testutil::RandMat(rng, d_e, d_m), testutil::RandMat(rng, d_b, d_m),
                    testutil::RandMat(rng, d_b, d_m), testutil::RandMat(rng, d_s, d_m)};
    const Mat f = testutil::RandMat(rng, d_s, d_b);
    const Vec mv = testutil::RandVec(rng, d_e);
    const Mat r = testutil::RandMat(rng, d_s, d_c);
    auto rec = Score(mp, BuildMemory(mp, f), mv, r);
    auto ref = oracle::ScorePath(mp.w_map, mp.w_f1, mp.w_f2, mp.w_p, f, mv, r);
    rel(rec.attention, to_vec(ref.attention));
    rel(rec.association, to_vec(ref.association));
    rel(rec.scores, to_vec(ref.scores));

    // context attention
    EncoderDims dims;
    dims.char_vocab = 4;
    dims.char_dim = 2;
    dims.char_hidden = 2;
    dims.word_dim = 2;
    dims.ctx_dim = 3;
    dims.hidden = 4;
    dims.attn_dim = 3;
    Rng prng(rng.Below(1u << 30));
    auto ep = EncoderParams::Init(dims, prng);
    ep.w_a = testutil::RandMat(rng, 1, 3);
    const int w = 1 + static_cast<int>(rng.Below(3));
    ContextWindow win{testutil::RandMat(rng, w, 3), testutil::RandMat(rng, w, 3), std::vector<bool>(w), std::vector<bool>(w)};
    for (int k = 0; k < w; ++k) {
      win.left_pad[k] = rng.Below(4) == 0;
      win.right_pad[k] = rng.Below(4) == 0;
      if (win.left_pad[k]) win.left.row(k).setZero();
      if (win.right_pad[k]) win.right.row(k).setZero();
    }
    auto att = AttendContext(ep, win);
    auto aref = oracle::Attention(ep.context_lstm.fwd.w, ep.context_lstm.fwd.b, ep.context_lstm.bwd.w,
                                  ep.context_lstm.bwd.b, ep.w_e, ep.w_a, win.left, win.left_pad, win.right,
                                  win.right_pad);
    rel(att.weights, to_vec(aref.weights));
    rel(att.m_c, aref.m_c);
  }
  return {worst <= 1e-10 && set_mismatch == 0,
          Fmt("%.0f instances per formula, max relative error %.3g, set-metric mismatches %.0f", kInstances, worst,
              static_cast<double>(set_mismatch))};
}

Outcome GradientVerification() {
  double worst = 0;
  size_t checked = 0, excluded = 0;
  std::string where;
  for (uint64_t seed : {11ULL, 12ULL, 13ULL}) {
    // D_h = 8, D_m = 6, D_s = 4, D_u = 3, mentions of 1..3 tokens, n = 2
    auto t = fixture::MakeTiny(seed, 8, 6, 2);
    auto report = fixture::CheckModelGradients(t, 1e-4);
    checked += report.checked;
    excluded += report.excluded;
    if (report.max_rel_error > worst) {
      worst = report.max_rel_error;
      where = report.worst_tensor;
    }
  }
  return {worst < 1e-3 && checked > 0,
          Fmt("max relative error %.3g over %.0f coordinates (%.0f excluded at hinge kinks), worst in ", worst,
              static_cast<double>(checked), static_cast<double>(excluded)) + where};
}

struct TransferRuns {
  std::vector<double> full_acc, full_f1, base_f1;
};

TransferRuns& Transfer(const std::filesystem::path& root) {
  static TransferRuns runs;
  static bool done = false;
  if (done) return runs;
  done = true;
  auto files = GenerateSynthetic(TransferSpec(), root / "data");
  for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    for (bool no_memory : {false, true}) {
      const auto dir = root / ((no_memory ? "no_memory_" : "full_") + std::to_string(seed));
      TrainCommand(TransferConfig(files, seed, no_memory), dir);
      auto r = Level2(dir);
      if (no_memory) {
        runs.base_f1.push_back(r.micro.f1);
      } else {
        runs.full_acc.push_back(r.strict_acc);
        runs.full_f1.push_back(r.micro.f1);
      }
    }
  }
  return runs;
}

Outcome ZeroShotTransfer(const std::filesystem::path& root) {
  auto& runs = Transfer(root);
  const double acc = runs.full_acc.front();
  const double floor = 3.0 / 6.0;  // 3 x 1/D_u with D_u = 6
  return {acc >= 0.8 && acc >= floor,
          Fmt("level-2 strict accuracy %.4f (seed 1, 15 epochs); needs >= 0.80 and >= %.3f", acc, floor)};
}

Outcome AblationDirection(const std::filesystem::path& root) {
  auto& runs = Transfer(root);
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double full = mean(runs.full_f1), base = mean(runs.base_f1);
  std::ostringstream per;
  for (size_t i = 0; i < runs.full_f1.size(); ++i)
    per << (i ? ", " : "") << "seed " << i + 1 << ": " << runs.full_f1[i] << " vs " << runs.base_f1[i];
  return {full - base >= 0.02,
          Fmt("mean level-2 micro-F1 full %.4f vs no_memory %.4f (gap %+.4f); ", full, base, full - base) + per.str()};
}

std::string StripTimestamp(const std::string& manifest) {
  std::istringstream in(manifest);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("timestamp=", 0) != 0) out += line + "\n";
  return out;
}

Outcome Determinism(const std::filesystem::path& root) {
  SyntheticSpec spec;
  spec.examples_per_type = 30;
  auto files = GenerateSynthetic(spec, root / "data");
  Config c = fixture::SmallTrainingConfig(files);
  c.Set("epochs", "5");
  auto a = TrainCommand(c, root / "a");
  auto b = TrainCommand(c, root / "b");
  double gap = 0;
  for (size_t i = 0; i < a.result.log.size(); ++i)
    gap = std::max(gap, std::abs(a.result.log[i].mean_loss - b.result.log[i].mean_loss));
  const bool same_len = a.result.log.size() == b.result.log.size() && !a.result.log.empty();
  const bool manifests = StripTimestamp(testutil::ReadFile(root / "a" / "manifest.txt")) ==
                         StripTimestamp(testutil::ReadFile(root / "b" / "manifest.txt"));
  const bool ckpt = testutil::ReadFile(root / "a" / "model.ckpt") == testutil::ReadFile(root / "b" / "model.ckpt");
  return {same_len && gap <= 1e-9 && manifests,
          Fmt("max per-epoch loss gap %.3g over %.0f epochs; manifests identical without timestamp: ", gap,
              static_cast<double>(a.result.log.size())) +
              (manifests ? "yes" : "no") + "; checkpoints identical: " + (ckpt ? "yes" : "no")};
}

Outcome ProtocolConformance() {
  // Exhaustive split check: every two-mention corpus over every non-empty
  // label set of a 2 x 2 hierarchy, at several fractions and seeds.
  auto h = TypeHierarchy::Build({"/A", "/B", "/A/X", "/A/Y", "/B/Z"}, {1});
  std::vector<std::vector<int>> label_sets;
  for (int mask = 1; mask < (1 << h.size()); ++mask) {
    std::vector<int> ids;
    for (int i = 0; i < h.size(); ++i)
      if (mask & (1 << i)) ids.push_back(i);
    label_sets.push_back(ids);
  }
  size_t splits = 0, leaks = 0;
  auto mention = [](const std::string& id, const std::vector<int>& gold) {
    return MentionExample{id, id, {"w"}, 0, 1, gold, false};
  };
  for (const auto& g1 : label_sets)
    for (const auto& g2 : label_sets)
      for (double frac : {0.5, 1.0})
        for (uint64_t seed = 0; seed < 3; ++seed) {
          std::vector<MentionExample> ex = {mention("m1", g1), mention("m2", g2), mention("m3", {0})};
          CorpusSplit split;
          try {
            split = ZeroShotSplit(ex, h, frac, seed);
          } catch (const SplitError&) {
            continue;
          }
          ++splits;
          for (const auto& m : split.train)
            for (int id : m.gold) leaks += !h.is_seen(id);
          leaks += split.train.size() + split.test.size() != ex.size();
        }

  Rng rng(77);
  const int kCases = 10000;
  size_t mono_fail = 0, idem_fail = 0;
  for (int t = 0; t < kCases; ++t) {
    const int n = 1 + static_cast<int>(rng.Below(8));
    Vec s(n);
    for (int i = 0; i < n; ++i) s[i] = rng.Below(4) == 0 ? 0.5 : rng.Uniform();
    const double t1 = rng.Uniform(0.0, 0.5), t2 = t1 + rng.Uniform(0.0, 0.5);
    auto a = SelectLabels(s, t1), b = SelectLabels(s, t2);
    mono_fail += a.empty() || !std::includes(b.begin(), b.end(), a.begin(), a.end());

    LabelSet sel;
    for (int i = 0; i < h.size(); ++i)
      if (rng.Below(3) == 0) sel.insert(i);
    const LabelSet once = InferParents(sel, h);
    idem_fail += InferParents(once, h) != once || !std::includes(once.begin(), once.end(), sel.begin(), sel.end());
  }
  return {splits > 0 && leaks == 0 && mono_fail == 0 && idem_fail == 0,
          Fmt("%.0f exhaustive splits with %.0f leaks; %.0f select/infer cases with %.0f failures", static_cast<double>(splits),
              static_cast<double>(leaks), kCases, static_cast<double>(mono_fail + idem_fail))};
}

int Shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome HeatmapExport(const std::filesystem::path& root) {
  const std::string cli = MZET_CLI, d = root.string();
  if (Shell(cli + " synth --out " + d + "/s --examples-per-type 10") != 0) return {false, "synth failed"};
  if (Shell(cli + " train --out " + d + "/r --config " + d + "/s/synth.cfg --hidden 8 --char-hidden 4 --attn-dim 8" +
            " --memory-dim 8 --epochs 2 --lr 0.003") != 0)
    return {false, "train failed"};
  auto h = LoadHierarchy(root / "s" / "hierarchy.txt", {1});
  auto ex = LoadCorpus(root / "s" / "corpus.tsv", h);
  const auto unseen = h.UnseenIds();
  const int target = unseen[unseen.size() / 2];
  if (Shell(cli + " explain --checkpoint " + d + "/r/model.ckpt --mention-id " + ex.back().id + " --unseen-type " +
            h.node(target).path + " --out " + d + "/heat.csv") != 0)
    return {false, "explain failed"};

  // Recompute the similarity column from the label file with the oracle.
  const Mat sem = LabelSemanticsFromFile(h, root / "s" / "labels.tsv");
  const Mat reprs = oracle::LabelRepr(sem, BuildHierMatrix(h));
  const Mat r = oracle::Similarity(reprs.topRows(h.d_seen()), reprs.row(target));

  std::istringstream csv(testutil::ReadFile(root / "heat.csv"));
  std::string line;
  std::getline(csv, line);
  double worst = 0;
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream cells(line);
    std::string type, sim;
    std::getline(cells, type, ',');
    std::getline(cells, sim, ',');
    const int id = h.IdOf(type);
    worst = std::max(worst, std::abs(std::stod(sim) - r(id, 0)));
    ++rows;
  }
  return {rows == h.d_seen() && worst <= 1e-6,
          Fmt("%.0f rows, max |csv - oracle| %.3g for unseen type ", rows, worst) + h.node(target).path};
}

}  // namespace

int main() {
  testutil::TempDir root("acceptance");
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"formula oracles", FormulaOracles},
      {"gradient verification", GradientVerification},
      {"zero-shot transfer", [&] { return ZeroShotTransfer(root.path() / "transfer"); }},
      {"ablation direction", [&] { return AblationDirection(root.path() / "transfer"); }},
      {"determinism", [&] { return Determinism(root.path() / "determinism"); }},
      {"protocol conformance", ProtocolConformance},
      {"heatmap export", [&] { return HeatmapExport(root.path() / "heatmap"); }},
  };
  std::cout << "INFO [1] benchmark reproduction: not attempted, the licensed corpora and contextual encoders are not available; "
               "criteria 2-8 substitute oracle, property and directional checks\n";
  int failed = 0, index = 2;
  for (auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << index++ << "] " << name << ": " << o.detail
              << Fmt(" (%.1fs)", secs) << std::endl;
    failed += !o.pass;
  }
  return failed;
}
