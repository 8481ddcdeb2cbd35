#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "mzet/checkpoint.hpp"
#include "mzet/config.hpp"
#include "mzet/errors.hpp"

using namespace mzet;

TEST_CASE("config defaults") {
  Config c;
  CHECK(c.Get("lr") == "0.0001");
  CHECK(c.GetDouble("decay") == 0.9);
  CHECK(c.GetInt("window") == 10);
  CHECK(c.GetInt("word_dim") == 300);
  CHECK(c.GetInt("hidden") == 200);
  CHECK(c.GetInt("epochs") == 30);
  CHECK(c.GetInt("batch_size") == 64);
  CHECK(c.GetU64("seed") == 1);
  CHECK(c.GetBool("separate_context_lstm") == false);
  CHECK(c.Empty("corpus"));
  CHECK_THROWS_AS(c.Get("nope"), ConfigError);
  CHECK_THROWS_AS(c.Set("nope", "1"), ConfigError);
}

TEST_CASE("config precedence: later file over earlier, explicit set last") {
  testutil::TempDir dir;
  testutil::WriteFile(dir.path() / "a.cfg", "# base\nlr=0.01\nepochs = 5\nwindow=4\n");
  testutil::WriteFile(dir.path() / "b.cfg", "epochs=7\n\n");
  Config c;
  c.MergeFile(dir.path() / "a.cfg");
  c.MergeFile(dir.path() / "b.cfg");
  c.Set("window", "6");
  CHECK(c.Get("lr") == "0.01");
  CHECK(c.GetInt("epochs") == 7);
  CHECK(c.GetInt("window") == 6);
}

TEST_CASE("config errors") {
  Config c;
  CHECK_THROWS_AS(c.MergeText("bogus=1\n"), ConfigError);
  CHECK_THROWS_AS(c.MergeText("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(c.MergeFile("/nonexistent/x.cfg"), ConfigError);
  c.Set("epochs", "many");
  CHECK_THROWS_AS(c.GetInt("epochs"), ConfigError);
  c.Set("separate_context_lstm", "maybe");
  CHECK_THROWS_AS(c.GetBool("separate_context_lstm"), ConfigError);
}

TEST_CASE("config serialization round trip and manifest keys are skipped") {
  Config c;
  c.Set("lr", "0.5");
  c.Set("ablate", "no_memory");
  Config d;
  d.MergeText(c.Serialize() + "command=train\nartifact_version=x\ndigest.corpus=abc\nmodel.d_seen=3\ntimestamp=now\n");
  CHECK(d.Serialize() == c.Serialize());
}

TEST_CASE("checkpoint round trip") {
  testutil::TempDir dir;
  auto t = fixture::MakeTiny(1);
  WriteCheckpoint(dir.path() / "m.ckpt", "hello=world\n", t.model.params);
  auto ck = ReadCheckpoint(dir.path() / "m.ckpt");
  CHECK(ck.manifest == "hello=world\n");
  auto other = fixture::MakeTiny(2);
  AssignTensors(ck, &other.model.params);
  auto a = t.model.params.Tensors();
  auto b = other.model.params.Tensors();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    // stored as float32
    CHECK((*a[i].value - *b[i].value).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, a[i].value->cwiseAbs().maxCoeff()));
    CHECK(*b[i].value == a[i].value->cast<float>().cast<double>());
  }
}

TEST_CASE("checkpoint errors") {
  testutil::TempDir dir;
  auto t = fixture::MakeTiny(1);
  WriteCheckpoint(dir.path() / "m.ckpt", "", t.model.params);
  std::string bytes = testutil::ReadFile(dir.path() / "m.ckpt");

  SUBCASE("foreign magic") {
    std::string b = bytes;
    b[0] = 'X';
    testutil::WriteFile(dir.path() / "x.ckpt", b);
    CHECK_THROWS_AS(ReadCheckpoint(dir.path() / "x.ckpt"), VersionError);
  }
  SUBCASE("future version") {
    std::string b = bytes;
    b[8] = 9;
    testutil::WriteFile(dir.path() / "x.ckpt", b);
    CHECK_THROWS_AS(ReadCheckpoint(dir.path() / "x.ckpt"), VersionError);
  }
  SUBCASE("truncated") {
    testutil::WriteFile(dir.path() / "x.ckpt", bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(ReadCheckpoint(dir.path() / "x.ckpt"), LoadError);
  }
  SUBCASE("incompatible shapes") {
    auto big = fixture::MakeTiny(1, 10);
    CHECK_THROWS_AS(AssignTensors(ReadCheckpoint(dir.path() / "m.ckpt"), &big.model.params), VersionError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(ReadCheckpoint(dir.path() / "none.ckpt"), LoadError); }
}

TEST_CASE("sha256") {
  CHECK(Sha256Hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(Sha256Hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  testutil::TempDir dir;
  testutil::WriteFile(dir.path() / "f", "abc");
  CHECK(Sha256File(dir.path() / "f") == Sha256Hex("abc"));
}

TEST_CASE("train, reload and evaluate through the pipeline") {
  testutil::TempDir dir;
  SyntheticSpec spec;
  spec.examples_per_type = 20;
  auto files = GenerateSynthetic(spec, dir.path() / "data");
  Config c = fixture::SmallTrainingConfig(files);
  c.Set("epochs", "3");
  auto run = TrainCommand(c, dir.path() / "run");
  for (auto* f : {"model.ckpt", "train_log.csv", "manifest.txt"}) CHECK(std::filesystem::exists(dir.path() / "run" / f));
  const auto manifest = testutil::ReadFile(dir.path() / "run" / "manifest.txt");
  CHECK(manifest.find("command=train") != std::string::npos);
  CHECK(manifest.find("digest.corpus=" + Sha256File(files.corpus)) != std::string::npos);
  CHECK(manifest.find("model.contextual_source=file") != std::string::npos);
  CHECK(manifest.find("lr=0.003") != std::string::npos);

  auto loaded = LoadTrainedModel(dir.path() / "run" / "model.ckpt");
  CHECK(loaded.chars.size() == run.chars.size());
  CHECK(loaded.config.Get("hidden") == "16");

  // replaying the manifest reproduces the configuration
  Config replay;
  replay.MergeFile(dir.path() / "run" / "manifest.txt");
  CHECK(replay.Serialize() == c.Serialize());

  EvalRequest req;
  req.checkpoint = dir.path() / "run" / "model.ckpt";
  req.modes = {EvalMode::kLevel1, EvalMode::kLevel2};
  req.tau = 0.0;
  auto results = EvalCommand(req, dir.path() / "eval");
  REQUIRE(results.size() == 2);
  CHECK(results[0].mentions == run.split.test.size());
  for (auto* f : {"results.csv", "manifest.txt", "predictions_level2.tsv", "type_counts_level1.csv"})
    CHECK(std::filesystem::exists(dir.path() / "eval" / f));

  // a different hierarchy is rejected
  auto other = TypeHierarchy::Build({"/A", "/A/B"}, {1});
  CHECK_THROWS_AS(LoadTrainedModel(dir.path() / "run" / "model.ckpt", other), VersionError);

  auto h = LoadHierarchy(files.hierarchy, {1});
  const auto& probe = run.split.test.front();
  std::string unseen;
  for (int id : probe.gold)
    if (!h.is_seen(id)) unseen = h.node(id).path;
  auto ex = Explain(req.checkpoint, "", probe.id, unseen);
  CHECK(ex.similarity.size() == 3);
  CHECK(ex.similarity.sum() == doctest::Approx(1.0));
  CHECK(ex.score == doctest::Approx(1.0 / (1.0 + std::exp(-ex.similarity.dot(ex.association)))));
  CHECK_THROWS_AS(Explain(req.checkpoint, "", "no-such-id", unseen), LookupError);
  CHECK_THROWS_AS(Explain(req.checkpoint, "", probe.id, h.node(0).path), LookupError);
}
