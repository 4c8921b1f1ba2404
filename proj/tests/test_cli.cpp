#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
namespace st = stgrasp::testing;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = stgrasp::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  return files;
}

std::vector<std::string> gen_grasp(const fs::path& dir, const std::string& seed = "3") {
  return {"gen-synthetic", "--kind", "grasp", "--count", "12", "--seed", seed, "--out-dir", dir.string(),
          "--tactile-height", "8", "--tactile-width", "8", "--visual-height", "8", "--visual-width", "8"};
}

std::vector<std::string> small_model_flags() {
  return {"--embed-dim", "8", "--layers", "1", "--heads", "2", "--tactile-patch-h", "4", "--tactile-patch-w", "4",
          "--visual-patch-h", "4", "--visual-patch-w", "4"};
}

std::vector<std::string> train_args(const fs::path& data, const fs::path& out) {
  std::vector<std::string> a{"train", "--dataset", data.string(), "--out-dir", out.string(), "--task", "outcome",
                             "--epochs", "2", "--splits", "1", "--seed", "5", "--embedding-dim", "4", "--head-hidden", "8"};
  const auto m = small_model_flags();
  a.insert(a.end(), m.begin(), m.end());
  return a;
}

}  // namespace

TEST(Cli, GenSyntheticIsDeterministic) {
  st::TempDir dir("cli_gen");
  ASSERT_EQ(run(gen_grasp(dir / "a")).code, 0);
  ASSERT_EQ(run(gen_grasp(dir / "b")).code, 0);
  ASSERT_EQ(run(gen_grasp(dir / "c", "4")).code, 0);
  const auto a = tree(dir / "a"), b = tree(dir / "b"), c = tree(dir / "c");
  EXPECT_GT(a.size(), 12u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Cli, TrainEvalInferAndVisualize) {
  st::TempDir dir("cli_pipeline");
  ASSERT_EQ(run(gen_grasp(dir / "data")).code, 0);

  const Result t1 = run(train_args(dir / "data", dir / "r1"));
  ASSERT_EQ(t1.code, 0) << t1.err;
  EXPECT_NE(t1.out.find("| outcome |"), std::string::npos);
  ASSERT_EQ(run(train_args(dir / "data", dir / "r2")).code, 0);
  // same seed and flags give bitwise identical checkpoints and metrics
  EXPECT_EQ(slurp(dir / "r1" / "model.ckpt"), slurp(dir / "r2" / "model.ckpt"));
  EXPECT_EQ(slurp(dir / "r1" / "metrics.json"), slurp(dir / "r2" / "metrics.json"));
  EXPECT_TRUE(fs::exists(dir / "r1" / "train_log.jsonl"));

  const std::string ckpt = (dir / "r1" / "model.ckpt").string();
  const Result ev = run({"eval", "--dataset", (dir / "data").string(), "--checkpoint", ckpt, "--task", "outcome"});
  EXPECT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("| 12 |"), std::string::npos);

  const Result inf = run({"infer-force", "--dataset", (dir / "data").string(), "--checkpoint", ckpt, "--sample", "g00000",
                          "--out-dir", (dir / "inf").string()});
  ASSERT_EQ(inf.code, 0) << inf.err;
  const json j = json::parse(inf.out);
  EXPECT_EQ(j.at("candidates").size(), 13u);
  EXPECT_EQ(j.at("sample"), "g00000");
  EXPECT_EQ(j.at("planted_safe_interval").size(), 2u);
  EXPECT_EQ(json::parse(slurp(dir / "inf" / "infer_force.json")), j);

  const Result all = run({"infer-force", "--dataset", (dir / "data").string(), "--checkpoint", ckpt, "--cand-step", "0.5"});
  ASSERT_EQ(all.code, 0) << all.err;
  const json r = json::parse(all.out).at("results");
  EXPECT_EQ(r.size(), 12u);
  EXPECT_EQ(r.at(0).at("candidates").size(), 25u);

  std::vector<std::string> viz{"attention-viz", "--dataset", (dir / "data").string(), "--checkpoint", ckpt,
                               "--sample", "g00001", "--stream", "pinch_tactile", "--patches", "0,3",
                               "--out-dir", (dir / "viz").string()};
  const Result v = run(viz);
  ASSERT_EQ(v.code, 0) << v.err;
  EXPECT_TRUE(fs::exists(dir / "viz" / "profile.json"));
  EXPECT_TRUE(fs::exists(dir / "viz" / "frame_0.png"));
  EXPECT_TRUE(fs::exists(dir / "viz" / "frame_0.csv"));
}

TEST(Cli, HelpDocumentsFlags) {
  const Result r = run({"train", "--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--lr", "--epochs", "--variant", "--splits", "--seed", "--config"})
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"train", "--no-such-flag", "1"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"gen-synthetic", "--count", "-3", "--out-dir", "x"}).code, 2);
  EXPECT_EQ(run({"train", "--variant", "resnet", "--dataset", "x", "--out-dir", "y"}).code, 2);

  st::TempDir dir("cli_cfg");
  std::ofstream(dir / "bad.json") << R"({"train": {"epochs": 3, "learning_rate": 0.1}})";
  const Result r = run({"train", "--config", (dir / "bad.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("learning_rate"), std::string::npos);
  std::ofstream(dir / "broken.json") << "{";
  EXPECT_EQ(run({"train", "--config", (dir / "broken.json").string()}).code, 2);
}

TEST(Cli, ConfigFileAndFlagOverride) {
  st::TempDir dir("cli_cfg_ok");
  std::ofstream(dir / "gen.json") << json{{"kind", "grasp"}, {"seed", 3}, {"out_dir", (dir / "a").string()},
                                          {"synthetic", {{"count", 12}, {"tactile", {{"height", 8}, {"width", 8}}},
                                                         {"visual", {{"height", 8}, {"width", 8}}}}}}
                                         .dump();
  ASSERT_EQ(run({"gen-synthetic", "--config", (dir / "gen.json").string()}).code, 0);
  ASSERT_EQ(run(gen_grasp(dir / "b")).code, 0);
  EXPECT_EQ(tree(dir / "a"), tree(dir / "b"));
  ASSERT_EQ(run({"gen-synthetic", "--config", (dir / "gen.json").string(), "--count", "5", "--out-dir",
                 (dir / "c").string()})
                .code,
            0);
  EXPECT_EQ(json::parse(slurp(dir / "c" / "manifest.json")).at("samples").size(), 5u);
}

TEST(Cli, DataErrorsExitThree) {
  st::TempDir dir("cli_data");
  const Result r = run({"train", "--dataset", (dir / "missing").string(), "--out-dir", (dir / "o").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("data error"), std::string::npos);

  ASSERT_EQ(run(gen_grasp(dir / "data")).code, 0);
  fs::remove_all(dir / "data" / "g00002");
  const Result m = run(train_args(dir / "data", dir / "o2"));
  EXPECT_EQ(m.code, 3);
  EXPECT_NE(m.err.find("g00002"), std::string::npos) << m.err;
}

TEST(Cli, CheckpointKindIsChecked) {
  st::TempDir dir("cli_kind");
  ASSERT_EQ(run(gen_grasp(dir / "data")).code, 0);
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  const Result r = run({"infer-force", "--dataset", (dir / "data").string(), "--checkpoint", (dir / "junk.ckpt").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.code, 1);
}

TEST(Cli, BenchReportsBothVariants) {
  const Result r = run({"bench", "--frames", "2", "--height", "8", "--width", "8", "--patch-h", "4", "--patch-w", "4",
                        "--repeats", "1", "--embed-dim", "8", "--layers", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("| 9 |"), std::string::npos);  // divided: 2 x 4 patches + CLS
  EXPECT_NE(r.out.find("| 8 |"), std::string::npos);
}
