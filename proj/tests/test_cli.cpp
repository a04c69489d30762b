#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ipi/ipi.hpp"

using namespace ipi;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "ipi_test_cli";

int run(const std::string& args, std::string* err = nullptr) {
  const fs::path log = kRoot / "stderr.txt";
  const std::string cmd = std::string(IPI_CLI) + " " + args + " > /dev/null 2> " + log.string();
  const int status = std::system(cmd.c_str());
  if (err) {
    std::ifstream f(log);
    *err = {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string capture(const std::string& args) {
  const fs::path out = kRoot / "stdout.txt";
  (void)!std::system((std::string(IPI_CLI) + " " + args + " > " + out.string() + " 2>&1").c_str());
  std::ifstream f(out);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string p(const fs::path& x) { return x.string(); }

const std::string kSmall = " --image-n 128 --object-n 64 ";

class Cli : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
    ASSERT_EQ(run("dataset --count 12 --seed 1" + kSmall + "--out " + p(kRoot / "d")), 0);
  }
  static void TearDownTestSuite() { fs::remove_all(kRoot); }
};

}  // namespace

TEST_F(Cli, DatasetWritesPairsAndManifest) {
  const DatasetManifest m = load_manifest(kRoot / "d");
  EXPECT_EQ(m.records.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_TRUE(fs::exists(speckle_path(kRoot / "d", i)));
}

TEST_F(Cli, DatasetRerunIsIdentical) {
  ASSERT_EQ(run("dataset --count 12 --seed 1" + kSmall + "--workers 3 --out " + p(kRoot / "d2")), 0);
  EXPECT_EQ(slurp(kRoot / "d" / "manifest.jsonl"), slurp(kRoot / "d2" / "manifest.jsonl"));
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(slurp(speckle_path(kRoot / "d", i)), slurp(speckle_path(kRoot / "d2", i)));
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("dataset --count 0 --out " + p(kRoot / "x")), 2);
  EXPECT_EQ(run("dataset --no-such-flag 1 --out " + p(kRoot / "x")), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("dataset --size-min 900 --size-max 400 --out " + p(kRoot / "x")), 2);
}

TEST_F(Cli, HelpDocumentsFlags) {
  for (const std::string sub : {"dataset", "reconstruct-er", "tomo", "eval", "speckle", "plot-loss"})
    EXPECT_EQ(run(sub + " --help"), 0) << sub;
  const std::string h = capture("reconstruct-er --help");
  for (const std::string flag : {"--iterations", "--support-threshold", "--init-seed", "--binarize", "--restarts",
                                 "--support-shape", "--stall-tolerance", "--stall-window", "--config"})
    EXPECT_NE(h.find(flag), std::string::npos) << flag;
  EXPECT_NE(capture("dataset --help").find("--workers"), std::string::npos);
}

TEST_F(Cli, ReconstructStickSample) {
  const fs::path out = kRoot / "er";
  ASSERT_EQ(run("reconstruct-er --dataset " + p(kRoot / "d") + " --id 0 --iterations 200 --restarts 1 --out " + p(out)), 0);
  EXPECT_EQ(png::decode_mask(png::read_file(out / "000000.png")).rows(), 128u);
  std::ifstream f(out / "000000_trace.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "iteration,E_F");
  double prev = 1e300;
  int rows = 0;
  while (std::getline(f, line)) {
    const double e = std::stod(line.substr(line.find(',') + 1));
    EXPECT_LE(e, prev + 1e-12);
    prev = e;
    ++rows;
  }
  EXPECT_GT(rows, 1);
}

TEST_F(Cli, ReconstructOneIteration) {
  const fs::path out = kRoot / "er1";
  ASSERT_EQ(run("reconstruct-er --input " + p(speckle_path(kRoot / "d", 1)) + " --iterations 1 --out " + p(out)), 0);
  std::ifstream f(out / "000001_trace.csv");
  int lines = 0;
  for (std::string l; std::getline(f, l);) ++lines;
  EXPECT_EQ(lines, 2);
}

TEST_F(Cli, ReconstructMissingFile) {
  EXPECT_EQ(run("reconstruct-er --input " + p(kRoot / "nope.png") + " --out " + p(kRoot / "x")), 2);
  EXPECT_EQ(run("reconstruct-er --out " + p(kRoot / "x")), 2);
}

TEST_F(Cli, ConfigFileWithOverride) {
  {
    std::ofstream c(kRoot / "er.cfg");
    c << "# ER settings\niterations = 3\nrestarts=1\nsupport_shape = box\n";
  }
  const std::string base = "reconstruct-er --config " + p(kRoot / "er.cfg") + " --input " +
                           p(speckle_path(kRoot / "d", 2)) + " --out " + p(kRoot / "cfg");
  auto rows = [&] {
    std::ifstream f(kRoot / "cfg" / "000002_trace.csv");
    int n = -1;
    for (std::string l; std::getline(f, l);) ++n;
    return n;
  };
  ASSERT_EQ(run(base), 0);
  EXPECT_EQ(rows(), 3);
  ASSERT_EQ(run(base + " --iterations 5"), 0);
  EXPECT_EQ(rows(), 5);
  {
    std::ofstream c(kRoot / "bad.cfg");
    c << "no_such_key = 1\n";
  }
  EXPECT_EQ(run("reconstruct-er --config " + p(kRoot / "bad.cfg") + " --out x"), 2);
}

TEST_F(Cli, TomoFixedPoint) {
  const GridSpec g{64, 25.0};
  ShapeSpec t;
  t.family = Family::T;
  t.feret_um = 1000;
  t.params = {0.15, 0.8, 1.0};
  const VoxelGrid v = build_volume(t, g, Pose{Quaternion::axis_angle({0, 1, 0}, 0.785398)});
  const fs::path dir = kRoot / "tomo";
  fs::create_directories(dir);
  const char* names[3] = {"xy", "yz", "zx"};
  const Axis axes[3] = {Axis::XY, Axis::YZ, Axis::ZX};
  for (int k = 0; k < 3; ++k) png::write_file(dir / (std::string(names[k]) + ".png"), png::encode_mask(project(v, axes[k])));
  const std::string args = "tomo --xy " + p(dir / "xy.png") + " --yz " + p(dir / "yz.png") + " --zx " + p(dir / "zx.png");
  ASSERT_EQ(run(args + " --out " + p(dir / "out")), 0);
  for (int k = 0; k < 3; ++k)
    EXPECT_EQ(png::decode_mask(png::read_file(dir / "out" / ("reproject_" + std::string(names[k]) + ".png"))),
              project(v, axes[k]));
  EXPECT_TRUE(fs::exists(dir / "out" / "hull.rle"));
  EXPECT_TRUE(fs::exists(dir / "out" / "slices" / "z0063.png"));
  ASSERT_EQ(run(args + " --align --out " + p(dir / "aligned")), 0);
  EXPECT_NE(slurp(dir / "aligned" / "hull.json").find("\"score\": 3.0"), std::string::npos);
  EXPECT_EQ(run(args + " --n 32 --out " + p(dir / "x")), 2);
}

TEST_F(Cli, TomoMismatchAndEmpty) {
  const fs::path dir = kRoot / "tomo2";
  fs::create_directories(dir);
  png::write_file(dir / "a.png", png::encode_mask(Mask(16, 16, 1)));
  png::write_file(dir / "b.png", png::encode_mask(Mask(32, 32, 1)));
  png::write_file(dir / "e.png", png::encode_mask(Mask(16)));
  const std::string a = p(dir / "a.png");
  EXPECT_EQ(run("tomo --xy " + a + " --yz " + p(dir / "b.png") + " --zx " + a + " --out " + p(dir / "o")), 2);
  std::string err;
  EXPECT_EQ(run("tomo --xy " + a + " --yz " + p(dir / "e.png") + " --zx " + a + " --out " + p(dir / "o"), &err), 0);
  EXPECT_NE(err.find("warning"), std::string::npos);
  EXPECT_EQ(slurp(dir / "o" / "hull.rle"), "");
}

TEST_F(Cli, EvalIdenticalAndMixedMethods) {
  const fs::path preds = kRoot / "preds";
  fs::create_directories(preds / "ER");
  fs::create_directories(preds / "CNN");
  for (std::size_t i : {0, 3, 7}) {
    fs::copy_file(mask_path(kRoot / "d", i), preds / "ER" / (id_name(i) + ".png"));
    fs::copy_file(mask_path(kRoot / "d", i), preds / "CNN" / (id_name(i) + ".png"));
  }
  ASSERT_EQ(run("eval --dataset " + p(kRoot / "d") + " --predictions " + p(preds) + " --out " + p(kRoot / "ev")), 0);
  std::ifstream f(kRoot / "ev" / "eval.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "id,family,method,iou,aligned_iou,mse,transform");
  int rows = 0;
  while (std::getline(f, line)) {
    ++rows;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    EXPECT_EQ(cells[4], "1") << line;
    EXPECT_EQ(cells[5], "0") << line;
  }
  EXPECT_EQ(rows, 6);
  EXPECT_TRUE(fs::exists(kRoot / "ev" / "summary.csv"));
  const png::GrayImage diff = png::decode(png::read_file(kRoot / "ev" / "diff" / "ER" / "000003.png"));
  for (auto v : diff.pixels) ASSERT_EQ(v, 128);
}

TEST_F(Cli, EvalEmptyPredictions) {
  fs::create_directories(kRoot / "empty");
  EXPECT_EQ(run("eval --dataset " + p(kRoot / "d") + " --predictions " + p(kRoot / "empty") + " --out " + p(kRoot / "ev2")), 2);
}

TEST_F(Cli, SpeckleAndPlotLoss) {
  ASSERT_EQ(run("speckle --family cross --size 900 --seed 3 --out " + p(kRoot / "s.png") + " --mask-out " +
                p(kRoot / "m.png") + " --ac-out " + p(kRoot / "ac.png")),
            0);
  EXPECT_EQ(png::decode(png::read_file(kRoot / "s.png")).bit_depth, 16);
  {
    std::ofstream f(kRoot / "loss.csv");
    f << "epoch,train_mse,test_mse,lr\n";
    for (int e = 1; e <= 20; ++e) f << e << ',' << 1.0 / e << ',' << 1.5 / e << ",0.001\n";
  }
  ASSERT_EQ(run("plot-loss --log " + p(kRoot / "loss.csv") + " --out " + p(kRoot / "plot" / "loss")), 0);
  EXPECT_NE(slurp(kRoot / "plot" / "loss.svg").find("<svg"), std::string::npos);
  std::ifstream f(kRoot / "plot" / "loss.csv");
  std::string header, first;
  std::getline(f, header), std::getline(f, first);
  EXPECT_EQ(header, "epoch,train_mse,test_mse,train_smooth,test_smooth");
  // epoch 1 boxcar covers epochs 1..4
  EXPECT_NEAR(std::stod(first.substr(first.rfind(',', first.rfind(',') - 1) + 1)), (1 + 0.5 + 1.0 / 3 + 0.25) / 4, 1e-6);
}
