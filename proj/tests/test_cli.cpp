#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "testutil.hpp"

namespace {

std::string binary() {
  const char* env = std::getenv("FACECYCLE_BIN");
  REQUIRE_MESSAGE(env != nullptr, "FACECYCLE_BIN not set");
  return env;
}

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  std::string cmd = binary() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe)) out += buf;
  int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

int count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  int n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

std::string toy_config_json(const TempDir& dx, const TempDir& dy, const std::string& out_dir,
                            int steps) {
  return std::string(R"({
  "image_size": 16,
  "total_steps": )") +
         std::to_string(steps) + R"(,
  "seed": 3,
  "checkpoint_interval": 5,
  "generator": {"base_width": 4, "downsample_layers": 1, "residual_blocks": 1},
  "discriminators_y": ["k3s1p1,k3s1p1"],
  "discriminators_x": ["k3s1p1,k3s1p1"],
  "discriminator_base_width": 4,
  "crop_x": {"left": 0, "top": 0, "width": 0, "height": 0, "output_side": 16},
  "crop_y": {"left": 0, "top": 0, "width": 0, "height": 0, "output_side": 16},
  "data_x": ")" +
         dx.path().string() + R"(",
  "data_y": ")" + dy.path().string() +
         R"(",
  "output_dir": ")" + out_dir +
         R"("
})";
}

}  // namespace

TEST_CASE("rf prints the trace and the receptive field") {
  auto r = run("rf k4s2,k4s2,k4s2,k4s1,k4s1");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("receptive field: 70") != std::string::npos);
  CHECK(r.output.find("layer 5:") != std::string::npos);

  r = run("rf k1s1");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("receptive field: 1") != std::string::npos);
}

TEST_CASE("rf rejects invalid stacks with exit code 2") {
  auto r = run("rf k4s0");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("stride must be >= 1") != std::string::npos);
}

TEST_CASE("probe-rf agrees with the analytic value on a fresh stack") {
  auto r = run("probe-rf --stack k4s2,k4s2,k4s1,k4s1,k3s1 --input-side 128");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("analytic: 42") != std::string::npos);
  CHECK(r.output.find("empirical: 42") != std::string::npos);
}

TEST_CASE("probe-rf rejects too-small inputs with exit code 2") {
  auto r = run("probe-rf --stack k5s2,k7s2,k5s2,k5s1,k5s1 --input-side 16");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("input too small for probe") != std::string::npos);
}

TEST_CASE("probe-rf reports disagreement with exit code 1") {
  auto r = run("probe-rf --stack k4s2,k4s2,k3s1 --input-side 64 --const-init 0");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("disagrees") != std::string::npos);
}

TEST_CASE("probe-rf needs exactly one source") {
  CHECK(run("probe-rf --input-side 64").exit_code == 2);
}

TEST_CASE("train validates before touching any output") {
  auto r = run("train --config /nonexistent/exp.json");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("/nonexistent/exp.json") != std::string::npos);

  TempDir dir("clicfg"), dx("clidx"), dy("clidy");
  write_frames(dx.path(), 2, 16, 61, "noise");
  write_frames(dy.path(), 2, 16, 62, "noise");

  auto bad = dir.path() / "bad.json";
  {
    std::ofstream out(bad);
    out << toy_config_json(dx, dy, (dir.path() / "never").string(), 10);
  }
  auto r2 = run("train --config " + bad.string() + " --set batch_size=0");
  CHECK(r2.exit_code == 2);
  CHECK(r2.output.find("batch_size must be >= 1") != std::string::npos);
  CHECK(!std::filesystem::exists(dir.path() / "never"));

  auto r3 = run("train --config " + bad.string() + " --set no_such_key=1");
  CHECK(r3.exit_code == 2);
  CHECK(r3.output.find("unknown config key") != std::string::npos);
}

TEST_CASE("toy training run writes one loss line per step") {
  TempDir dir("clitoy"), dx("toydx"), dy("toydy");
  write_frames(dx.path(), 2, 16, 71, "noise");
  write_frames(dy.path(), 2, 16, 72, "noise");
  auto out_dir = dir.path() / "run";
  auto cfg = dir.path() / "exp.json";
  {
    std::ofstream out(cfg);
    out << toy_config_json(dx, dy, out_dir.string(), 10);
  }
  auto r = run("train --config " + cfg.string());
  CHECK(r.exit_code == 0);
  CHECK(count_lines(out_dir / "train.log") == 10);
  CHECK(std::filesystem::exists(out_dir / "ckpt_step000010.bin"));

  SUBCASE("translate, round trip and inspect consume the checkpoint") {
    auto ckpt = (out_dir / "ckpt_step000010.bin").string();
    TempDir tr_a("cli_tr_a"), tr_b("cli_tr_b");
    auto t1 = run("translate --checkpoint " + ckpt + " --direction XtoY --input " +
                  dx.path().string() + " --output " + tr_a.path().string() + " --round-trip " +
                  (tr_a.path() / "grid.png").string());
    CHECK(t1.exit_code == 0);
    CHECK(t1.output.find("translated 2 frames") != std::string::npos);
    CHECK(t1.output.find("round trip L1:") != std::string::npos);
    CHECK(std::filesystem::exists(tr_a.path() / "frame_000001.png"));
    CHECK(std::filesystem::exists(tr_a.path() / "frames.txt"));
    CHECK(std::filesystem::exists(tr_a.path() / "grid.png"));

    auto t2 = run("translate --checkpoint " + ckpt + " --direction sideways --input " +
                  dx.path().string() + " --output " + tr_b.path().string());
    CHECK(t2.exit_code == 2);

    auto ins = run("inspect --checkpoint " + ckpt);
    CHECK(ins.exit_code == 0);
    CHECK(ins.output.find("step: 10") != std::string::npos);
    CHECK(ins.output.find("DY1 stack:") != std::string::npos);
  }
}

TEST_CASE("unknown flags are rejected") {
  CHECK(run("rf k1s1 --frobnicate").exit_code == 2);
  CHECK(run("frobnicate").exit_code == 2);
}

TEST_CASE("help output enumerates the documented flags") {
  auto r = run("translate --help");
  CHECK(r.exit_code == 0);
  for (const char* flag : {"--checkpoint", "--direction", "--input", "--output", "--crop"})
    CHECK(r.output.find(flag) != std::string::npos);

  auto t = run("train --help");
  CHECK(t.exit_code == 0);
  for (const char* flag : {"--config", "--set", "--resume"})
    CHECK(t.output.find(flag) != std::string::npos);
}
