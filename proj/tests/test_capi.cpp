// Exercises the shared library through its C header only, plus the CLI
// executable built on top of it.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "jdsr/jdsr.h"

namespace fs = std::filesystem;

namespace {

struct Config {
  jdsr_config* ptr = nullptr;
  ~Config() { jdsr_config_free(ptr); }
};

std::string text_of(const jdsr_config* c) {
  size_t needed = 0;
  REQUIRE(jdsr_config_text(c, nullptr, 0, &needed) == JDSR_OK);
  std::vector<char> buf(needed);
  REQUIRE(jdsr_config_text(c, buf.data(), buf.size(), &needed) == JDSR_OK);
  return std::string(buf.data());
}

const char* kSmallScene =
    "scene_kind = two_planes\nwidth = 32\nheight = 24\nfx = 30\nfy = 30\ncx = 15.5\ncy = 11.5\n"
    "frames = 3\ntwist_1 = -0.04 0 0 0 0 0\ntwist_2 = -0.08 0.01 0 0 0 0\n"
    "foreground_rect = -0.2 0.2 -0.15 0.15\nsamples = 4\nrender_samples = 4\nmax_iter = 1\n"
    "irls_inner = 1\ncg_iters = 30\n";

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(JDSR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(jdsr_version()).size() > 0);
  CHECK(std::string(jdsr_status_name(JDSR_OK)) == "ok");
  CHECK(std::string(jdsr_status_name(JDSR_ERR_PARSE)) == "parse error");
}

TEST_CASE("config handles") {
  Config c;
  REQUIRE(jdsr_config_default(&c.ptr) == JDSR_OK);
  CHECK(jdsr_config_set(c.ptr, "lambda_d", "0.25") == JDSR_OK);
  CHECK(text_of(c.ptr).find("lambda_d = 0.25") != std::string::npos);
  CHECK(jdsr_config_set(c.ptr, "bogus", "1") == JDSR_ERR_PARSE);
  CHECK(std::string(jdsr_last_error()).find("bogus") != std::string::npos);

  size_t needed = 0;
  char tiny[4];
  CHECK(jdsr_config_text(c.ptr, tiny, sizeof(tiny), &needed) == JDSR_ERR_INVALID_ARGUMENT);
  CHECK(needed > sizeof(tiny));

  Config parsed;
  CHECK(jdsr_config_parse(text_of(c.ptr).c_str(), &parsed.ptr) == JDSR_OK);
  CHECK(text_of(parsed.ptr) == text_of(c.ptr));

  Config bad;
  CHECK(jdsr_config_parse("samples = x\n", &bad.ptr) == JDSR_ERR_PARSE);
  CHECK(bad.ptr == nullptr);
  CHECK(jdsr_config_load("/nonexistent/c.txt", &bad.ptr) == JDSR_ERR_IO);
  CHECK(jdsr_config_default(nullptr) == JDSR_ERR_INVALID_ARGUMENT);
  CHECK(jdsr_config_set(nullptr, "a", "b") == JDSR_ERR_INVALID_ARGUMENT);
  jdsr_config_free(nullptr);
}

TEST_CASE("synth, run and eval through the C interface") {
  Config c;
  REQUIRE(jdsr_config_parse(kSmallScene, &c.ptr) == JDSR_OK);
  const fs::path bundle = fresh_dir("jdsr_capi_bundle");
  REQUIRE(jdsr_synth(c.ptr, bundle.c_str()) == JDSR_OK);
  CHECK(fs::exists(bundle / "B_2.pfm"));

  const fs::path out = fresh_dir("jdsr_capi_run");
  jdsr_run_summary summary{};
  const jdsr_status s = jdsr_run(c.ptr, bundle.c_str(), out.c_str(), &summary);
  CHECK((s == JDSR_OK || s == JDSR_ERR_NUMERICAL));
  CHECK(summary.frames == 3);
  CHECK(summary.iterations == 1);
  CHECK(summary.final_energy <= summary.initial_energy);

  const std::string est = out.string();
  const char* dirs[] = {est.c_str()};
  jdsr_eval_summary ev{};
  CHECK(jdsr_eval(dirs, 1, bundle.c_str(), (out / "report.txt").c_str(), &ev) == JDSR_OK);
  CHECK(ev.mean_image_psnr > 10.0);
  CHECK(fs::exists(out / "report.csv"));
  CHECK(jdsr_eval(dirs, 0, bundle.c_str(), "r.txt", nullptr) == JDSR_ERR_INVALID_ARGUMENT);

  Config one;
  CHECK(jdsr_config_parse("frames = 1\n", &one.ptr) == JDSR_ERR_INVALID_ARGUMENT);
  CHECK(one.ptr == nullptr);
  CHECK(jdsr_config_set(c.ptr, "frames", "1") == JDSR_ERR_INVALID_ARGUMENT);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = fresh_dir("jdsr_cli_codes");
  {
    std::ofstream cfg(dir / "one.txt");
    cfg << "frames = 1\n";
    std::ofstream small(dir / "small.txt");
    small << kSmallScene << "max_iter = 0\n";
  }
  CHECK(run_cli("synth --config " + (dir / "one.txt").string() + " --out " + (dir / "x").string()) == 2);
  CHECK(run_cli("synth --config " + (dir / "small.txt").string() + " --out " + (dir / "b").string()) == 0);
  CHECK(run_cli("synth --config " + (dir / "small.txt").string() + " --out " + (dir / "b2").string()) == 0);
  for (const char* name : {"B_0.pfm", "B_1.pfm", "gt_D_2.pfm", "seed_poses.txt"}) {
    std::ifstream a(dir / "b" / name, std::ios::binary), b(dir / "b2" / name, std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
  CHECK(run_cli("run --in " + (dir / "b").string() + " --out " + (dir / "r").string()) == 0);
  CHECK(fs::exists(dir / "r" / "iter_0" / "D_0.pfm"));
  CHECK_FALSE(fs::exists(dir / "r" / "iter_1"));
  CHECK(run_cli("eval --in " + (dir / "r").string() + " --gt " + (dir / "b").string() + " --out " +
                (dir / "report.txt").string()) == 0);
  CHECK(fs::exists(dir / "report.csv"));

  fs::remove(dir / "r" / "I_1.pfm");
  CHECK(run_cli("eval --in " + (dir / "r").string() + " --gt " + (dir / "b").string() + " --out " +
                (dir / "report2.txt").string()) == 2);
  {
    std::ofstream corrupt(dir / "b" / "B_1.pfm", std::ios::trunc);
    corrupt << "PF\n";
  }
  CHECK(run_cli("run --in " + (dir / "b").string() + " --out " + (dir / "r3").string()) == 2);
  CHECK(run_cli("frobnicate") != 0);
}
