#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "evfuse/commands.hpp"
#include "evfuse/io.hpp"

using namespace evfuse;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("evfuse_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

// Value following `key ` on its own line of a command report.
long report_value(const std::string& report, const std::string& key) {
  std::istringstream is(report);
  std::string k;
  std::string v;
  while (is >> k >> v) {
    if (k == key) return std::stol(v);
    is.ignore(1 << 20, '\n');
  }
  FAIL("missing ", key);
  return -1;
}

const std::vector<std::string> kSmallScene{"--scene.width", "64", "--scene.height", "48", "--scene.d_max", "24",
                                           "--scene.plane_disparities", "5,12", "--scene.duration_us", "20000"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(cli({}).code == 2);
  CHECK(cli({"nonsense"}).code == 2);
  CHECK(cli({"synth", "--out", dir / "s", "--no.such.key", "1"}).code == 2);
  CHECK(cli({"synth", "--out", dir / "s", "--scene.textureless_fraction", "2"}).code != 0);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"stack", dir / "missing.evt", "--out", dir / "x.tensor"}).code != 0);

  std::ofstream(dir / "bad.evt", std::ios::binary) << "NOTANEVENTFILE_________";
  const auto bad = cli({"stack", dir / "bad.evt", "--out", dir / "x.tensor"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("offset") != std::string::npos);

  std::ofstream(dir / "unknown.cfg") << "stack.bins = 3\nnot.a.key = 1\n";
  const auto cfg = cli({"synth", "--out", dir / "s", "--config", dir / "unknown.cfg"});
  CHECK(cfg.code == 2);
  CHECK(cfg.err.find("line 2") != std::string::npos);
}

TEST_CASE("synth, fuse, match and eval chain") {
  TempDir dir;
  const std::string s = dir / "scene";
  REQUIRE(cli(concat({"synth", "--out", s}, kSmallScene)).code == 0);
  const std::string l = s + "/left.evt";
  const std::string r = s + "/right.evt";
  const std::string depth = s + "/depth.csv";

  SUBCASE("fuse is deterministic for a fixed seed") {
    for (const char* mode : {"bth-repeated", "bth-single", "vsh", "guided", "none"}) {
      CAPTURE(mode);
      const auto a = cli({"fuse", l, r, depth, "--fusion.mode", mode, "--seed", "5", "--out", dir / "a"});
      REQUIRE(a.code == 0);
      const auto b = cli({"fuse", l, r, depth, "--fusion.mode", mode, "--seed", "5", "--out", dir / "b"});
      REQUIRE(b.code == 0);
      CHECK(a.out == b.out);
      CHECK(slurp(dir / "a.left.tensor") == slurp(dir / "b.left.tensor"));
      CHECK(slurp(dir / "a.right.tensor") == slurp(dir / "b.right.tensor"));
      CHECK(slurp(dir / "a.hints.tensor") == slurp(dir / "b.hints.tensor"));
    }
  }
  SUBCASE("BTH injects at most K events per patch cell and measurement") {
    const auto a = cli({"fuse", l, r, depth, "--fusion.mode", "bth-repeated", "--bth.k", "3", "--bth.patch", "3",
                        "--output.kind", "histories", "--out", dir / "h"});
    REQUIRE(a.code == 0);
    const long measurements = report_value(a.out, "measurements");
    const long used = report_value(a.out, "used");
    const long injected = report_value(a.out, "injected");
    CHECK(used > 0);
    CHECK(used <= measurements);
    CHECK(injected <= used * 9 * 3);
    CHECK(injected > 0);
    const auto base = load_events(l);
    const auto fused = load_events(dir / "h.left.evt");
    CHECK(fused.events.size() >= base.events.size());
  }
  SUBCASE("no depth means nothing is injected") {
    std::ofstream(dir / "empty.csv") << "x,y,z_m,t_us\n";
    const auto a = cli({"fuse", l, r, dir / "empty.csv", "--fusion.mode", "bth-repeated", "--out", dir / "e"});
    REQUIRE(a.code == 0);
    CHECK(report_value(a.out, "injected") == 0);
    CHECK(cli({"fuse", l, r, dir / "empty.csv", "--fusion.mode", "vsh", "--output.kind", "histories", "--out",
               dir / "e"})
              .code == 2);
  }
  SUBCASE("match and eval") {
    REQUIRE(cli({"fuse", l, r, depth, "--fusion.mode", "guided", "--out", dir / "g"}).code == 0);
    REQUIRE(cli({"match", dir / "g.left.tensor", dir / "g.right.tensor", "--hints", dir / "g.hints.tensor",
                 "--fusion.mode", "guided", "--match.disparities", "24", "--out", dir / "pred.tensor"})
                .code == 0);
    CHECK(cli({"match", dir / "g.left.tensor", dir / "g.right.tensor", "--fusion.mode", "guided", "--out",
               dir / "p2.tensor"})
              .code == 2);
    const auto e = cli({"eval", dir / "pred.tensor", s + "/gt.tensor", "--out", dir / "err.tensor"});
    REQUIRE(e.code == 0);
    CHECK(report_value(e.out, "pixels") > 0);
    CHECK(fs::exists(dir / "err.tensor"));
    const auto m = cli({"eval", dir / "pred.tensor", s + "/gt.tensor", "--metrics.mask", s + "/textureless.tensor"});
    CHECK(m.code == 0);
  }
  SUBCASE("stack") {
    const auto a = cli({"stack", l, "--stack.representation", "mdes", "--out", dir / "m.tensor"});
    REQUIRE(a.code == 0);
    CHECK(load_tensor(dir / "m.tensor").tag == "mdes");
    CHECK(load_tensor(dir / "m.tensor").channels == 3);
  }
}

TEST_CASE("bench") {
  TempDir dir;
  const auto one = cli(concat({"bench", "--suite.scenes", "1", "--suite.representations", "histogram",
                               "--suite.fusions", "none", "--out", dir / "b.csv"},
                              kSmallScene));
  REQUIRE(one.code == 0);
  const std::string csv = slurp(dir / "b.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header and one row

  const auto offsets = cli(concat({"bench", "--suite.scenes", "1", "--suite.representations", "histogram",
                                   "--suite.fusions", "bth-single", "--suite.offsets_ms", "preset"},
                                  kSmallScene));
  REQUIRE(offsets.code == 0);
  for (const char* col : {"1PE@0ms", "1PE@3ms", "1PE@13ms", "1PE@32ms", "1PE@61ms", "1PE@100ms"}) CHECK(offsets.out.find(col) != std::string::npos);
}
