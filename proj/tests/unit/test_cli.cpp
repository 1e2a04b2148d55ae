#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emt/canonicalize.hpp"
#include "emt/cli.hpp"
#include "emt/dsl.hpp"
#include "emt/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace emt;

namespace {

namespace fs = std::filesystem;

std::string corpus(const char* f) { return std::string(EMT_CORPUS_DIR) + "/" + f; }
std::string fixture(const char* f) { return std::string(EMT_FIXTURE_DIR) + "/" + f; }

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  auto d = fs::temp_directory_path() / "emt_cli_test";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("canon of a relabeled difference is zero") {
  auto f = scratch() / "relabel.lag";
  std::ofstream(f) << "field A {rank:1}\n"
                      "lagrangian = d[a] A[b] d[^a] A[^b] - d[c] A[e] d[^c] A[^e]\n";
  auto r = run({"canon", f.string()});
  CHECK(r.code == cli::kOk);
  CHECK(r.out == "0\n");
}

TEST_CASE("maxwell: both derivations match the fixture") {
  auto dir = scratch();
  auto n = (dir / "em_noether.json").string(), h = (dir / "em_hilbert.json").string();
  CHECK(run({"derive", "noether", corpus("em.lag"), "--delta", "bessel_hagen", "--format", "json",
             "-o", n}).code == cli::kOk);
  CHECK(run({"derive", "hilbert", corpus("em.lag"), "--format", "json", "-o", h}).code == cli::kOk);
  CHECK(run({"diff", n, fixture("eq5_em_emt.json")}).code == cli::kOk);
  CHECK(run({"diff", h, fixture("eq5_em_emt.json")}).code == cli::kOk);
  // the canonical translation alone is not gauge invariant
  auto plain = (dir / "em_canonical.json").string();
  CHECK(run({"derive", "noether", corpus("em.lag"), "--format", "json", "-o", plain}).code == cli::kOk);
  CHECK(run({"diff", plain, fixture("eq5_em_emt.json")}).code == cli::kDifferent);
}

TEST_CASE("gauss-bonnet: hilbert differs from the noether fixture") {
  auto dir = scratch();
  auto h = (dir / "gb_hilbert.json").string();
  CHECK(run({"derive", "hilbert", corpus("gauss_bonnet.lag"), "--set", "A=1/4", "--set", "B=-1",
             "--set", "C=1/4", "--format", "json", "-o", h, "--emit-stage", "promoted",
             "--emit-stage", "varied", "--stage-dir", dir.string()})
            .code == cli::kOk);
  CHECK(fs::exists(dir / "gauss_bonnet.promoted.json"));
  CHECK(fs::exists(dir / "gauss_bonnet.varied.json"));
  CHECK_FALSE(fs::exists(dir / "gauss_bonnet.pruned.json"));
  auto d = run({"diff", h, fixture("eq11_gb_emt.json"), "--format", "json"});
  CHECK(d.code == cli::kDifferent);
  auto j = nlohmann::json::parse(d.out);
  CHECK(j["equal"] == false);
  CHECK(!expr_from_json(j["difference"]).is_zero());

  auto o = run({"oracle-compare", h, fixture("eq11_gb_emt.json"), "--trials", "20", "--seed", "3",
                "--degree", "3"});
  CHECK(o.code == cli::kDifferent);
  auto oj = nlohmann::json::parse(o.out);
  CHECK(oj["verdict"] == "unequal");
  CHECK(oj.contains("witness"));
}

TEST_CASE("json fixtures agree with their sources") {
  for (auto [json, src] : {std::pair{"eq5_em_emt.json", "src/eq5_em_emt.lag#T"},
                           {"eq11_gb_emt.json", "src/eq11_gb_emt.lag#T"},
                           {"eq13_gb_lagrangian.json", "src/eq13_gb_lagrangian.lag#L"}}) {
    CAPTURE(json);
    CHECK(run({"diff", fixture(json), fixture(src)}).code == cli::kOk);
  }
  // the typed-out jet form is the curvature Lagrangian
  CHECK(run({"diff", fixture("eq13_gb_lagrangian.json"), corpus("gauss_bonnet.lag")}).code == cli::kOk);
}

TEST_CASE("property checks on the noether fixture") {
  auto r = run({"check", corpus("gauss_bonnet.lag"), "--emt", fixture("eq11_gb_emt.json"),
                "--properties", "symmetric,traceless,gauge_invariant"});
  CHECK(r.code == cli::kOk);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["pass"] == true);
  CHECK(j["reports"].size() == 3);
  auto sym_d = run({"check", corpus("gauss_bonnet.lag"), "--emt", fixture("eq11_gb_emt.json"),
                    "--properties", "traceless", "--dim", "D"});
  CHECK(sym_d.code == cli::kDifferent);
}

TEST_CASE("identical invocations give identical bytes") {
  auto a = run({"derive", "hilbert", corpus("fierz_pauli.lag"), "--format", "json"});
  auto b = run({"derive", "hilbert", corpus("fierz_pauli.lag"), "--format", "json"});
  CHECK(a.code == cli::kOk);
  CHECK(a.out == b.out);
  auto o1 = run({"oracle-compare", fixture("eq5_em_emt.json"), corpus("em.lag"), "--seed", "9"});
  auto o2 = run({"oracle-compare", fixture("eq5_em_emt.json"), corpus("em.lag"), "--seed", "9"});
  CHECK(o1.out == o2.out);
}

TEST_CASE("exit codes for bad input") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"canon", "/nonexistent/file.lag"}).code == cli::kUsage);
  CHECK(run({"canon", corpus("kg.lag"), "--dim", "zero"}).code == cli::kUsage);
  CHECK(run({"canon", corpus("kg.lag"), "--set", "A"}).code == cli::kUsage);
  CHECK(run({"canon", fixture("src/eq5_em_emt.lag")}).code == cli::kUsage);  // defs only
  auto f = scratch() / "broken.lag";
  std::ofstream(f) << "field phi {rank:0}\nlagrangian = d[mu phi\n";
  auto r = run({"canon", f.string()});
  CHECK(r.code == cli::kUsage);
  CHECK(r.err.find("parse error") != std::string::npos);
  auto raw = scratch() / "raw.lag";
  std::ofstream(raw) << "field h {rank:2, symmetry:symmetric}\n"
                        "lagrangian = d[a] d[b] h[c,e] * d[^a] d[^b] h[^c,^e]\n";
  CHECK(run({"derive", "hilbert", raw.string()}).code == cli::kUsage);
  CHECK(run({"derive", "noether", corpus("em.lag"), "--delta", "no_such_rule"}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("symbolic dimension") {
  auto r = run({"canon", "eta[a,^a]", "--dim", "D"});
  CHECK(r.code == cli::kUsage);  // not a file
  auto f = scratch() / "trace.lag";
  std::ofstream(f) << "param c\nlagrangian = c * eta[a,^a]\n";
  CHECK(run({"canon", f.string(), "--dim", "D"}).out == "D * c\n");
  CHECK(run({"canon", f.string()}).out == "4 * c\n");
}
