#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hellinger_lab/cli.hpp"

using namespace hlab;
using Catch::Matchers::ContainsSubstring;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "hlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run_command(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const std::string kSpaceA = std::string(HLAB_DATA_DIR) + "/space_a.json";

std::string temp_file(const std::string& name, const std::string& content) {
  auto p = std::filesystem::temp_directory_path() / ("hlab_test_" + name);
  std::ofstream(p) << content;
  return p.string();
}

std::string read(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("density and Hellinger integrals on SPACE-A", "[cli]") {
  auto d = run({"density", "--space", kSpaceA});
  CHECK(d.code == 0);
  CHECK_THAT(d.out, ContainsSubstring("t=1 cell={a,b} z=6/5 z'=4/5"));
  CHECK_THAT(d.out, ContainsSubstring("t=2 cell={c} z=2 z'=0"));
  auto h = run({"hellinger", "--space", kSpaceA, "--alpha", "0.5"});
  CHECK(h.code == 0);
  CHECK_THAT(h.out, ContainsSubstring("H(0.5)=0.603553390593"));
  CHECK_THAT(h.out, ContainsSubstring("n=1 a_n=0.965925826289"));
}

TEST_CASE("Hellinger processes on SPACE-A", "[cli]") {
  auto p = run({"hprocess", "--space", kSpaceA});
  CHECK(p.code == 0);
  CHECK_THAT(p.out, ContainsSubstring("dh=0.0340741737109"));
  CHECK_THAT(p.out, ContainsSubstring("t=2 cell={a} Y^2=8/9"));
  CHECK_THAT(p.out, ContainsSubstring("dh=0.0144014403465"));
  auto h0 = run({"h0", "--space", kSpaceA});
  CHECK(h0.code == 0);
  CHECK_THAT(h0.out, ContainsSubstring("N0={c}"));
  CHECK_THAT(h0.out, ContainsSubstring("H0(c)=2"));
  CHECK_THAT(h0.out, ContainsSubstring("H0(a)=1"));
  auto m = run({"stopping", "--space", kSpaceA, "--of", "M"});
  CHECK_THAT(m.out, ContainsSubstring("atom=c T_M=1"));
  CHECK_THAT(run({"stopping", "--space", kSpaceA, "--of", "S"}).out, ContainsSubstring("atom=c T_S=2"));
  CHECK(run({"stopping", "--space", kSpaceA, "--of", "q"}).code == 3);
}

TEST_CASE("σ-algebras, Hahn sets and separating time", "[cli]") {
  auto s = run({"sigma", "--space", kSpaceA, "--at", "T2"});
  CHECK(s.code == 0);
  CHECK_THAT(s.out, ContainsSubstring("cell={a}\ncell={b}\ncell={c,d}"));
  auto sm = run({"sigma", "--space", kSpaceA, "--at", "T2", "--minus"});
  CHECK_THAT(sm.out, ContainsSubstring("cell={a,b}\ncell={c,d}"));
  auto h = run({"hahn", "--space", kSpaceA, "-T", "T1"});
  CHECK_THAT(h.out, ContainsSubstring("E={a,b}\nE^c={c,d}"));
  auto st = run({"septime", "--space", kSpaceA});
  CHECK_THAT(st.out, ContainsSubstring("B={a,b}"));
  CHECK_THAT(st.out, ContainsSubstring("atom=a S~=delta"));
  CHECK_THAT(st.out, ContainsSubstring("atom=d S~=2"));
  CHECK(run({"hahn", "--space", kSpaceA, "-T", "nope"}).code == 3);
  CHECK(run({"sigma", "--space", kSpaceA, "--at", "inf"}).code == 0);
}

TEST_CASE("norm and conditional expectation at T", "[cli]") {
  auto n = run({"normac", "--space", kSpaceA, "-T", "T2"});
  CHECK(n.code == 0);
  CHECK_THAT(n.out, ContainsSubstring("oracle=1\n"));
  CHECK_THAT(n.out, ContainsSubstring("formula=0.99999987"));
  CHECK(run({"normac", "--space", kSpaceA, "--mode", "predictable", "-T", "T2"}).code == 3);
  CHECK(run({"normac", "--space", kSpaceA, "--mode", "c3"}).code == 0);
  auto c = run({"condexp", "--space", kSpaceA, "-T", "T2"});
  CHECK(c.code == 0);
  CHECK_THAT(c.out, ContainsSubstring("formula_equals_oracle=true"));
  CHECK_THAT(c.out, ContainsSubstring("atom=c T=1 E[z_T|F_T-]=2/3 oracle=2/3 z_T-=1 K_T=2/3"));
}

TEST_CASE("JSON output", "[cli]") {
  auto r = run({"--format", "json", "h0", "--space", kSpaceA});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["command"] == "h0");
  CHECK(j["N0"] == "{c}");
  CHECK(j["rows"].size() == 7);
}

TEST_CASE("Kakutani factor files", "[cli]") {
  auto c = run({"kakutani", "--factors", std::string(HLAB_DATA_DIR) + "/factors_constant.json"});
  CHECK(c.code == 0);
  CHECK_THAT(c.out, ContainsSubstring("verdict=singular"));
  auto s = run({"kakutani", "--factors", std::string(HLAB_DATA_DIR) + "/factors_summable.json"});
  CHECK_THAT(s.out, ContainsSubstring("verdict=absolutely_continuous"));
  auto i = run({"kakutani", "--factors", std::string(HLAB_DATA_DIR) + "/factors_identical.json"});
  CHECK_THAT(i.out, ContainsSubstring("verdict=absolutely_continuous"));
  auto bad = temp_file("bad_factor.json", R"({"factors": [{"atoms": ["H","T"], "mu": ["1","0"], "nu": ["0","1"]}]})");
  CHECK(run({"kakutani", "--factors", bad}).code == 3);
}

TEST_CASE("usage errors exit 2", "[cli][exit]") {
  CHECK(run({}).code == 2);
  auto u = run({"density", "--space", kSpaceA, "--no-such-flag"});
  CHECK(u.code == 2);
  CHECK_THAT(u.err, ContainsSubstring("no-such-flag"));
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"density"}).code == 2);
  CHECK(run({"--format", "xml", "density", "--space", kSpaceA}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("input errors exit 3", "[cli][exit]") {
  CHECK(run({"density", "--space", "/nonexistent/space.json"}).code == 3);
  auto broken = temp_file("broken.json", "{\n  \"atoms\": [\"a\",\n");
  auto b = run({"density", "--space", broken});
  CHECK(b.code == 3);
  CHECK_THAT(b.err, ContainsSubstring("parse error at line"));
  auto uncovered = temp_file("uncovered.json", R"({"version": "1", "atoms": ["a", "b"], "horizon": 0,
  "partitions": [[["a"]]], "measures": {"mu": ["1", "0"], "nu": ["0", "1"]}})");
  auto u = run({"density", "--space", uncovered});
  CHECK(u.code == 3);
  CHECK_THAT(u.err, ContainsSubstring("cover"));
  auto coarse = temp_file("coarse.json", R"({"version": "1", "atoms": ["a", "b", "c"], "horizon": 2,
  "partitions": [[["a", "b", "c"]], [["a"], ["b", "c"]], [["a", "b"], ["c"]]],
  "measures": {"mu": ["1/3", "1/3", "1/3"], "nu": ["1/3", "1/3", "1/3"]}})");
  CHECK(run({"density", "--space", coarse}).code == 3);
  auto negative = temp_file("negative.json", R"({"version": "1", "atoms": ["a", "b"], "horizon": 1,
  "partitions": [[["a", "b"]], [["a"], ["b"]]], "measures": {"mu": ["-1/2", "3/2"], "nu": ["1/2", "1/2"]}})");
  CHECK(run({"density", "--space", negative}).code == 3);
  auto bad_time = temp_file("bad_time.json", R"({"version": "1", "atoms": ["a", "b"], "horizon": 1,
  "partitions": [[["a", "b"]], [["a"], ["b"]]], "measures": {"mu": ["1/2", "1/2"], "nu": ["1/2", "1/2"]},
  "stopping_times": {"T": [0, 1]}})");
  CHECK(run({"hahn", "--space", bad_time, "-T", "T"}).code == 3);
  CHECK(run({"density", "--space", kSpaceA, "--mu", "lambda"}).code == 3);
  CHECK(run({"--cap", "2", "density", "--space", kSpaceA}).code == 3);
  CHECK(run({"verify", "--suite", "theorem9"}).code == 3);
}

TEST_CASE("SpaceFile round trip", "[cli][spacefile]") {
  auto text = read(kSpaceA);
  auto f = parse_space_file(text);
  CHECK(f.space.atom_count() == 4);
  CHECK(f.measures.at("mu").weights()[0] == Rational(1, 2));
  CHECK(f.stopping_times.at("T2").times()[2] == ExtendedTime::at(1));
  auto once = serialize_space_file(f);
  auto twice = serialize_space_file(parse_space_file(once));
  CHECK(once == twice);
  auto g = parse_space_file(once);
  CHECK(g.space.at(1) == f.space.at(1));
  CHECK(g.stopping_times.at("T1") == f.stopping_times.at("T1"));
}

TEST_CASE("gen writes a parseable instance", "[cli][gen]") {
  auto a = run({"gen", "--seed", "7", "--atoms", "6", "--horizon", "3"});
  REQUIRE(a.code == 0);
  CHECK(run({"gen", "--seed", "7", "--atoms", "6", "--horizon", "3"}).out == a.out);
  auto f = parse_space_file(a.out);
  CHECK(f.space.atom_count() == 6);
  CHECK(f.space.horizon() == 3);
  CHECK(serialize_space_file(f) == a.out);
  auto path = temp_file("gen7.json", a.out);
  CHECK(run({"hprocess", "--space", path}).code == 0);
  auto p = run({"gen", "--seed", "3", "--product", "--horizon", "4"});
  REQUIRE(p.code == 0);
  CHECK(parse_space_file(p.out).space.atom_count() == 16);
  CHECK(run({"gen", "--atoms", "65"}).code == 3);
  ::setenv("HELLINGER_LAB_SEED", "7", 1);
  auto e = run({"gen", "--atoms", "6", "--horizon", "3"});
  ::unsetenv("HELLINGER_LAB_SEED");
  CHECK(e.out == a.out);
}

TEST_CASE("verify exit codes", "[cli][verify]") {
  auto ok = run({"verify", "--suite", "theorem1", "--seeds", "0..19"});
  CHECK(ok.code == 0);
  CHECK_THAT(ok.out, ContainsSubstring("ok"));
  // Stopping time of M falls short of H on part of the seeds.
  auto t2 = run({"verify", "--suite", "theorem2", "--seeds", "0..99"});
  CHECK(t2.code == 1);
  CHECK_THAT(t2.out, ContainsSubstring("H = stopping time of M"));
  auto j1 = run({"--format", "json", "verify", "--suite", "all", "--seeds", "0..9"});
  auto j2 = run({"--format", "json", "verify", "--suite", "all", "--seeds", "0..9"});
  CHECK(j1.out == j2.out);
  auto j = nlohmann::json::parse(j1.out);
  CHECK(j["suite"] == "all");
  CHECK_FALSE(j["reports"][0].contains("elapsed"));
  auto timed = nlohmann::json::parse(run({"--format", "json", "--timing", "verify", "--suite", "prop2", "--seeds", "0"}).out);
  CHECK(timed["reports"][0].contains("elapsed"));
}
