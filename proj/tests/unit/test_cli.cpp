#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tilt_cli/commands.hpp"
#include "tilt_cli/config.hpp"

using namespace tilt::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "tilt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("tilt_cli_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& text = {}) const {
    const fs::path p = path / name;
    if (!text.empty()) std::ofstream(p) << text;
    return p.string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("solve prints the closed-form exponential tilt") {
  const auto r = invoke({"solve", "--family", "exp1", "--a", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("0.618034") != std::string::npos);
  CHECK(r.err.empty());
}

TEST_CASE("table3 layout") {
  const auto r = invoke({"table3", "--family", "ncchi2", "--kappa", "2", "--lambda", "1", "--p",
                         "0.01,0.05", "--n", "5000", "--seed", "7"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "p,a,theta_star,mc_mean,mc_se,is_mean,is_se,re,re_star");
  std::string row;
  std::getline(lines, row);
  CHECK(row.rfind("0.01,12.85,0.3278,", 0) == 0);
}

TEST_CASE("estimate layout and markdown output") {
  const auto r = invoke({"estimate", "--family", "normal", "--a", "2.326", "--n", "20000"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("method,family,a,theta,n,seed,p_hat,std_err,re,re_star\n", 0) == 0);
  CHECK(r.out.find("\nnaive,") != std::string::npos);
  CHECK(r.out.find("\nis,") != std::string::npos);

  const auto md = invoke({"estimate", "--family", "normal", "--a", "2.576", "--tail", "two-sided",
                          "--method", "two-sided", "--n", "20000", "--format", "markdown"});
  REQUIRE(md.code == 0);
  CHECK(md.out.rfind("| method | family |", 0) == 0);
  CHECK(md.out.find("| two-sided |") != std::string::npos);
}

TEST_CASE("config parse errors name the line and field") {
  try {
    parse_config("command = estimate\n\n[event]\na = two\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 4);
    CHECK(e.field() == "event.a");
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("[nowhere]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[event]\nthreshold = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = 1\nseed = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = -3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("just some words\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[regression]\ndesigns = naive-1000\n"), ConfigError);
  try {
    parse_config("[family]\nname = exp1\nsigma = 2\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "family.sigma");
  }
}

TEST_CASE("configs round-trip") {
  RunConfig c;
  c.command = Command::Coverage;
  c.seed = 123456789012345ULL;
  c.format = Format::Markdown;
  c.out = "report.md";
  c.family.name = "gamma";
  c.family.alpha = 0.1 + 0.2;
  c.family.beta = 1.0 / 3.0;
  c.event.a = 1e-300;
  c.event.p = {0.1, 0.05, 1.0 / 7.0};
  c.solver.initial = -2.5;
  c.portfolio.b = {0.044, 0.0589891};
  c.regression.designs = {{false, 1000}, {true, 100}};
  CHECK(parse_config(serialize(c)) == c);

  int seen = 0;
  for (const auto& entry : fs::directory_iterator(TILT_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    CAPTURE(entry.path().string());
    const auto parsed = load_config(entry.path().string());
    CHECK(parse_config(serialize(parsed)) == parsed);
    CHECK_NOTHROW(validate(parsed));
    ++seen;
  }
  CHECK(seen >= 6);
}

TEST_CASE("reports are byte-identical for a fixed seed") {
  TempDir dir;
  const std::string cfg = dir.file("run.ini",
                                   "command = table3\nseed = 11\n\n[family]\nname = ncchi2\n"
                                   "kappa = 5\nlambda = 5\n\n[event]\np = 0.001, 0.01\n\n"
                                   "[sampling]\nn = 20000\n");
  const std::string a = dir.file("a.csv");
  const std::string b = dir.file("b.csv");
  REQUIRE(invoke({"--config", cfg, "--out", a, "--workers", "1"}).code == 0);
  REQUIRE(invoke({"--config", cfg, "--out", b, "--workers", "3"}).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(!slurp(a).empty());
  REQUIRE(invoke({"--config", cfg, "--out", b, "--seed", "12"}).code == 0);
  CHECK(slurp(a) != slurp(b));
}

TEST_CASE("failures leave no report and map to exit codes") {
  TempDir dir;
  const std::string out = dir.file("report.csv");

  const std::string bad = dir.file("bad.ini", "command = estimate\nout = " + out +
                                                  "\n[event]\na = 1..5\n");
  const auto parse = invoke({"--config", bad});
  CHECK(parse.code == 2);
  CHECK(parse.err.find("line 4") != std::string::npos);
  CHECK(parse.err.find("event.a") != std::string::npos);
  CHECK_FALSE(fs::exists(out));

  const auto missing = invoke({"estimate", "--family", "normal", "--out", out});
  CHECK(missing.code == 2);
  CHECK_FALSE(fs::exists(out));

  const auto wrong_family = invoke({"table3", "--family", "normal", "--p", "0.01"});
  CHECK(wrong_family.code == 2);

  const auto precondition = invoke({"solve", "--family", "exp1", "--a", "-1", "--out", out});
  CHECK(precondition.code == 3);
  CHECK(precondition.err.find("does not exceed the mean") != std::string::npos);
  CHECK_FALSE(fs::exists(out));

  const auto domain =
      invoke({"estimate", "--family", "exp1", "--a", "0.01", "--tail", "lower", "--out", out});
  CHECK(domain.code == 3);
  CHECK_FALSE(fs::exists(out));

  const auto numerical = invoke({"coverage", "--designs", "importance:20", "--trials", "5", "--out", out});
  CHECK(numerical.code == 4);
  CHECK_FALSE(fs::exists(out));
  CHECK_FALSE(fs::exists(out + ".tmp"));

  CHECK(invoke({"bogus"}).code == 2);
  CHECK(invoke({"solve", "--no-such-flag"}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("bootstrap and var commands") {
  const auto boot = invoke({"bootstrap", "--reg-p", "7", "--p", "0.01", "--B", "100", "--M", "200"});
  REQUIRE(boot.code == 0);
  CHECK(boot.out.rfind("a,alpha,theta,naive_mean,naive_var,is_mean,is_var,re,re_star\n4.571,", 0) == 0);

  const auto cfg = load_config(std::string(TILT_CONFIG_DIR) + "/table4.ini");
  RunConfig small = cfg;
  small.sampling.k = 200;
  small.sampling.M = 50;
  small.sampling.m = 20000;
  small.event.r_p = {0.824};
  const Table t = run(small);
  REQUIRE(t.rows.size() == 1);
  CHECK(std::stod(t.rows[0][1]) == doctest::Approx(3.776).epsilon(0.03));
}
