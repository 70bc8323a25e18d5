#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "toruslab/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using toruslab::cli::dispatch;

namespace {

struct Run {
  int code;
  std::string out, err;
  json last() const {
    std::istringstream is(out);
    std::string line, prev;
    while (std::getline(is, line))
      if (!line.empty()) prev = line;
    return json::parse(prev);
  }
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("toruslab-cli-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  }
  std::string out() const { return (dir / "runs").string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("spectrum writes a table and then hits the cache") {
  Scratch s;
  const auto a = run({"spectrum", "--mmax", "500", "--out", s.out()});
  REQUIRE(a.code == 0);
  CHECK(a.last().at("status") == "written");
  const auto b = run({"spectrum", "--mmax", "500", "--out", s.out()});
  CHECK(b.last().at("status") == "cache-hit");
  const auto text = slurp(a.last().at("artifact").get<std::string>());
  CHECK(text.find("\n25,12\n") != std::string::npos);
}

TEST_CASE("scale reports exact exponents and reruns are no-ops") {
  Scratch s;
  const auto a = run({"scale", "--E", "100", "--L", "2", "--dim", "3", "--gamma", "1/12", "--out", s.out()});
  REQUIRE(a.code == 0);
  const fs::path art = a.last().at("artifact").get<std::string>();
  const auto result = json::parse(slurp(art / "result.json"));
  CHECK(result.at("alpha_exact") == "1/56");
  CHECK(result.at("beta_exact") == "3/28");
  CHECK(result.at("lambda_physical").get<double>() == 400.0);
  const auto manifest = json::parse(slurp(art / "manifest.json"));
  CHECK(manifest.at("subcommand") == "scale");
  REQUIRE(manifest.at("outputs").size() == 1);
  CHECK(manifest.at("outputs")[0].at("file") == "result.json");

  const auto stamp = fs::last_write_time(art / "result.json");
  const auto b = run({"scale", "--E", "100", "--L", "2", "--dim", "3", "--gamma", "1/12", "--out", s.out()});
  CHECK(b.last().at("status") == "up-to-date");
  CHECK(fs::last_write_time(art / "result.json") == stamp);
}

TEST_CASE("params file supplies defaults that flags override") {
  Scratch s;
  const auto p = s.write("p.json", R"({"E": 100, "L": 2})");
  const auto a = run({"scale", "--params", p, "--out", s.out()});
  REQUIRE(a.code == 0);
  auto r = json::parse(slurp(fs::path(a.last().at("artifact").get<std::string>()) / "result.json"));
  CHECK(r.at("lambda_physical").get<double>() == 400.0);
  const auto b = run({"scale", "--params", p, "--L", "3", "--out", s.out()});
  REQUIRE(b.code == 0);
  r = json::parse(slurp(fs::path(b.last().at("artifact").get<std::string>()) / "result.json"));
  CHECK(r.at("lambda_physical").get<double>() == 900.0);
}

TEST_CASE("sprime and solve artifacts") {
  Scratch s;
  const auto w = run({"sprime", "--from", "1000", "--to", "1200", "--delta", "0.35", "--eps", "0.04",
                      "--eps-prime", "0.2", "--out", s.out()});
  REQUIRE(w.code == 0);
  const fs::path wdir = w.last().at("artifact").get<std::string>();
  CHECK(slurp(wdir / "window.csv").rfind("m_k,", 0) == 0);
  CHECK(fs::exists(wdir / "density_vs_window.csv"));

  const auto cfg = s.write("one.json", R"({"dim":2,"positions":[[0.1234,0.5678]],"u":{"phase":0.0}})");
  const auto r = run({"solve", "--config", cfg, "--mk", "1000", "--out", s.out()});
  REQUIRE(r.code == 0);
  const fs::path rdir = r.last().at("artifact").get<std::string>();
  const auto roots = slurp(rdir / "roots.csv");
  CHECK(std::count(roots.begin(), roots.end(), '\n') == 2);
}

TEST_CASE("mc writes trials, report and event frequencies") {
  Scratch s;
  const auto spec = s.write("spec.json",
                            R"({"m_k":1000,"n":2,"trials":12,"strict":false,"sprime":{"delta":0.35,"eps":0.04,"eps_prime":0.2}})");
  const auto r = run({"mc", "--spec", spec, "--out", s.out(), "--threads", "1"});
  REQUIRE(r.code == 0);
  const fs::path dir = r.last().at("artifact").get<std::string>();
  CHECK(fs::exists(dir / "trials.csv"));
  CHECK(fs::exists(dir / "report.json"));
  CHECK(slurp(dir / "freq_vs_c0.csv").rfind("C0,freq,target,sigma,pass\n", 0) == 0);
}

TEST_CASE("exit codes and error records") {
  Scratch s;
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"solve", "--config", (s.dir / "missing.json").string(), "--mk", "5"}).code == 2);
  const auto bad = run({"scale", "--E", "-1", "--out", s.out()});
  CHECK(bad.code == 2);
  const auto rec = json::parse(bad.err);
  CHECK(rec.at("error").at("exit_code") == 2);
  CHECK(rec.at("error").at("kind") == "validation");
  const auto file = s.write("blocker", "x");
  CHECK(run({"scale", "--E", "4", "--out", file}).code == 4);
  CHECK(run({"--version"}).code == 0);
}

TEST_CASE("plot data emitters") {
  toruslab::cli::PlotInputs in;
  std::ostringstream a;
  toruslab::cli::emit_plotdata("err_vs_lambda", in, a);
  CHECK(a.str() == "m_k,median_err,q10,q90,median_lo,median_hi,n\n");
  std::ostringstream b;
  toruslab::cli::emit_plotdata("freq_vs_c0", in, b);
  CHECK(b.str() == "C0,freq,target,sigma,pass\n");
  std::ostringstream c;
  CHECK_THROWS(toruslab::cli::emit_plotdata("nope", in, c));
}
