#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

// Drives the installed binary end to end; the harness passes its location
// in CTTP_CLI.

namespace {

struct CliResult {
  int exit_code;
  std::string out;
};

std::string cli_path() {
  const char* p = std::getenv("CTTP_CLI");
  REQUIRE_MESSAGE(p != nullptr, "CTTP_CLI must point at the cttp binary");
  return p;
}

CliResult run_cli(const std::string& args, const std::string& env = "") {
  std::string cmd = env + " " + cli_path() + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

std::string write_temp(const std::string& name, const std::string& text) {
  std::string path = "/tmp/cttp_test_" + name;
  std::ofstream f(path);
  f << text;
  return path;
}

const char* kIsingPath3 =
    R"({"model":"ising","beta":0.9,"fields":[[0.5,0.5],[0.5,0.5],[0.5,0.5]],"edges":[[0,1],[1,2]]})";

}  // namespace

TEST_CASE("cli: identical argv gives byte-identical output") {
  auto inst = write_temp("p3.json", kIsingPath3);
  const std::string args = "sample --instance " + inst + " --query 0,1,2 --reps 20 --seed 7";
  auto a = run_cli(args);
  auto b = run_cli(args);
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(!a.out.empty());

  // worker count must not change emitted bytes
  auto c = run_cli(args + " --jobs 2");
  CHECK(c.out == a.out);
}

TEST_CASE("cli: shared sessions answer overlapping queries consistently") {
  auto inst = write_temp("p3b.json", kIsingPath3);
  auto r = run_cli("sample --instance " + inst +
                   " --query 0,1 --reps 3 --seed 5 --session shared --format tsv");
  CHECK(r.exit_code == 0);
  // repeated queries on one session return the same values column
  auto column = [](const std::string& line, int idx) {
    std::stringstream cols(line);
    std::string cell;
    for (int i = 0; i <= idx; ++i) std::getline(cols, cell, '\t');
    return cell;
  };
  std::istringstream ss(r.out);
  std::string line;
  std::getline(ss, line);
  CHECK(column(line, 0) == "rep");
  CHECK(column(line, 2) == "values");
  std::string first_values;
  int lines = 0;
  while (std::getline(ss, line)) {
    if (first_values.empty())
      first_values = column(line, 2);
    else
      CHECK(column(line, 2) == first_values);
    ++lines;
  }
  CHECK(lines == 3);
}

TEST_CASE("cli: gen output feeds straight back in") {
  auto gen = run_cli("gen --family star --n 3 --model coloring --q 195");
  CHECK(gen.exit_code == 0);
  auto inst = write_temp("star.json", gen.out);
  auto r = run_cli("sample --instance " + inst + " --query 0,1 --reps 2 --seed 1");
  CHECK(r.exit_code == 0);

  auto spin = run_cli("gen --family cycle --n 4 --model spin --q 3 --beta 0.9");
  CHECK(spin.exit_code == 0);
  auto inst2 = write_temp("potts.json", spin.out);
  auto r2 = run_cli("verify --instance " + inst2 + " --query 0 --reps 5000 --seed 2");
  CHECK(r2.exit_code == 0);
}

TEST_CASE("cli: exit codes encode the failure class") {
  auto inst = write_temp("p3c.json", kIsingPath3);

  CHECK(run_cli("sample --no-such-flag").exit_code == 1);
  CHECK(run_cli("nonsense").exit_code == 1);

  // beta outside every feasible delta: validation failure without --force
  auto bad = write_temp(
      "bad.json",
      R"({"model":"ising","beta":0.7,"fields":[[0.5,0.5],[0.5,0.5],[0.5,0.5]],"edges":[[0,1],[1,2]]})");
  CHECK(run_cli("sample --instance " + bad + " --query 0 --reps 1 --seed 1").exit_code == 2);
  CHECK(run_cli("sample --instance " + bad + " --query 0 --reps 1 --seed 1 --force").exit_code ==
        0);

  // malformed document
  auto broken = write_temp("broken.json", "{not json");
  CHECK(run_cli("sample --instance " + broken + " --query 0 --reps 1").exit_code == 2);

  // statistical failure: demand an impossible p-value
  CHECK(run_cli("verify --instance " + inst +
                " --query 0,1,2 --reps 2000 --seed 1 --alpha 0.999999")
            .exit_code == 3);

  // recursion budget abort
  CHECK(run_cli("sample --instance " + inst + " --query 0,1,2 --reps 50 --seed 3",
                "CTTP_BUDGET=1")
            .exit_code == 4);
}

TEST_CASE("cli: verify passes healthy instances on both oracles") {
  auto inst = write_temp("p3d.json", kIsingPath3);
  auto en = run_cli("verify --instance " + inst +
                    " --query 0,1,2 --reps 50000 --seed 11 --jobs 2 --tv-max 0.02");
  CHECK(en.exit_code == 0);
  CHECK(en.out.find("\"pass\":true") != std::string::npos);

  auto fw = run_cli("verify --instance " + inst +
                    " --query 0,1,2 --reps 4000 --seed 12 --jobs 2 --oracle forward "
                    "--burn 500 --tv-max 0.05");
  CHECK(fw.exit_code == 0);
}

TEST_CASE("cli: infer emits a normalized estimate record") {
  auto inst = write_temp(
      "edge.json",
      R"({"model":"ising","beta":0.9,"fields":[[0.5,0.5],[0.5,0.5]],"edges":[[0,1]]})");
  auto r = run_cli("infer --instance " + inst +
                   " --pin 0=0 --target 1 --eps 0.2 --delta 0.2 --seed 9");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("\"estimates\":[0.4") != std::string::npos);

  // pinned target is a usage error
  CHECK(run_cli("infer --instance " + inst + " --pin 0=0 --target 0 --eps 0.2 --delta 0.2")
            .exit_code == 1);
}

TEST_CASE("cli: bench reports one record per size") {
  auto r = run_cli(
      "bench --family cycle --model ising --beta 0.9 --sizes 100,1000 --queries 2 --reps 20 "
      "--seed 4 --jobs 2");
  CHECK(r.exit_code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2);
  CHECK(r.out.find("\"mean_resolve_calls\"") != std::string::npos);
}
