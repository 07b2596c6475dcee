// Copyright 2026 The cqi-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "catch_amalgamated.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cqi_sim_test_" + std::to_string(::getpid())) / name;
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run cli(const std::string& args) {
  const fs::path dir = scratch("io");
  const std::string cmd = std::string(CQI_SIM_EXE) + " " + args + " >" + (dir / "stdout").string() + " 2>" +
                          (dir / "stderr").string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / "stdout"), slurp(dir / "stderr")};
}

std::string config(const std::string& name) { return std::string(CQI_CONFIG_DIR) + "/" + name; }

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch("configs") / name;
  std::ofstream(p) << text;
  return p;
}

// File contents without the timestamp line or field.
std::string payload(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line, out;
  while (std::getline(in, line))
    if (line.find("generated") == std::string::npos) out += line + "\n";
  return out;
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    REQUIRE(!line.empty());
    REQUIRE(line.back() == '\r');
    line.pop_back();
    if (line.starts_with("#")) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (line.ends_with(",")) cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

}  // namespace

TEST_CASE("list and validate", "[cli]") {
  const auto r = cli("list-experiments");
  CHECK(r.code == 0);
  for (const char* k : {"chain", "detector-compare", "two-point", "zeno", "time-reversed-zeno", "epr", "realism-scenario"})
    CHECK(r.out.find(k) != std::string::npos);
  for (const auto& e : fs::directory_iterator(CQI_CONFIG_DIR)) {
    INFO(e.path());
    CHECK(cli("validate " + e.path().string()).code == 0);
  }
}

TEST_CASE("config errors exit with code 1 and name the field", "[cli]") {
  SECTION("missing omega") {
    const auto p = write_config("no-omega.json", R"({"kind": "zeno", "params": {"epsilon": [0.05]}})");
    for (const std::string& cmd : {"validate " + p.string(), "run " + p.string() + " --out " + scratch("err").string()}) {
      const auto r = cli(cmd);
      CHECK(r.code == 1);
      CHECK(r.err.find("omega") != std::string::npos);
    }
  }
  SECTION("unknown key") {
    const auto p = write_config("typo.json", R"({"kind": "zeno", "params": {"omega": 1, "epsilon": [0.05], "omgea": 2}})");
    const auto r = cli("validate " + p.string());
    CHECK(r.code == 1);
    CHECK(r.err.find("omgea") != std::string::npos);
  }
  SECTION("bad values") {
    const auto p = write_config("grid.json", R"({"kind": "detector-compare", "grid": {"nx": 1}})");
    const auto r = cli("validate " + p.string());
    CHECK(r.code == 1);
    CHECK(r.err.find("grid.nx") != std::string::npos);
    const auto q = write_config("kind.json", R"({"kind": "bell-test"})");
    CHECK(cli("validate " + q.string()).code == 1);
    const auto m = write_config("broken.json", R"({"kind": )");
    CHECK(cli("validate " + m.string()).code == 1);
    const auto n = write_config("norm.json", R"({"kind": "epr", "params": {"alpha": 1, "beta": 1}})");
    CHECK(cli("validate " + n.string()).code == 1);
    CHECK(cli("validate /nonexistent/config.json").code == 1);
  }
}

TEST_CASE("numerical validation failures exit with code 2", "[cli]") {
  const auto p = write_config("strong.json", R"({"kind": "detector-compare", "params": {"alpha": 1.0}})");
  const auto r = cli("run " + p.string() + " --out " + scratch("strong").string());
  CHECK(r.code == 2);
  CHECK(r.err.find("perturbativ") != std::string::npos);
  const auto q = write_config("close.json", R"({"kind": "two-point", "params": {"points": [-1, 1]}})");
  CHECK(cli("run " + q.string() + " --out " + scratch("close").string()).code == 2);
}

TEST_CASE("outputs", "[cli]") {
  SECTION("zeno table") {
    const auto dir = scratch("zeno");
    REQUIRE(cli("run " + config("zeno.json") + " --out " + dir.string()).code == 0);
    const auto rows = csv_rows(dir / "zeno.csv");
    REQUIRE(rows.size() == 6);
    const auto ratio = column(rows[0], "ratio");
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].size() == rows[0].size());
      CHECK(std::abs(std::stod(rows[i][ratio]) - 0.5) < 1e-12);
    }
    const auto head = slurp(dir / "zeno.csv");
    CHECK(head.starts_with("# tool: cqi-sim "));
    CHECK(head.find("# config: {") != std::string::npos);
    const auto report = nlohmann::json::parse(slurp(dir / "zeno.report.json"));
    CHECK(report["header"]["config"]["params"]["omega"] == 1.0);
    CHECK(report["header"].contains("version"));
  }
  SECTION("detector comparison with refinement") {
    const auto dir = scratch("detector");
    REQUIRE(cli("run " + config("detector-compare.json") + " --refine 1 --out " + dir.string()).code == 0);
    const auto rows = csv_rows(dir / "detector-compare.csv");
    REQUIRE(rows.size() == 3);
    const auto rel = column(rows[0], "cqi_born_rel");
    CHECK(std::abs(std::stod(rows[1][rel])) <= 1e-3);
    CHECK(std::abs(std::stod(rows[2][rel])) < std::abs(std::stod(rows[1][rel])));
    CHECK(rows[1][column(rows[0], "convergence")].empty());
    CHECK(!rows[2][column(rows[0], "convergence")].empty());
    CHECK(csv_rows(dir / "detector-compare.shrink.csv").size() == 6);
  }
  SECTION("json format") {
    const auto dir = scratch("epr");
    REQUIRE(cli("run " + config("epr.json") + " --out " + dir.string()).code == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "epr.json"));
    CHECK(doc["results"]["rows"][0]["S_A_given_B"].get<double>() < 1e-9);
    CHECK(doc["tables"]["no-communication"]["rows"].size() == 500);
  }
  SECTION("RFC 4180 quoting") {
    const auto dir = scratch("realism");
    REQUIRE(cli("run " + config("realism-scenario.json") + " --out " + dir.string()).code == 0);
    const auto rows = csv_rows(dir / "realism-scenario.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[1][0] == "t0");
  }
}

TEST_CASE("determinism", "[cli]") {
  for (const char* name : {"chain", "epr", "zeno", "two-point"}) {
    const auto a = scratch(std::string("det_a_") + name), b = scratch(std::string("det_b_") + name);
    REQUIRE(cli("run " + config(std::string(name) + ".json") + " --out " + a.string()).code == 0);
    REQUIRE(cli("run " + config(std::string(name) + ".json") + " --out " + b.string()).code == 0);
    for (const auto& f : fs::directory_iterator(a)) {
      INFO(f.path());
      CHECK(payload(f.path()) == payload(b / f.path().filename()));
    }
  }
  SECTION("thread count does not change results") {
    const auto a = scratch("thr_a"), b = scratch("thr_b");
    REQUIRE(cli("run " + config("chain.json") + " --out " + a.string()).code == 0);
    REQUIRE(std::system(("CQI_SIM_THREADS=1 " + std::string(CQI_SIM_EXE) + " run " + config("chain.json") + " --out " +
                         b.string() + " >/dev/null")
                            .c_str()) == 0);
    CHECK(payload(a / "chain.csv") == payload(b / "chain.csv"));
  }
  SECTION("seed changes random sweeps") {
    const auto p = write_config("chain-seed.json", R"({"kind": "chain", "seed": 8, "params": {"dim": 3, "observers": 4, "chains": 100}, "output": {"name": "chain"}})");
    const auto a = scratch("seed_a"), b = scratch("seed_b");
    REQUIRE(cli("run " + config("chain.json") + " --out " + a.string()).code == 0);
    REQUIRE(cli("run " + p.string() + " --out " + b.string()).code == 0);
    CHECK(payload(a / "chain.csv") != payload(b / "chain.csv"));
  }
}
