#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(MODESHIFT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name)
      : dir(fs::temp_directory_path() / ("modeshift_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

const json* find_variant(const json& report, const std::string& variant) {
  for (const auto& e : report["estimates"]) {
    if (e["variant"] == variant) return &e;
  }
  return nullptr;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and bad flags") {
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("estimate --no-such-flag") == 2);
  }

  TEST_CASE("impact subcommand") {
    Scratch s("impact");
    REQUIRE(run("impact --ate 0.116 --ate 0.148 --out " + s / "impact.json") == 0);
    const json j = json::parse(slurp(s / "impact.json"));
    CHECK(std::abs(j["co2_savings_kg_per_switcher"].get<double>() - 57.2) < 0.05);
    CHECK(std::abs(j["attribution"][0]["attributed_share"].get<double>() - 0.281) < 0.001);
    CHECK(std::abs(j["attribution"][1]["attributed_share"].get<double>() - 0.358) < 0.001);
  }

  TEST_CASE("schema violation: exit 2 and no report") {
    Scratch s("schema");
    write_file(s / "bad.csv", "id,informed,used_pt\na,1,0\n");
    CHECK(run("run --input " + s / "bad.csv" + " --out " + s / "out") == 2);
    CHECK_FALSE(fs::exists(s / "out/report.json"));
    CHECK(run("describe --input " + s / "missing.csv") == 2);
    write_file(s / "bad.cfg", "forest.num_trees = -3\n");
    CHECK(run("describe --config " + s / "bad.cfg") == 2);
  }

  TEST_CASE("estimation failure: exit 3") {
    Scratch s("estimation");
    // one treated guest only: the propensity logit cannot separate classes
    REQUIRE(run("simulate --n 40 --seed 1 --out " + s / "sim.csv") == 0);
    std::istringstream lines(slurp(s / "sim.csv"));
    std::string line, kept;
    std::getline(lines, line);
    kept = line + "\n";
    while (std::getline(lines, line)) {
      // informed is the second column
      if (line.substr(line.find(',') + 1, 1) == "1") kept += line + "\n";
    }
    write_file(s / "treated.csv", kept);
    CHECK(run("describe --input " + s / "treated.csv") == 3);
  }

  TEST_CASE("report is bit-identical across runs and worker counts") {
    Scratch s("determinism");
    REQUIRE(run("simulate --n 1200 --seed 4 --out " + s / "sim.csv") == 0);
    write_file(s / "cfg",
               "bootstrap.replications = 29\nforest.num_trees = 60\nseed = 11\n");
    const std::string base = "run --config " + s / "cfg" + " --input " + s / "sim.csv";
    REQUIRE(run(base + " --workers 1 --out " + s / "a") == 0);
    REQUIRE(run(base + " --workers 3 --out " + s / "b") == 0);
    REQUIRE(run(base + " --workers 1 --out " + s / "c") == 0);
    for (const char* f : {"report.json", "balance.csv", "overlap.svg", "cates.svg"}) {
      CHECK(slurp(s / (std::string("a/") + f)) == slurp(s / (std::string("b/") + f)));
      CHECK(slurp(s / (std::string("a/") + f)) == slurp(s / (std::string("c/") + f)));
    }
    const json report = json::parse(slurp(s / "a/report.json"));
    CHECK(report["schema_version"] == 1);
    for (const auto& e : report["estimates"]) {
      CHECK(e["seed"] == 11);
      CHECK(e["n_used"].get<int>() > 0);
    }
    for (const char* v : {"psm", "psm_trimmed", "forest", "forest_overlap"}) {
      CHECK(find_variant(report, v) != nullptr);
    }
  }

  TEST_CASE("drop log reconciles with the input rows") {
    Scratch s("droplog");
    REQUIRE(run("simulate --n 1500 --seed 2 --missing-rate 0.04 --alternate-share 0.3 --out " +
                s / "sim.csv") == 0);
    write_file(s / "cfg",
               "bootstrap.replications = 9\nforest.num_trees = 20\nmethod = psm\n"
               "filter.max_distance_km = 250\n");
    REQUIRE(run("run --config " + s / "cfg" + " --input " + s / "sim.csv" + " --out " +
                s / "out") == 0);
    const json sample = json::parse(slurp(s / "out/report.json"))["sample"];
    CHECK(sample["input_rows"] == 1500);
    std::size_t dropped = 0;
    for (const auto& r : sample["rules"]) {
      CHECK(r["count"] == r["ids"].size());
      dropped += r["count"].get<std::size_t>();
    }
    CHECK(dropped == sample["dropped"].get<std::size_t>());
    CHECK(sample["analysis_rows"].get<std::size_t>() + dropped == 1500);
    CHECK(sample["rules"].size() >= 3);
  }

  TEST_CASE("randomized input recovers the effect") {
    Scratch s("recovery");
    REQUIRE(run("simulate --confounding randomized --shape constant --n 4000 --seed 8 --out " +
                s / "sim.csv") == 0);
    write_file(s / "cfg", "bootstrap.replications = 99\nforest.num_trees = 500\nseed = 3\n");
    REQUIRE(run("run --config " + s / "cfg" + " --input " + s / "sim.csv" + " --out " +
                s / "out") == 0);
    const json report = json::parse(slurp(s / "out/report.json"));
    for (const char* v : {"psm", "forest"}) {
      const json* e = find_variant(report, v);
      REQUIRE(e != nullptr);
      CHECK(std::abs((*e)["estimate"].get<double>() - 0.15) < 0.04);
    }
  }

  TEST_CASE("saved forest reproduces the estimate") {
    Scratch s("model");
    REQUIRE(run("simulate --n 800 --seed 5 --out " + s / "sim.csv") == 0);
    write_file(s / "cfg", "forest.num_trees = 40\nseed = 2\n");
    const std::string base =
        "estimate --method forest --config " + s / "cfg" + " --input " + s / "sim.csv";
    REQUIRE(run(base + " --model-out " + s / "m.cbor" + " --out " + s / "a.json") == 0);
    REQUIRE(run(base + " --model-in " + s / "m.cbor" + " --out " + s / "b.json") == 0);
    CHECK(slurp(s / "a.json") == slurp(s / "b.json"));
    CHECK(fs::file_size(s / "m.cbor") > 0);
  }
}
