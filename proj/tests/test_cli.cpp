#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bdns/harness.hpp"
#include "doctest.h"

using namespace bdns;
namespace fs = std::filesystem;

namespace {

int call(std::vector<std::string> args) {
  args.insert(args.begin(), "bdns_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch() {
  const fs::path d = fs::temp_directory_path() / "bdns_cli_tests";
  fs::create_directories(d);
  return d;
}

std::string write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p.string();
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("validate-law on the Saint-Venant configuration") {
    const auto d = scratch();
    const auto cfg = write(d / "saint_venant.json",
                           R"({"law": {"terms": [[1, 1]]}, "nu": 0.9, "gamma": 2, "dim": 2, "cells": 32,
                               "initial": {"preset": "saint_venant_demo"}})");
    CHECK(call({"validate-law", "--config", cfg, "--out", (d / "v.json").string()}) == 0);
    const auto j = read_json(d / "v.json");
    CHECK(j["overall"].get<bool>());
    REQUIRE(j["conditions"].size() == 4);
    CHECK(j["conditions"][2]["condition"] == "(10)");
    for (const auto& c : j["conditions"])
      for (const char* key : {"condition", "pass", "worst_rho", "margin"}) CHECK(c.contains(key));
    CHECK(call({"validate-law", "--law", R"({"constant": 1})", "--out", (d / "c.json").string()}) == 1);
  }

  TEST_CASE("usage errors exit with 2") {
    CHECK(call({"simulate", "--config", "missing.json"}) == 2);
    CHECK(call({"simulate"}) == 2);
    CHECK(call({}) == 2);
    CHECK(call({"simulate", "--config", "x.json", "--bogus"}) == 2);
    CHECK(call({"frobnicate"}) == 2);
    CHECK(call({"verify-identities", "--grids", "16,32", "--dims", "1"}) == 2);
    CHECK(call({"verify-identities", "--grids", "a,b"}) == 2);
    CHECK(call({"--help"}) == 0);
  }

  TEST_CASE("verify-identities: structural relation broken -> 1, intact -> 0") {
    const auto d = scratch();
    CHECK(call({"verify-identities", "--law", "linear", "--g-constant", "1", "--dims", "1", "--grids", "32,64",
                "--out", (d / "bad.json").string()}) == 1);
    CHECK(call({"verify-identities", "--law", "linear", "--dims", "1", "--grids", "32,64,128", "--out",
                (d / "good.json").string()}) == 0);
    const auto j = read_json(d / "good.json");
    REQUIRE(j.is_array());
    for (const char* key : {"identity", "grids", "residuals", "order", "verdict"}) CHECK(j[0].contains(key));
  }

  TEST_CASE("simulate writes ledger, JSONL and checkpoint; restart from the checkpoint") {
    const auto d = scratch();
    const auto cfg = write(d / "sim.json",
                           R"({"law": {"terms": [[1, 1]]}, "dim": 1, "cells": 32, "t_end": 0.002,
                               "initial": {"preset": "smooth_bump", "velocity": 0.2}})");
    const auto ck = (d / "out.bdns").string();
    CHECK(call({"simulate", "--config", cfg, "--ledger", (d / "l.csv").string(), "--jsonl",
                (d / "l.jsonl").string(), "--checkpoint", ck}) == 0);
    CHECK(fs::file_size(d / "l.csv") > 0);
    CHECK(fs::file_size(d / "l.jsonl") > 0);
    const auto cfg2 = write(d / "restart.json", R"({"law": {"terms": [[1, 1]]}, "dim": 1, "cells": 32, "t_end": 0.004,
                               "initial": {"checkpoint": ")" + ck + R"("}})");
    CHECK(call({"simulate", "--config", cfg2}) == 0);
  }

  TEST_CASE("stability-study report") {
    const auto d = scratch();
    const auto cfg = write(d / "study.json",
                           R"({"dim": 1, "cells": 64, "t_end": 0.002, "ledger_stride": 10, "checkpoint_stride": 10,
                               "initial": {"preset": "smooth_bump", "velocity": 0.3},
                               "study": {"sigma0": 0.03, "n_max": 2}})");
    CHECK(call({"stability-study", "--config", cfg, "--out", (d / "s.json").string(), "--ledger-dir",
                (d / "ledgers").string()}) == 0);
    const auto j = read_json(d / "s.json");
    for (const char* key : {"members", "d_rho", "d_u", "d_m", "vacuum", "uniform_bounds"}) CHECK(j.contains(key));
    CHECK(j["members"].size() == 3);
    CHECK(j["d_rho"].size() == 3);
    CHECK(fs::exists(j["members"][0].get<std::string>()));
  }
}
