// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "upsim/errors.hpp"
#include "upsim/report.hpp"
#include "upsim/scenario_io.hpp"

using namespace upsim;
using namespace upsim::cli;

namespace {

namespace fs = std::filesystem;

const fs::path kScenarioDir = UPSIM_SCENARIO_DIR;

const std::vector<fs::path> kCorpus = {
    kScenarioDir / "honest-2d.json",        kScenarioDir / "honest-3d.json",
    kScenarioDir / "forgery.json",          kScenarioDir / "stale-replay.json",
    kScenarioDir / "forced-delay.json",     kScenarioDir / "collusion-relay.json",
    kScenarioDir / "stolen-nonce-compare.json",
    kScenarioDir / "clock-drift-sweep.json"};

std::string minimal_scenario(const std::string& extra = "") {
  return R"({
    "meta": {"schema_version": 1, "name": "mini", "seed": 5, "dims": 2},
    "stations": [
      {"id": "S1", "pos_m": [0, 0], "schedule_s": [0.0]},
      {"id": "S2", "pos_m": [400, 0], "schedule_s": [0.0]},
      {"id": "S3", "pos_m": [0, 400], "schedule_s": [0.0]}
    ],
    "terminal": {
      "true_pos_m": [100, 100],
      "verifier": {"error_limit_m": 1.0}
    },)" +
         extra + R"(
    "protocol": "unidirectional"
  })";
}

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

std::string field_path_of(const std::string& text) {
  try {
    parse_scenario(text, "test");
  } catch (const ValidationError& e) {
    return e.field_path();
  }
  return "";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("a minimal three-station file loads") {
  const LoadedScenario loaded = parse_scenario(minimal_scenario(), "mini");
  CHECK(loaded.scenario.stations.size() == 3);
  CHECK(loaded.scenario.name == "mini");
  CHECK(loaded.scenario.seed == 5);
  CHECK(loaded.protocol == Protocol::Unidirectional);
  CHECK(loaded.scenario.c_m_per_s == 3e8);  // default
  CHECK(loaded.scenario.terminal.listen_window_ticks == 10'000'000'000);
}

TEST_CASE("a negative delay is rejected naming the field") {
  const std::string text = minimal_scenario(
      R"("attacks": [{"kind": "delay", "delays_s": {"S1": -1e-6}}],)");
  CHECK(field_path_of(text) == "attacks[0].delays_s.S1");
}

TEST_CASE("unknown fields are rejected with their path") {
  CHECK(field_path_of(minimal_scenario(R"("extra_section": 1,)")) ==
        "scenario.extra_section");

  std::string text = minimal_scenario();
  text.replace(text.find("\"pos_m\""), 7, "\"position\"");
  CHECK(field_path_of(text) == "stations[0].position");
}

TEST_CASE("unknown attack kinds and stations are rejected") {
  CHECK(field_path_of(minimal_scenario(
            R"("attacks": [{"kind": "jam"}],)")) == "attacks[0].kind");
  CHECK(field_path_of(minimal_scenario(
            R"("attacks": [{"kind": "delay", "delays_s": {"S9": 1e-6}}],)")) ==
        "attacks[0].delays_s.S9");
}

TEST_CASE("schema version is pinned") {
  std::string text = minimal_scenario();
  text.replace(text.find("\"schema_version\": 1"), 19, "\"schema_version\": 2");
  CHECK(field_path_of(text) == "meta.schema_version");
}

TEST_CASE("a two-station file loads fine and aborts only at run time") {
  const std::string text = R"({
    "meta": {"schema_version": 1, "name": "two", "seed": 5, "dims": 2},
    "stations": [
      {"id": "S1", "pos_m": [0, 0], "schedule_s": [0.0]},
      {"id": "S2", "pos_m": [400, 0], "schedule_s": [0.0]}
    ],
    "terminal": {"true_pos_m": [100, 100], "verifier": {"error_limit_m": 1.0}},
    "protocol": "unidirectional"
  })";
  const LoadedScenario loaded = parse_scenario(text, "two");
  const ReportRecord record = run_one(loaded, RunOptions{});
  CHECK(record.outcome == "too_few_broadcasts");
}

TEST_CASE("records round-trip through their serialization") {
  RunOptions options;
  options.timings = true;
  for (const auto& path : kCorpus) {
    const ReportRecord record = run_one(load_scenario(path), options);
    CHECK(parse_record(emit_record(record, true)) == record);
    // and without timings the record is the same minus the runtime field
    ReportRecord stripped = record;
    stripped.runtime_ms.reset();
    CHECK(parse_record(emit_record(record, false)) == stripped);
  }
}

TEST_CASE("bundled corpus runs to the expected outcomes") {
  std::ostringstream out, diag;
  const int exit_code = run_command(kCorpus, RunOptions{}, out, diag);
  REQUIRE(exit_code == 0);
  CHECK(diag.str().empty());

  std::istringstream lines(out.str());
  std::string line;
  std::vector<ReportRecord> records;
  while (std::getline(lines, line)) records.push_back(parse_record(line));
  REQUIRE(records.size() == kCorpus.size());

  CHECK(records[0].outcome == "accepted");  // honest-2d
  CHECK(records[1].outcome == "accepted");  // honest-3d
  CHECK(records[2].outcome == "accepted");  // forgery: forged beacons dropped
  CHECK(records[2].attacks.forged == 2);
  // stale-replay: the day-old bound cannot be accepted
  CHECK((records[3].outcome == "error_range_exceeded" ||
         records[3].outcome == "not_contained"));
  CHECK(records[4].outcome == "error_range_exceeded");  // forced-delay
  // collusion-relay: rejected, and certainly not at the fake point
  CHECK((records[5].outcome == "error_range_exceeded" ||
         records[5].outcome == "not_contained"));
  CHECK_FALSE(records[5].attacks.success_near_target);
  // stolen-nonce-compare: bidirectional side accepts a shortened bound,
  // unidirectional side never accepts one
  REQUIRE(records[6].bidir.has_value());
  CHECK(records[6].bidir->accepted);
  CHECK(records[6].bidir->shortened);
  CHECK_FALSE(records[6].attacks.success_near_target);
  CHECK(records[7].outcome == "accepted");  // clock-drift-sweep
  REQUIRE(records[7].position_m.has_value());
  const double dx = (*records[7].position_m)[0] - 100.0;
  const double dy = (*records[7].position_m)[1] - 100.0;
  CHECK(std::sqrt(dx * dx + dy * dy) <= 4.5 + 1e-3);
}

TEST_CASE("a generated honest corpus is accepted end to end, exit 0") {
  std::vector<fs::path> files;
  for (int i = 0; i < 10; ++i) {
    const double spread = 300.0 + 20.0 * i;
    std::ostringstream text;
    text << R"({"meta": {"schema_version": 1, "name": "honest-gen-)" << i
         << R"(", "seed": )" << 1000 + i << R"(, "dims": 2},
      "stations": [
        {"id": "S1", "pos_m": [0, 0], "schedule_s": [0.0]},
        {"id": "S2", "pos_m": [)" << spread << R"(, 0], "schedule_s": [0.0]},
        {"id": "S3", "pos_m": [0, )" << spread << R"(], "schedule_s": [0.0]}
      ],
      "terminal": {"true_pos_m": [)" << spread / 4 << ", " << spread / 4
         << R"(], "verifier": {"error_limit_m": 1.0}},
      "protocol": "unidirectional"})";
    files.push_back(write_temp("upsim-honest-" + std::to_string(i) + ".json", text.str()));
  }

  std::ostringstream out, diag;
  CHECK(run_command(files, RunOptions{}, out, diag) == 0);
  std::istringstream lines(out.str());
  std::string line;
  int accepted = 0, total = 0;
  while (std::getline(lines, line)) {
    ++total;
    if (parse_record(line).outcome == "accepted") ++accepted;
  }
  CHECK(total == 10);
  CHECK(accepted == 10);
  for (const auto& f : files) fs::remove(f);
}

TEST_CASE("output is replay-stable byte for byte") {
  std::ostringstream first, second, diag;
  RunOptions options;
  REQUIRE(run_command(kCorpus, options, first, diag) == 0);
  REQUIRE(run_command(kCorpus, options, second, diag) == 0);
  CHECK(first.str() == second.str());
  CHECK(!first.str().empty());

  // parallel execution must not change the bytes either
  std::ostringstream parallel;
  options.jobs = 4;
  REQUIRE(run_command(kCorpus, options, parallel, diag) == 0);
  CHECK(parallel.str() == first.str());
}

TEST_CASE("the seed override wins over the file seed") {
  RunOptions options;
  options.seed_override = 999;
  const ReportRecord record = run_one(load_scenario(kCorpus[0]), options);
  CHECK(record.seed == 999);
  CHECK(record.outcome == "accepted");
}

TEST_CASE("a corrupt file fails the whole batch with exit 2") {
  const fs::path bad = write_temp("upsim-corrupt.json", "{ not json");
  std::ostringstream out, diag;
  const int exit_code = run_command({kCorpus[0], bad}, RunOptions{}, out, diag);
  CHECK(exit_code == 2);
  CHECK(out.str().empty());  // no partial records
  CHECK(diag.str().find("upsim-corrupt") != std::string::npos);
  fs::remove(bad);
}

TEST_CASE("a broken output stream is an I/O failure, exit 3") {
  std::ostringstream out, diag;
  out.setstate(std::ios::badbit);
  CHECK(run_command({kCorpus[0]}, RunOptions{}, out, diag) == 3);
}

TEST_CASE("csv output is a flat projection with a header") {
  std::ostringstream out, diag;
  RunOptions options;
  options.format = OutputFormat::Csv;
  REQUIRE(run_command({kCorpus[0]}, options, out, diag) == 0);
  std::istringstream lines(out.str());
  std::string header, row;
  REQUIRE(std::getline(lines, header));
  REQUIRE(std::getline(lines, row));
  CHECK(header == csv_header());
  CHECK(row.substr(0, 14) == "honest-2d,101,");
  const auto commas = static_cast<std::size_t>(std::count(header.begin(), header.end(), ','));
  CHECK(static_cast<std::size_t>(std::count(row.begin(), row.end(), ',')) == commas);
}

TEST_CASE("validate and report commands") {
  std::ostringstream out;
  CHECK(validate_command(kCorpus, out) == 0);

  const fs::path bad = write_temp("upsim-invalid.json", minimal_scenario(
      R"("attacks": [{"kind": "delay", "delays_s": {"S1": -1}}],)"));
  std::ostringstream out2;
  CHECK(validate_command({bad}, out2) == 2);
  CHECK(out2.str().find("attacks[0].delays_s.S1") != std::string::npos);
  fs::remove(bad);

  // summary over a generated stream
  std::ostringstream stream, diag;
  REQUIRE(run_command(kCorpus, RunOptions{}, stream, diag) == 0);
  const fs::path jsonl = write_temp("upsim-report.jsonl", stream.str());
  std::ostringstream summary;
  CHECK(report_command(jsonl, summary) == 0);
  CHECK(summary.str().find("records: 8") != std::string::npos);
  CHECK(summary.str().find("accepted") != std::string::npos);
  fs::remove(jsonl);
}

TEST_CASE("bidirectional protocol scenarios emit bidir outcomes") {
  const std::string text = R"({
    "meta": {"schema_version": 1, "name": "bd", "seed": 5, "dims": 2},
    "stations": [
      {"id": "S1", "pos_m": [0, 0], "schedule_s": [0.0]},
      {"id": "S2", "pos_m": [400, 0], "schedule_s": [0.0]},
      {"id": "S3", "pos_m": [0, 400], "schedule_s": [0.0]}
    ],
    "terminal": {"true_pos_m": [100, 100], "verifier": {"error_limit_m": 1.0}},
    "bidir": {"verifier_station": "S1"},
    "protocol": "bidirectional"
  })";
  const ReportRecord record = run_one(parse_scenario(text, "bd"), RunOptions{});
  CHECK(record.outcome == "bidir_accepted");
  REQUIRE(record.bidir.has_value());
  CHECK(record.bidir->bound_m ==
        doctest::Approx(std::sqrt(2.0) * 100.0).epsilon(1e-5));
}

TEST_CASE("compare protocol requires the bidir section") {
  std::string text = minimal_scenario();
  text.replace(text.find("\"unidirectional\""), 16, "\"compare\"");
  CHECK(field_path_of(text) == "bidir");
}

}  // TEST_SUITE
