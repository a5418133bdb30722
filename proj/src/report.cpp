// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "upsim/report.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "upsim/errors.hpp"

namespace upsim::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<double> to_std(const geom::Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

ordered_json steps_to_json(const ReportRecord::Steps& steps) {
  ordered_json j;
  j["expiry"] = steps.expiry;
  j["count"] = steps.count;
  j["timestamps"] = steps.timestamps;
  j["signatures"] = steps.signatures;
  j["solve"] = steps.solve;
  j["error_gate"] = steps.error_gate;
  j["containment"] = steps.containment;
  return j;
}

ReportRecord::Steps steps_from_log(const verifier::StepLog& log) {
  ReportRecord::Steps steps;
  steps.expiry = verifier::to_string(log.expiry);
  steps.count = verifier::to_string(log.count);
  steps.timestamps = verifier::to_string(log.timestamps);
  steps.signatures = verifier::to_string(log.signatures);
  steps.solve = verifier::to_string(log.solve);
  steps.error_gate = verifier::to_string(log.error_gate);
  steps.containment = verifier::to_string(log.containment);
  return steps;
}

void fill_from_trace(ReportRecord& record, const airsim::TraceReport& trace) {
  record.outcome = trace.outcome_code;
  if (trace.result.fix.has_value()) {
    record.position_m = to_std(trace.result.fix->position);
    record.error_range_m = trace.result.fix->error_range_m;
  }
  record.steps = steps_from_log(trace.steps);
  record.attacks.forged = trace.attacks.forged;
  record.attacks.replayed = trace.attacks.replayed;
  record.attacks.delayed = trace.attacks.delayed;
  record.attacks.relayed = trace.attacks.relayed;
  if (trace.attacks.target) record.attacks.target_m = to_std(*trace.attacks.target);
  record.attacks.success_near_target = trace.attack_success_near_target;
}

BidirSummary summarize(const bidir::BidirOutcome& outcome) {
  BidirSummary s;
  s.accepted = outcome.verdict.accepted();
  s.bound_m = outcome.bound_m;
  s.true_distance_m = outcome.true_distance_m;
  s.shortened = outcome.shortened;
  return s;
}

}  // namespace

bool ReportRecord::operator==(const ReportRecord& other) const {
  const auto bidir_eq = [](const std::optional<BidirSummary>& a,
                           const std::optional<BidirSummary>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->accepted == b->accepted && a->bound_m == b->bound_m &&
           a->true_distance_m == b->true_distance_m && a->shortened == b->shortened;
  };
  return record_version == other.record_version && scenario == other.scenario &&
         seed == other.seed && protocol == other.protocol && outcome == other.outcome &&
         position_m == other.position_m && error_range_m == other.error_range_m &&
         steps == other.steps && attacks == other.attacks &&
         bidir_eq(bidir, other.bidir) && runtime_ms == other.runtime_ms;
}

std::string emit_record(const ReportRecord& record, bool with_timings) {
  ordered_json j;
  j["record_version"] = record.record_version;
  j["scenario"] = record.scenario;
  j["seed"] = record.seed;
  j["protocol"] = record.protocol;
  j["outcome"] = record.outcome;
  j["position_m"] = record.position_m ? ordered_json(*record.position_m) : ordered_json(nullptr);
  j["error_range_m"] =
      record.error_range_m ? ordered_json(*record.error_range_m) : ordered_json(nullptr);
  j["steps"] = steps_to_json(record.steps);
  ordered_json attacks;
  attacks["forged"] = record.attacks.forged;
  attacks["replayed"] = record.attacks.replayed;
  attacks["delayed"] = record.attacks.delayed;
  attacks["relayed"] = record.attacks.relayed;
  attacks["target_m"] =
      record.attacks.target_m ? ordered_json(*record.attacks.target_m) : ordered_json(nullptr);
  attacks["success_near_target"] = record.attacks.success_near_target;
  j["attacks"] = attacks;
  if (record.bidir) {
    ordered_json b;
    b["accepted"] = record.bidir->accepted;
    b["bound_m"] = record.bidir->bound_m;
    b["true_distance_m"] = record.bidir->true_distance_m;
    b["shortened"] = record.bidir->shortened;
    j["bidir"] = b;
  }
  if (with_timings && record.runtime_ms) j["runtime_ms"] = *record.runtime_ms;
  return j.dump();
}

ReportRecord parse_record(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const ordered_json::parse_error& e) {
    throw ValidationError("", std::string("malformed record line: ") + e.what());
  }
  try {
    ReportRecord r;
    r.record_version = j.at("record_version").get<int>();
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.protocol = j.at("protocol").get<std::string>();
    r.outcome = j.at("outcome").get<std::string>();
    if (!j.at("position_m").is_null()) {
      r.position_m = j.at("position_m").get<std::vector<double>>();
    }
    if (!j.at("error_range_m").is_null()) {
      r.error_range_m = j.at("error_range_m").get<double>();
    }
    const auto& steps = j.at("steps");
    r.steps.expiry = steps.at("expiry").get<std::string>();
    r.steps.count = steps.at("count").get<std::string>();
    r.steps.timestamps = steps.at("timestamps").get<std::string>();
    r.steps.signatures = steps.at("signatures").get<std::string>();
    r.steps.solve = steps.at("solve").get<std::string>();
    r.steps.error_gate = steps.at("error_gate").get<std::string>();
    r.steps.containment = steps.at("containment").get<std::string>();
    const auto& attacks = j.at("attacks");
    r.attacks.forged = attacks.at("forged").get<int>();
    r.attacks.replayed = attacks.at("replayed").get<int>();
    r.attacks.delayed = attacks.at("delayed").get<int>();
    r.attacks.relayed = attacks.at("relayed").get<int>();
    if (!attacks.at("target_m").is_null()) {
      r.attacks.target_m = attacks.at("target_m").get<std::vector<double>>();
    }
    r.attacks.success_near_target = attacks.at("success_near_target").get<bool>();
    if (j.contains("bidir")) {
      BidirSummary b;
      b.accepted = j.at("bidir").at("accepted").get<bool>();
      b.bound_m = j.at("bidir").at("bound_m").get<double>();
      b.true_distance_m = j.at("bidir").at("true_distance_m").get<double>();
      b.shortened = j.at("bidir").at("shortened").get<bool>();
      r.bidir = b;
    }
    if (j.contains("runtime_ms")) r.runtime_ms = j.at("runtime_ms").get<double>();
    return r;
  } catch (const ordered_json::exception& e) {
    throw ValidationError("", std::string("malformed record: ") + e.what());
  }
}

std::string csv_header(bool with_timings) {
  std::string header =
      "scenario,seed,protocol,outcome,pos_x_m,pos_y_m,pos_z_m,error_range_m,"
      "step_expiry,step_count,step_timestamps,step_signatures,step_solve,"
      "step_error_gate,step_containment,forged,replayed,delayed,relayed,"
      "success_near_target,bidir_accepted,bidir_bound_m,bidir_true_distance_m,"
      "bidir_shortened";
  if (with_timings) header += ",runtime_ms";
  return header;
}

std::string csv_row(const ReportRecord& r, bool with_timings) {
  std::ostringstream out;
  const auto num = [](double v) {
    ordered_json j = v;  // shortest round-trip formatting, same as jsonl
    return j.dump();
  };
  out << r.scenario << ',' << r.seed << ',' << r.protocol << ',' << r.outcome << ',';
  for (int i = 0; i < 3; ++i) {
    if (r.position_m && i < static_cast<int>(r.position_m->size())) {
      out << num((*r.position_m)[static_cast<std::size_t>(i)]);
    }
    out << ',';
  }
  if (r.error_range_m) out << num(*r.error_range_m);
  out << ',' << r.steps.expiry << ',' << r.steps.count << ',' << r.steps.timestamps << ','
      << r.steps.signatures << ',' << r.steps.solve << ',' << r.steps.error_gate << ','
      << r.steps.containment << ',' << r.attacks.forged << ',' << r.attacks.replayed << ','
      << r.attacks.delayed << ',' << r.attacks.relayed << ','
      << (r.attacks.success_near_target ? "true" : "false") << ',';
  if (r.bidir) {
    out << (r.bidir->accepted ? "true" : "false") << ',' << num(r.bidir->bound_m) << ','
        << num(r.bidir->true_distance_m) << ',' << (r.bidir->shortened ? "true" : "false");
  } else {
    out << ",,,";
  }
  if (with_timings) {
    out << ',';
    if (r.runtime_ms) out << num(*r.runtime_ms);
  }
  return out.str();
}

ReportRecord run_one(const LoadedScenario& loaded, const RunOptions& options) {
  airsim::Scenario scenario = loaded.scenario;
  if (options.seed_override) scenario.seed = *options.seed_override;

  ReportRecord record;
  record.scenario = scenario.name;
  record.seed = scenario.seed;
  record.protocol = to_string(loaded.protocol);

  const auto start = std::chrono::steady_clock::now();
  switch (loaded.protocol) {
    case Protocol::Unidirectional: {
      fill_from_trace(record, airsim::run_scenario(scenario));
      break;
    }
    case Protocol::Bidirectional: {
      const auto outcome = bidir::run_bidir_side(scenario, *loaded.bidir);
      record.bidir = summarize(outcome);
      record.outcome = outcome.verdict.accepted() ? "bidir_accepted" : "bidir_rejected";
      break;
    }
    case Protocol::Compare: {
      const auto comparison = bidir::compare_protocols(scenario, *loaded.bidir);
      fill_from_trace(record, comparison.unidirectional);
      BidirSummary b;
      b.accepted = comparison.bidir.accepted();
      b.bound_m = comparison.bidir_bound_m;
      b.true_distance_m = comparison.true_distance_m;
      b.shortened = comparison.bidir_shortened;
      record.bidir = b;
      break;
    }
  }
  record.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  return record;
}

int run_command(const std::vector<std::filesystem::path>& paths, const RunOptions& options,
                std::ostream& out, std::ostream& diag) {
  // Load everything first: a corrupt file fails the batch before any run,
  // so no partial records are emitted for it.
  std::vector<LoadedScenario> loaded;
  bool load_failed = false;
  for (const auto& path : paths) {
    try {
      loaded.push_back(load_scenario(path));
    } catch (const ValidationError& e) {
      diag << path.string() << ": " << e.what() << '\n';
      load_failed = true;
    }
  }
  if (load_failed) return 2;

  std::vector<std::string> lines(loaded.size());
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < loaded.size(); ++i) {
      lines[i] = emit_record(run_one(loaded[i], options), options.timings);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= loaded.size()) return;
          lines[i] = emit_record(run_one(loaded[i], options), options.timings);
        }
      }));
    }
    for (auto& worker : workers) worker.get();
  }

  if (options.format == OutputFormat::Csv) out << csv_header(options.timings) << '\n';
  for (const auto& line : lines) {
    if (options.format == OutputFormat::Csv) {
      out << csv_row(parse_record(line), options.timings) << '\n';
    } else {
      out << line << '\n';
    }
  }
  out.flush();
  return out.good() ? 0 : 3;
}

int validate_command(const std::vector<std::filesystem::path>& paths, std::ostream& out) {
  bool failed = false;
  for (const auto& path : paths) {
    try {
      load_scenario(path);
      out << path.string() << ": ok\n";
    } catch (const ValidationError& e) {
      out << path.string() << ": " << e.what() << '\n';
      failed = true;
    }
  }
  return failed ? 2 : 0;
}

int report_command(const std::filesystem::path& jsonl_path, std::ostream& out) {
  std::ifstream in(jsonl_path);
  if (!in) {
    out << jsonl_path.string() << ": cannot open file\n";
    return 2;
  }
  std::map<std::string, int> outcomes;
  int total = 0;
  int attack_successes = 0;
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const ReportRecord record = parse_record(line);
      ++outcomes[record.outcome];
      ++total;
      if (record.attacks.success_near_target) ++attack_successes;
    }
  } catch (const ValidationError& e) {
    out << jsonl_path.string() << ": " << e.what() << '\n';
    return 2;
  }
  out << "records: " << total << '\n';
  for (const auto& [outcome, count] : outcomes) {
    out << std::setw(28) << std::left << outcome << ' ' << count << '\n';
  }
  out << "attack successes near target: " << attack_successes << '\n';
  return 0;
}

}  // namespace upsim::cli
