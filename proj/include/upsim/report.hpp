// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "upsim/scenario_io.hpp"

namespace upsim::cli {

/// Summary of the bidirectional side of a run.
struct BidirSummary {
  bool accepted = false;
  double bound_m = 0.0;
  double true_distance_m = 0.0;
  bool shortened = false;
};

/// One line of machine-readable output per scenario run. The field set is
/// normative and versioned by record_version. Field order in the emitted
/// JSON is fixed, so identical runs emit identical bytes.
struct ReportRecord {
  int record_version = 1;
  std::string scenario;
  std::uint64_t seed = 0;
  std::string protocol;
  /// "accepted", a verifier failure reason, or bidir_accepted/bidir_rejected.
  std::string outcome;
  std::optional<std::vector<double>> position_m;
  std::optional<double> error_range_m;
  struct Steps {
    std::string expiry = "skipped";
    std::string count = "skipped";
    std::string timestamps = "skipped";
    std::string signatures = "skipped";
    std::string solve = "skipped";
    std::string error_gate = "skipped";
    std::string containment = "skipped";
    bool operator==(const Steps&) const = default;
  } steps;
  struct Attacks {
    int forged = 0;
    int replayed = 0;
    int delayed = 0;
    int relayed = 0;
    std::optional<std::vector<double>> target_m;
    bool success_near_target = false;
    bool operator==(const Attacks&) const = default;
  } attacks;
  std::optional<BidirSummary> bidir;
  /// Wall-clock runtime. Kept out of the stream unless timings are
  /// explicitly requested: the default stream must be byte-identical
  /// across reruns.
  std::optional<double> runtime_ms;

  bool operator==(const ReportRecord&) const;
};

/// One JSON line, no trailing newline. Deterministic field order.
std::string emit_record(const ReportRecord& record, bool with_timings = false);

/// Inverse of emit_record. Throws ValidationError on malformed lines.
ReportRecord parse_record(const std::string& line);

std::string csv_header(bool with_timings = false);
std::string csv_row(const ReportRecord& record, bool with_timings = false);

enum class OutputFormat { Jsonl, Csv };

struct RunOptions {
  std::optional<std::uint64_t> seed_override;  ///< wins over the file seed
  OutputFormat format = OutputFormat::Jsonl;
  int jobs = 1;
  bool timings = false;
};

/// Executes one loaded scenario and renders its record.
ReportRecord run_one(const LoadedScenario& loaded, const RunOptions& options);

/// Loads every path, runs every scenario, writes one record per line to
/// `out` in input order (regardless of parallelism), diagnostics to `diag`.
/// Exit code 0 when every run completed (attack success is data, not a
/// process failure), 2 when any file fails to load (nothing is run), 3 on
/// output I/O failure.
int run_command(const std::vector<std::filesystem::path>& paths, const RunOptions& options,
                std::ostream& out, std::ostream& diag);

/// Validates every file; prints one line per file. Exit 0/2.
int validate_command(const std::vector<std::filesystem::path>& paths, std::ostream& out);

/// Reads a jsonl report stream and prints a summary table. Exit 0, or 2 on
/// malformed input.
int report_command(const std::filesystem::path& jsonl_path, std::ostream& out);

}  // namespace upsim::cli
