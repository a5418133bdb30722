// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "upsim/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{"upsim: scenario-driven simulator for broadcast-based secure positioning"};
  app.require_subcommand(1);

  std::vector<std::string> run_paths;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string format = "jsonl";
  std::string out_path;
  int jobs = 1;
  bool timings = false;

  auto* run = app.add_subcommand("run", "execute scenarios and emit one record per run");
  run->add_option("files", run_paths, "scenario files")->required()->expected(-1);
  run->add_option("--seed", seed, "override every file's seed")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--format", format, "jsonl or csv")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  run->add_option("--out", out_path, "output path (default: stdout)");
  run->add_option("--jobs", jobs, "parallel scenario runs")->check(CLI::PositiveNumber);
  run->add_flag("--timings", timings, "include wall-clock runtime in records");

  std::vector<std::string> validate_paths;
  auto* validate = app.add_subcommand("validate", "check scenario files");
  validate->add_option("files", validate_paths, "scenario files")->required()->expected(-1);

  std::string report_path;
  bool summary = false;
  auto* report = app.add_subcommand("report", "summarize a jsonl report stream");
  report->add_option("file", report_path, "jsonl report file")->required();
  report->add_flag("--summary", summary, "print the summary table");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    upsim::cli::RunOptions options;
    if (seed_set) options.seed_override = seed;
    options.format = format == "csv" ? upsim::cli::OutputFormat::Csv
                                     : upsim::cli::OutputFormat::Jsonl;
    options.jobs = jobs;
    options.timings = timings;

    std::vector<std::filesystem::path> paths(run_paths.begin(), run_paths.end());
    if (!out_path.empty()) {
      std::ofstream out(out_path);
      if (!out) {
        std::cerr << out_path << ": cannot open for writing\n";
        return 3;
      }
      return upsim::cli::run_command(paths, options, out, std::cerr);
    }
    return upsim::cli::run_command(paths, options, std::cout, std::cerr);
  }
  if (validate->parsed()) {
    std::vector<std::filesystem::path> paths(validate_paths.begin(), validate_paths.end());
    return upsim::cli::validate_command(paths, std::cout);
  }
  return upsim::cli::report_command(report_path, std::cout);
}
