// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "upsim/airsim.hpp"
#include "upsim/bidir.hpp"

namespace upsim::cli {

enum class Protocol { Unidirectional, Bidirectional, Compare };

const char* to_string(Protocol protocol);

/// A parsed scenario file: the simulated world plus which protocol(s) to
/// run and, when relevant, the bidirectional exchange parameters.
struct LoadedScenario {
  airsim::Scenario scenario;
  Protocol protocol = Protocol::Unidirectional;
  std::optional<bidir::BidirSpec> bidir;
  std::string source_path;
};

/// Parses and validates a scenario file (schema_version 1). Unknown fields
/// are rejected; every diagnostic names the offending field path.
/// Throws ValidationError.
LoadedScenario load_scenario(const std::filesystem::path& path);

/// Same, from an in-memory document (path used for diagnostics only).
LoadedScenario parse_scenario(const std::string& text, const std::string& path);

}  // namespace upsim::cli
