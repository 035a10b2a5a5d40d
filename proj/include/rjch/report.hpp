#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rjch/simulator.hpp"

namespace rjch::report {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Written alongside every output; the hash covers the deterministic subset
// (command, parameters, seed, version), so replaying a manifest reproduces
// outputs byte-identically while wall-clock fields stay out of the contract.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json parameters;
  std::uint64_t master_seed = 0;
  std::vector<std::string> outputs;
  std::string started_at;
  std::string finished_at;

  std::string hash() const;
  std::string to_json() const;
};

std::string timestamp_utc();

// CSV with a leading `# manifest=<hash>` comment; deterministic per manifest.
std::string csv_with_manifest(const sim::SweepSummary& summary, const RunManifest& manifest);

// Full summary as JSON, including the machine-dependent timing rows.
std::string summary_json(const sim::SweepSummary& summary, const RunManifest& manifest);

void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace rjch::report
