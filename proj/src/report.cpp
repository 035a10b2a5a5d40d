#include "rjch/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "rjch/hashing.hpp"

namespace rjch::report {

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string RunManifest::hash() const {
  nlohmann::ordered_json canonical;
  canonical["command"] = command;
  canonical["parameters"] = parameters;
  canonical["master_seed"] = master_seed;
  canonical["version"] = kArtifactVersion;
  const std::string text = canonical.dump();
  const Digest128 d = digest(0x6d616e6966657374ULL, text);
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(d.hi),
                static_cast<unsigned long long>(d.lo));
  return buf;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["parameters"] = parameters;
  j["master_seed"] = master_seed;
  j["version"] = kArtifactVersion;
  j["manifest_hash"] = hash();
  j["outputs"] = outputs;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  return j.dump(2) + "\n";
}

std::string csv_with_manifest(const sim::SweepSummary& summary, const RunManifest& manifest) {
  return "# manifest=" + manifest.hash() + "\n" + summary.csv();
}

namespace {

nlohmann::ordered_json row_json(const sim::SummaryRow& row) {
  nlohmann::ordered_json j;
  j["strategy"] = to_string(row.strategy);
  j["n"] = row.objects;
  j["k"] = row.bins;
  j["epsilon"] = row.epsilon;
  j["virtual"] = row.virtual_copies;
  j["trials"] = row.trials;
  j["metric"] = row.metric;
  j["mean"] = row.mean;
  if (row.has_std) {
    j["std"] = row.std_dev;
  } else {
    j["std"] = nullptr;
  }
  return j;
}

}  // namespace

std::string summary_json(const sim::SweepSummary& summary, const RunManifest& manifest) {
  nlohmann::ordered_json j;
  j["manifest_hash"] = manifest.hash();
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : summary.rows) j["rows"].push_back(row_json(row));
  j["timing_rows"] = nlohmann::ordered_json::array();
  for (const auto& row : summary.timing_rows) j["timing_rows"].push_back(row_json(row));
  j["timing_note"] = "timing_rows are machine-dependent and excluded from determinism checks";
  return j.dump(2) + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace rjch::report
