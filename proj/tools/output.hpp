#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pulsefield/diagnostics.hpp"
#include "pulsefield/meanfield.hpp"
#include "pulsefield/particles.hpp"
#include "pulsefield/verification.hpp"

namespace pulsefield::cli {

/// %.17g, so every double round-trips.
std::string format_double(double x);

/// Buffers rows and writes them in one go; throws Error if the file cannot be written.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<double>& values);
  void row_text(const std::vector<std::string>& cells);
  void save(const std::filesystem::path& path) const;
  std::string str() const { return buf_; }

 private:
  std::size_t width_;
  std::string buf_;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

nlohmann::json to_json(const TheoremReport& r);
nlohmann::json to_json(const CriterionResult& r);

/// NaN and infinities become null.
nlohmann::json number_or_null(double x);

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec);
void write_snapshot_csv(const std::filesystem::path& path, const Snapshot& snap, const PhaseResponse& k);
void write_profile_csv(const std::filesystem::path& path, const QuantileProfile& profile);
void write_spike_csv(const std::filesystem::path& path, const std::vector<SpikeEvent>& events);
void write_ensemble_csv(const std::filesystem::path& path, const std::vector<double>& sorted_phases);

}  // namespace pulsefield::cli
