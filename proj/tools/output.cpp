#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "pulsefield/errors.hpp"

namespace pulsefield::cli {

using nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
  row_text(header);
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  row_text(cells);
}

void CsvWriter::row_text(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw InvalidArgument("csv row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += cells[i];
  }
  buf_ += '\n';
}

void CsvWriter::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << buf_;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

namespace {

json pairs(const std::vector<std::pair<std::string, double>>& kv) {
  json out = json::object();
  for (const auto& [key, value] : kv) out[key] = number_or_null(value);
  return out;
}

}  // namespace

json to_json(const TheoremReport& r) {
  return json{{"theorem", r.theorem}, {"scenario", r.scenario},   {"measured", pairs(r.measured)},
              {"bounds", pairs(r.bounds)}, {"passed", r.passed}, {"tolerance", number_or_null(r.tolerance)},
              {"note", r.note}};
}

json to_json(const CriterionResult& r) {
  json reports = json::array();
  for (const auto& rep : r.reports) reports.push_back(to_json(rep));
  return json{{"criterion", r.id},
              {"title", r.title},
              {"passed", r.passed},
              {"seconds", r.seconds},
              {"budget_seconds", r.budget_seconds},
              {"reports", reports}};
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec) {
  CsvWriter csv({"step", "tau", "t", "n_tilde", "N", "minZ", "maxZ", "res_compat", "res_boundary"});
  for (const auto& r : rec.rows) {
    csv.row_text({std::to_string(r.step), format_double(r.tau), format_double(r.t), format_double(r.n_tilde),
                  format_double(r.rate), format_double(r.min_z), format_double(r.max_z),
                  format_double(r.res_compat), format_double(r.res_boundary)});
  }
  csv.save(path);
}

void write_snapshot_csv(const std::filesystem::path& path, const Snapshot& snap, const PhaseResponse& k) {
  CsvWriter csv({"eta", "Q", "Z", "H"});
  const std::size_t m = snap.q.size() - 1;
  std::vector<double> kq(snap.q.size());
  k.values(snap.q, kq);
  for (std::size_t j = 0; j <= m; ++j) {
    const double eta = static_cast<double>(j) / static_cast<double>(m);
    csv.row({eta, snap.q[j], snap.z[j], snap.z[j] - kq[j]});
  }
  csv.save(path);
}

void write_profile_csv(const std::filesystem::path& path, const QuantileProfile& profile) {
  CsvWriter csv({"eta", "Q", "Z"});
  for (std::size_t j = 0; j < profile.q.size(); ++j) csv.row({profile.eta(j), profile.q[j], profile.z[j]});
  csv.save(path);
}

void write_spike_csv(const std::filesystem::path& path, const std::vector<SpikeEvent>& events) {
  CsvWriter csv({"event_index", "t", "cascade_size"});
  for (const auto& e : events) {
    csv.row_text({std::to_string(e.index), format_double(e.t), std::to_string(e.cascade_size)});
  }
  csv.save(path);
}

void write_ensemble_csv(const std::filesystem::path& path, const std::vector<double>& sorted_phases) {
  CsvWriter csv({"phase"});
  for (double p : sorted_phases) csv.row({p});
  csv.save(path);
}

}  // namespace pulsefield::cli
