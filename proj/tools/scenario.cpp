#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pulsefield/errors.hpp"
#include "pulsefield/initial_data.hpp"
#include "pulsefield/steady_state.hpp"

namespace pulsefield::cli {

namespace {

using nlohmann::json;

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Reads keys from one JSON object, records the resolved values and rejects
// anything it was not asked for.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + label() + "' must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    used_.insert(key);
    if (!j_.contains(key)) {
      if (!fallback) throw ConfigError("missing required key '" + join(path_, key) + "'");
      out_[key] = *fallback;
      return *fallback;
    }
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError("key '" + join(path_, key) + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError("key '" + join(path_, key) + "' must be finite");
    out_[key] = v;
    return d;
  }

  std::uint64_t integer(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
    used_.insert(key);
    if (!j_.contains(key)) {
      if (!fallback) throw ConfigError("missing required key '" + join(path_, key) + "'");
      out_[key] = *fallback;
      return *fallback;
    }
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigError("key '" + join(path_, key) + "' must be a non-negative integer");
    }
    out_[key] = v;
    return v.get<std::uint64_t>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    used_.insert(key);
    if (!j_.contains(key)) {
      if (!fallback) throw ConfigError("missing required key '" + join(path_, key) + "'");
      out_[key] = *fallback;
      return *fallback;
    }
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError("key '" + join(path_, key) + "' must be a string");
    out_[key] = v;
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError("missing required key '" + join(path_, key) + "'");
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError("key '" + join(path_, key) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError("key '" + join(path_, key) + "' must be an array of numbers");
      out.push_back(x.get<double>());
    }
    out_[key] = v;
    return out;
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void put(const std::string& key, json value) { out_[key] = std::move(value); }

  std::string path(const std::string& key) const { return join(path_, key); }

  json finish() {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError("unknown key '" + join(path_, key) + "'");
    }
    return out_;
  }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
  json out_ = json::object();
};

ResponseForm parse_form(Block& b) {
  const std::string form = b.text("form");
  if (form == "affine") return Affine{b.number("k"), b.number("b")};
  if (form == "quadratic") return Quadratic{b.number("c0"), b.number("c1"), b.number("c2")};
  if (form == "exponential") return Exponential{b.number("a"), b.number("r")};
  if (form == "tabulated") return Tabulated{b.numbers("samples")};
  throw ConfigError("key 'K.form' must be one of affine, quadratic, exponential, tabulated (got '" + form + "')");
}

json resolve_initial(const json& j) {
  Block b(j, "initial");
  const std::string preset = b.text("preset");
  if (preset == "perturbed_steady") {
    b.number("epsilon");
    const auto mode = b.integer("mode_number", 1);
    if (mode < 1) throw ConfigError("key 'initial.mode_number' must be at least 1");
  } else if (preset == "beta_like") {
    b.number("a");
    b.number("b");
    b.number("n_init");
  } else if (preset == "explicit_table") {
    b.numbers("q");
    b.numbers("z");
  } else if (preset != "steady_state") {
    throw ConfigError(
        "key 'initial.preset' must be one of steady_state, perturbed_steady, beta_like, explicit_table (got '" +
        preset + "')");
  }
  return b.finish();
}

}  // namespace

const std::vector<std::string>& known_reports() {
  static const std::vector<std::string> names = {"n_bounds", "blowup_bounds", "moment_identity",
                                                 "integral_equation"};
  return names;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

Scenario parse_scenario(const nlohmann::json& doc) {
  Block root(doc, "");
  Scenario sc;
  sc.name = root.text("name", "scenario");
  if (sc.name.empty() || sc.name.find_first_of("/\\") != std::string::npos || sc.name == "." || sc.name == "..") {
    throw ConfigError("key 'name' must be a plain, non-empty directory name");
  }
  sc.phi_f = root.number("phi_f", 1.0);
  if (!(sc.phi_f > 0.0)) throw ConfigError("key 'phi_f' must be positive");

  if (!root.has("K")) throw ConfigError("missing required key 'K'");
  {
    Block kb(root.raw("K"), "K");
    auto form = parse_form(kb);
    try {
      sc.k = PhaseResponse(std::move(form), sc.phi_f);
    } catch (const InvalidResponse& e) {
      throw ConfigError(std::string("key 'K' does not define a valid phase response: ") + e.what());
    }
    root.put("K", kb.finish());
  }

  if (root.has("initial")) {
    sc.initial = resolve_initial(root.raw("initial"));
    root.put("initial", sc.initial);
  } else {
    sc.initial = json{{"preset", "steady_state"}};
    root.put("initial", sc.initial);
  }

  {
    const json doc_solver = root.has("solver") ? root.raw("solver") : json::object();
    Block sb(doc_solver, "solver");
    auto& s = sc.solver;
    s.cells = sb.integer("M", 200);
    s.newton_tol = sb.number("newton_tol", 1e-12);
    s.newton_max_iter = static_cast<int>(sb.integer("newton_max_iter", 100));
    s.blowup_eps = sb.number("blowup_eps", 1e-8);
    s.max_steps = sb.integer("max_steps", 1'000'000);
    const auto integrator = sb.text("inner_integrator", "rk4");
    if (integrator != "rk4") throw ConfigError("key 'solver.inner_integrator' must be 'rk4'");
    s.substeps = static_cast<int>(sb.integer("substeps", 1));
    s.snapshot_every = sb.integer("snapshot_every", 1);
    s.snapshot_capacity = sb.integer("snapshot_capacity", 0);
    try {
      s.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("block 'solver' is invalid: ") + e.what());
    }
    root.put("solver", sb.finish());
  }

  const auto mode = root.text("mode", "original");
  if (mode == "original") {
    sc.mode = RunMode::original;
  } else if (mode == "relaxed") {
    sc.mode = RunMode::relaxed;
  } else {
    throw ConfigError("key 'mode' must be 'original' or 'relaxed'");
  }
  sc.tau_end = root.number("tau_end", 1.0);
  if (!(sc.tau_end > 0.0)) throw ConfigError("key 'tau_end' must be positive");

  {
    const json doc_output = root.has("output") ? root.raw("output") : json::object();
    Block ob(doc_output, "output");
    sc.dump_every = ob.integer("dump_every", 0);
    root.put("output", ob.finish());
  }

  if (root.has("particles")) {
    Block pb(root.raw("particles"), "particles");
    ParticleSpec p;
    p.count = pb.integer("count");
    if (p.count < 1) throw ConfigError("key 'particles.count' must be at least 1");
    p.seed = pb.integer("seed", 0);
    p.t_end = pb.number("t_end");
    if (!(p.t_end > 0.0)) throw ConfigError("key 'particles.t_end' must be positive");
    if (pb.has("spike_budget")) p.spike_budget = pb.integer("spike_budget");
    const auto sampling = pb.text("sampling", "iid");
    if (sampling == "iid") {
      p.sampling = Sampling::iid;
    } else if (sampling == "stratified") {
      p.sampling = Sampling::stratified;
    } else {
      throw ConfigError("key 'particles.sampling' must be 'iid' or 'stratified'");
    }
    p.ensemble_every = pb.number("ensemble_every", 0.0);
    if (p.ensemble_every < 0.0) throw ConfigError("key 'particles.ensemble_every' must be non-negative");
    sc.particles = p;
    root.put("particles", pb.finish());
  }

  if (root.has("reports")) {
    const auto& r = root.raw("reports");
    if (!r.is_array()) throw ConfigError("key 'reports' must be an array of report names");
    for (const auto& item : r) {
      if (!item.is_string()) throw ConfigError("key 'reports' must be an array of report names");
      const auto name = item.get<std::string>();
      const auto& names = known_reports();
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw ConfigError("key 'reports' names an unknown report '" + name + "'");
      }
      sc.reports.push_back(name);
    }
    root.put("reports", r);
  } else {
    root.put("reports", json::array());
  }
  if (root.has("sweep")) root.put("sweep", root.raw("sweep"));

  sc.resolved = root.finish();
  return sc;
}

QuantileProfile build_initial_profile(const Scenario& sc) {
  const auto& init = sc.initial;
  const std::string preset = init.at("preset").get<std::string>();
  const std::size_t cells = sc.solver.cells;
  if (preset == "steady_state") return solve_steady_state(sc.k, cells).profile;
  if (preset == "perturbed_steady") {
    return perturbed_steady(sc.k, cells, init.at("epsilon").get<double>(), init.at("mode_number").get<int>());
  }
  if (preset == "beta_like") {
    return beta_like(sc.k, cells, init.at("a").get<double>(), init.at("b").get<double>(),
                     init.at("n_init").get<double>());
  }
  auto q = init.at("q").get<std::vector<double>>();
  auto z = init.at("z").get<std::vector<double>>();
  if (q.size() != cells + 1 || z.size() != cells + 1) {
    throw ConfigError("key 'initial.q' and 'initial.z' must each hold solver.M + 1 values");
  }
  return explicit_table(std::move(q), std::move(z));
}

void set_dotted(nlohmann::json& doc, const std::string& path, const nlohmann::json& value) {
  json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("empty sweep axis name");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError("sweep axis '" + path + "' does not address an object");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw ConfigError("sweep axis '" + path + "' does not address an object");
  (*node)[parts.back()] = value;
}

}  // namespace pulsefield::cli
