#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "pulsefield/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pulsefield::cli;

namespace {

struct Sandbox {
  fs::path root;
  explicit Sandbox(const std::string& name) : root(fs::temp_directory_path() / ("pulsefield_cli_test_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Sandbox() { fs::remove_all(root); }

  fs::path write(const std::string& file, const json& doc) const {
    const auto p = root / file;
    std::ofstream(p) << doc.dump();
    return p;
  }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "pulsefield");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

const json kConstK = {{"name", "constK"}, {"phi_f", 1.0}, {"K", {{"form", "affine"}, {"k", 0.0}, {"b", 0.5}}}};

const json kSteepAffine = {{"name", "steep_affine"},
                    {"K", {{"form", "affine"}, {"k", 0.75}, {"b", 0.2}}},
                    {"initial", {{"preset", "beta_like"}, {"a", 3}, {"b", 3}, {"n_init", 1.0}}},
                    {"tau_end", 4.0},
                    {"reports", {"blowup_bounds", "moment_identity"}}};

}  // namespace

TEST_CASE("steady-state subcommand for constant K") {
  Sandbox box("steady");
  const auto cfg = box.write("constK.json", kConstK);
  const auto r = invoke({"--out", (box.root / "out").string(), "steady-state", "--config", cfg.string()});
  REQUIRE(r.code == kOk);
  const auto doc = read_json(box.root / "out" / "constK" / "steady_state.json");
  CHECK(doc.at("exists").get<bool>());
  CHECK(doc.at("N_star").get<double>() == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(doc.at("harmonic_integral").get<double>() == doctest::Approx(2.0));
  CHECK(fs::exists(box.root / "out" / "constK" / "profile.csv"));
  CHECK(slurp(box.root / "out" / "constK" / "profile.csv").rfind("eta,Q,Z\n", 0) == 0);
  const auto manifest = read_json(box.root / "out" / "constK" / "manifest.json");
  // Defaults are written back into the echoed config.
  CHECK(manifest.at("resolved_config").at("solver").at("M").get<int>() == 200);
  CHECK(manifest.at("resolved_config").at("mode").get<std::string>() == "original");

  json no_ss = kConstK;
  no_ss["K"]["b"] = 2.0;
  no_ss["name"] = "two";
  const auto r2 = invoke({"--out", (box.root / "out").string(), "steady-state", "--config",
                          box.write("two.json", no_ss).string()});
  CHECK(r2.code == kOk);
  const auto doc2 = read_json(box.root / "out" / "two" / "steady_state.json");
  CHECK_FALSE(doc2.at("exists").get<bool>());
  CHECK_FALSE(doc2.contains("N_star"));
}

TEST_CASE("simulate records the blow-up and is byte-reproducible") {
  Sandbox box("simulate");
  const auto cfg = box.write("steep_affine.json", kSteepAffine);
  const auto a = invoke({"--out", (box.root / "a").string(), "simulate", "--config", cfg.string()});
  const auto b = invoke({"--out", (box.root / "b").string(), "simulate", "--config", cfg.string()});
  REQUIRE(a.code == kOk);
  REQUIRE(b.code == kOk);
  const auto summary = read_json(box.root / "a" / "steep_affine" / "summary.json");
  CHECK(summary.at("outcome").get<std::string>() == "BlownUp");
  CHECK(summary.at("tau_star").is_number());
  const auto traj = slurp(box.root / "a" / "steep_affine" / "trajectory.csv");
  CHECK(traj.rfind("step,tau,t,n_tilde,N,minZ,maxZ,res_compat,res_boundary\n", 0) == 0);
  CHECK(traj == slurp(box.root / "b" / "steep_affine" / "trajectory.csv"));
  bool any_snapshot = false;
  for (const auto& entry : fs::directory_iterator(box.root / "a" / "steep_affine" / "snapshots")) {
    any_snapshot = true;
    CHECK(slurp(entry.path()).rfind("eta,Q,Z,H\n", 0) == 0);
    CHECK(slurp(entry.path()) == slurp(box.root / "b" / "steep_affine" / "snapshots" / entry.path().filename()));
  }
  CHECK(any_snapshot);
  const auto reports = read_json(box.root / "a" / "steep_affine" / "reports.json");
  CHECK(reports.size() == 3);
  CHECK(reports[0].at("passed").get<bool>());
  CHECK(fs::exists(box.root / "a" / "steep_affine" / "manifest.json"));
}

TEST_CASE("particles subcommand") {
  Sandbox box("particles");
  json doc = kConstK;
  doc["name"] = "ens";
  doc["initial"] = {{"preset", "steady_state"}};
  doc["particles"] = {{"count", 500}, {"seed", 7}, {"t_end", 2.0}, {"ensemble_every", 0.5}};
  const auto cfg = box.write("p.json", doc);
  const auto a = invoke({"--out", (box.root / "a").string(), "particles", "--config", cfg.string()});
  const auto b = invoke({"--out", (box.root / "b").string(), "particles", "--config", cfg.string()});
  REQUIRE(a.code == kOk);
  REQUIRE(b.code == kOk);
  const auto spikes = slurp(box.root / "a" / "ens" / "spikes.csv");
  CHECK(spikes.rfind("event_index,t,cascade_size\n", 0) == 0);
  CHECK(spikes == slurp(box.root / "b" / "ens" / "spikes.csv"));
  const auto summary = read_json(box.root / "a" / "ens" / "summary.json");
  CHECK(summary.at("t_final").get<double>() == doctest::Approx(2.0));
  CHECK(summary.at("ensembles").get<int>() == 5);
  CHECK(summary.at("firing_rate").get<double>() == doctest::Approx(2.0).epsilon(0.1));

  doc["particles"]["spike_budget"] = 10;
  doc["name"] = "budget";
  const auto c = invoke({"--out", (box.root / "c").string(), "particles", "--config",
                         box.write("q.json", doc).string()});
  REQUIRE(c.code == kOk);
  const auto s2 = read_json(box.root / "c" / "budget" / "summary.json");
  CHECK(s2.at("events").get<int>() == 10);
  CHECK(s2.at("stopped_by").get<std::string>() == "spike_budget");
}

TEST_CASE("config errors exit with 1 and name the key") {
  Sandbox box("errors");
  json bad = kConstK;
  bad["solver"] = {{"M", 100}, {"tolerance", 1e-9}};
  auto r = invoke({"--out", box.root.string(), "simulate", "--config", box.write("bad.json", bad).string()});
  CHECK(r.code == kConfigError);
  CHECK(r.err.find("solver.tolerance") != std::string::npos);

  json bad_form = kConstK;
  bad_form["K"]["form"] = "cubic";
  r = invoke({"--out", box.root.string(), "simulate", "--config", box.write("f.json", bad_form).string()});
  CHECK(r.code == kConfigError);
  CHECK(r.err.find("K.form") != std::string::npos);

  r = invoke({"--out", box.root.string(), "simulate", "--config", (box.root / "missing.json").string()});
  CHECK(r.code == kConfigError);
  r = invoke({"frobnicate"});
  CHECK(r.code == kConfigError);
  r = invoke({"simulate"});
  CHECK(r.code == kConfigError);
  json no_particles = kConstK;
  r = invoke({"--out", box.root.string(), "particles", "--config", box.write("np.json", no_particles).string()});
  CHECK(r.code == kConfigError);
}

TEST_CASE("invalid initial data is a config error; failures after parsing are run errors") {
  Sandbox box("runerr");
  json doc = kSteepAffine;
  doc["initial"]["n_init"] = 5.0;
  const auto r = invoke({"--out", box.root.string(), "simulate", "--config", box.write("x.json", doc).string()});
  CHECK(r.code == kConfigError);
  CHECK(r.err.find("initial") != std::string::npos);

  json incompatible = kSteepAffine;
  std::vector<double> q, z;
  for (int j = 0; j <= 8; ++j) {
    q.push_back(j / 8.0);
    z.push_back(1.0);
  }
  incompatible["initial"] = {{"preset", "explicit_table"}, {"q", q}, {"z", z}};
  incompatible["solver"] = {{"M", 8}};
  const auto r2 =
      invoke({"--out", box.root.string(), "simulate", "--config", box.write("y.json", incompatible).string()});
  CHECK(r2.code == kConfigError);
  CHECK(r2.err.find("compatib") != std::string::npos);

  const auto blocked = box.root / "blocked";
  std::ofstream(blocked) << "a file, not a directory";
  const auto r3 = invoke({"--out", blocked.string(), "steady-state", "--config",
                          box.write("k.json", kConstK).string()});
  CHECK(r3.code == kRunError);
  CHECK(r3.err.find("constK") != std::string::npos);
}

TEST_CASE("verify smoke suite") {
  Sandbox box("verify");
  const auto r = invoke({"--out", box.root.string(), "verify", "--suite", "smoke"});
  CHECK(r.code == kOk);
  const auto reports = read_json(box.root / "verify_smoke" / "reports.json");
  CHECK(reports.size() == 3);
  CHECK(fs::exists(box.root / "verify_smoke" / "manifest.json"));
  CHECK(invoke({"--out", box.root.string(), "verify", "--suite", "nope"}).code == kConfigError);
}

TEST_CASE("sweep expands the cartesian product") {
  json doc = kConstK;
  doc["name"] = "grid";
  doc["sweep"] = {{"solver.M", {50, 100}}, {"K.b", {0.4, 0.5, 0.6}}};
  const auto cells = expand_sweep(doc);
  REQUIRE(cells.size() == 6);
  // Axes are ordered by name and the last one varies fastest.
  CHECK(cells[0]["solver"]["M"] == 50);
  CHECK(cells[1]["solver"]["M"] == 100);
  CHECK(cells[1]["K"]["b"] == 0.4);
  CHECK(cells[0]["K"]["b"] == 0.4);
  CHECK(cells[5]["solver"]["M"] == 100);
  CHECK(cells[5]["K"]["b"] == 0.6);
  for (const auto& c : cells) CHECK_FALSE(c.contains("sweep"));

  Sandbox box("sweep");
  const auto cfg = box.write("grid.json", doc);
  const auto r = invoke({"--out", box.root.string(), "sweep", "--config", cfg.string(), "--jobs", "3", "--run",
                         "steady-state"});
  REQUIRE(r.code == kOk);
  for (int i = 0; i < 6; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "cell_%04d", i);
    CHECK(fs::exists(box.root / "grid" / name / "manifest.json"));
    CHECK(fs::exists(box.root / "grid" / name / "steady_state.json"));
  }
  const auto n_star = read_json(box.root / "grid" / "cell_0002" / "steady_state.json").at("N_star").get<double>();
  CHECK(n_star == doctest::Approx(2.0).epsilon(1e-8));

  json bad = doc;
  bad["sweep"] = {{"solver.M", json::array()}};
  CHECK(invoke({"--out", box.root.string(), "sweep", "--config", box.write("b.json", bad).string()}).code ==
        kConfigError);
}

TEST_CASE("output root precedence") {
  CHECK(output_root("x") == fs::path("x"));
  ::setenv("PULSEFIELD_OUT", "/tmp/pf_env_root", 1);
  CHECK(output_root("") == fs::path("/tmp/pf_env_root"));
  ::unsetenv("PULSEFIELD_OUT");
  CHECK(output_root("") == fs::path("pulsefield_out"));
}

TEST_CASE("dotted paths") {
  json doc = {{"a", {{"b", 1}}}};
  set_dotted(doc, "a.c.d", 3);
  CHECK(doc["a"]["c"]["d"] == 3);
  json scalar = {{"a", 1}};
  CHECK_THROWS_AS(set_dotted(scalar, "a.b", 2), pulsefield::ConfigError);
}
