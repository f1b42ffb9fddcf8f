#include "crsphere/harness.hpp"
#include "crsphere/spectral.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using crs::harness::ExperimentReport;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFail = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Type { integer, real, integers, reals, text };

struct Param {
  std::string key;
  Type type;
  json fallback;
  std::string help;
};

struct Output {
  std::string report;
  std::vector<std::string> columns;
};

struct Plot {
  std::string report, x, y;
};

class Config;

struct Command {
  std::string name;
  std::string help;
  std::vector<Param> params;
  std::vector<Output> outputs;
  std::vector<Plot> plots;
  std::function<std::vector<ExperimentReport>(const Config&, std::ostream*)> run;
};

std::string type_name(Type t) {
  switch (t) {
    case Type::integer: return "integer";
    case Type::real: return "real";
    case Type::integers: return "list of integers";
    case Type::reals: return "list of reals";
    case Type::text: return "string";
  }
  return "";
}

std::string flag_of(const std::string& key) {
  std::string f = key;
  for (auto& c : f)
    if (c == '_') c = '-';
  return "--" + f;
}

double to_real(const std::string& s, const std::string& key) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw UsageError(key + ": not a number: '" + s + "'");
  return v;
}

long long to_integer(const std::string& s, const std::string& key) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw UsageError(key + ": not an integer: '" + s + "'");
  return v;
}

// Converts and type-checks a value from the config file.
json from_file(const Param& p, const json& v) {
  auto is_int = [](const json& x) { return x.is_number_integer() || (x.is_number_float() && x.get<double>() == std::floor(x.get<double>())); };
  switch (p.type) {
    case Type::integer:
      if (!is_int(v)) throw UsageError(p.key + ": expected an integer");
      return v.get<long long>();
    case Type::real:
      if (!v.is_number()) throw UsageError(p.key + ": expected a number");
      return v.get<double>();
    case Type::integers: {
      if (!v.is_array() || v.empty()) throw UsageError(p.key + ": expected a non-empty array of integers");
      json out = json::array();
      for (const auto& x : v) {
        if (!is_int(x)) throw UsageError(p.key + ": expected integers");
        out.push_back(x.get<long long>());
      }
      return out;
    }
    case Type::reals: {
      if (!v.is_array() || v.empty()) throw UsageError(p.key + ": expected a non-empty array of numbers");
      json out = json::array();
      for (const auto& x : v) {
        if (!x.is_number()) throw UsageError(p.key + ": expected numbers");
        out.push_back(x.get<double>());
      }
      return out;
    }
    case Type::text:
      if (!v.is_string()) throw UsageError(p.key + ": expected a string");
      return v;
  }
  return v;
}

json from_flag(const Param& p, const std::vector<std::string>& raw) {
  const bool list = p.type == Type::integers || p.type == Type::reals;
  if (!list && raw.size() != 1) throw UsageError(flag_of(p.key) + " takes one value");
  switch (p.type) {
    case Type::integer: return to_integer(raw[0], p.key);
    case Type::real: return to_real(raw[0], p.key);
    case Type::text: return raw[0];
    case Type::integers: {
      json out = json::array();
      for (const auto& s : raw) out.push_back(to_integer(s, p.key));
      return out;
    }
    case Type::reals: {
      json out = json::array();
      for (const auto& s : raw) out.push_back(to_real(s, p.key));
      return out;
    }
  }
  return {};
}

class Config {
 public:
  json values = json::object();

  int integer(const std::string& k) const { return static_cast<int>(values.at(k).get<long long>()); }
  double real(const std::string& k) const { return values.at(k).get<double>(); }
  std::string text(const std::string& k) const { return values.at(k).get<std::string>(); }
  std::vector<double> reals(const std::string& k) const { return values.at(k).get<std::vector<double>>(); }
  std::vector<int> integers(const std::string& k) const {
    std::vector<int> out;
    for (const auto& v : values.at(k)) out.push_back(static_cast<int>(v.get<long long>()));
    return out;
  }
};

const std::vector<double> kRGrid{25, 50, 100, 200, 400, 800, 1600};

Param n_param() { return {"n", Type::integer, 2, "complex dimension (sphere S^{2n-1})"}; }

fs::path cache_directory(const Config& cfg) {
  if (cfg.values.contains("cache_dir") && !cfg.text("cache_dir").empty()) return cfg.text("cache_dir");
  if (const char* env = std::getenv("CRSPHERE_CACHE_DIR"); env && *env) return env;
  return ".crsphere-cache";
}

crs::spectral::MultiplierSpec multiplier_from(const Config& c) {
  using crs::spectral::MultiplierKind;
  using crs::spectral::MultiplierSpec;
  switch (crs::spectral::parse_kind(c.text("kind"))) {
    case MultiplierKind::riesz: return MultiplierSpec::riesz(c.real("delta"), c.real("R"));
    case MultiplierKind::dyadic: return MultiplierSpec::dyadic(c.real("delta"), c.real("R"), c.integer("nu"));
    case MultiplierKind::dyadic0: return MultiplierSpec::dyadic0(c.real("delta"), c.real("R"));
    case MultiplierKind::remainder: return MultiplierSpec::remainder(c.real("delta"), c.real("R"));
    case MultiplierKind::heat: return MultiplierSpec::heat(c.real("t"));
    case MultiplierKind::wave: return MultiplierSpec::wave(c.real("t"), c.real("eps"));
    case MultiplierKind::hfun: return MultiplierSpec::hfun(c.integer("nu"), c.real("r"), c.real("delta"));
  }
  throw UsageError("unknown multiplier kind");
}

std::vector<Command> commands() {
  std::vector<Command> out;

  out.push_back({"spectrum",
                 "enumerate eigenvalues and dimensions in an open band",
                 {n_param(), {"band", Type::reals, json::array({0.5, 2.5}), "open interval (R1, R2) of eigenvalues"}},
                 {{"spectrum", {"l", "lp", "lambda", "mu", "q", "Q", "dimension"}}},
                 {{"spectrum", "lambda", "dimension"}},
                 [](const Config& c, std::ostream*) {
                   const auto band = c.reals("band");
                   if (band.size() != 2) throw UsageError("band takes two values");
                   ExperimentReport rep("spectrum", {"l", "lp", "lambda", "mu", "q", "Q", "dimension"});
                   for (const auto& i : crs::spectral::enumerate_band(band[0], band[1], c.integer("n")))
                     rep.add_row({double(i.l), double(i.lp), i.lambda, i.mu, double(i.q), double(i.Q), i.d});
                   return std::vector<ExperimentReport>{rep};
                 }});

  out.push_back({"kernel",
                 "build (or load from cache) a kernel profile and emit its grid",
                 {n_param(),
                  {"kind", Type::text, "riesz", "riesz | dyadic | dyadic0 | remainder | heat | wave | hfun"},
                  {"delta", Type::real, 2.0, "Riesz index"},
                  {"R", Type::real, 100.0, "Riesz parameter"},
                  {"nu", Type::integer, 1, "dyadic index"},
                  {"t", Type::real, 0.1, "time"},
                  {"eps", Type::real, 1e-3, "wave mollifier"},
                  {"r", Type::real, 10.0, "h radius"},
                  {"bandlimit", Type::integer, 0, "largest l + lp; 0 selects it from the multiplier"},
                  {"cache_dir", Type::text, "", "cache directory; empty uses $CRSPHERE_CACHE_DIR or ./.crsphere-cache"}},
                 {{"kernel", {"theta", "phi", "re_K", "im_K"}}},
                 {},
                 [](const Config& c, std::ostream* grid_out) {
                   const auto spec = multiplier_from(c);
                   const int n = c.integer("n");
                   int B = c.integer("bandlimit");
                   if (B < 0) throw UsageError("bandlimit must be >= 0");
                   if (B == 0) B = crs::spectral::auto_bandlimit(spec, n);
                   const fs::path dir = cache_directory(c);
                   const fs::path file = dir / crs::spectral::cache_key(spec, n, B);
                   std::string warning;
                   auto profile = crs::spectral::load_profile(file, &warning);
                   if (!warning.empty()) std::cerr << "cache: " << warning << '\n';
                   const bool hit = profile.has_value();
                   if (!hit) {
                     profile = crs::spectral::build_kernel(spec, n, B);
                     fs::create_directories(dir);
                     crs::spectral::store_profile(file, *profile);
                   }
                   ExperimentReport rep("kernel", {"theta", "phi", "re_K", "im_K"});
                   rep.set_provenance("multiplier", spec.describe());
                   rep.set_provenance("bandlimit", std::to_string(B));
                   rep.set_provenance("quadrature_degree", std::to_string(profile->rule.exact_degree));
                   rep.set_provenance("cache_key", file.filename().string());
                   rep.set_provenance("cache", hit ? "hit" : "miss");
                   if (grid_out) crs::spectral::write_profile_csv(*grid_out, *profile);
                   return std::vector<ExperimentReport>{rep};
                 }});

  out.push_back({"heat",
                 "heat kernel mass, positivity, Gaussian envelope fit and L2 bound",
                 {n_param(), {"t", Type::reals, json::array({0.01, 0.05, 0.2, 1.0}), "times"}},
                 {{"heat", {"t", "bandlimit", "mass", "min_over_sup", "diagonal", "ball", "l2_spectral", "l2_quadrature",
                            "l2_ratio", "l2_implied_bound"}}},
                 {{"heat", "t", "l2_ratio"}},
                 [](const Config& c, std::ostream*) {
                   return std::vector<ExperimentReport>{crs::harness::heat_suite(c.reals("t"), c.integer("n"))};
                 }});

  out.push_back({"wave",
                 "mass of the mollified wave kernel outside d <= t + 3 sqrt(eps)",
                 {n_param(),
                  {"t", Type::real, 0.5, "time"},
                  {"eps", Type::reals, json::array({1e-3, 1e-4}), "mollifier exponents"},
                  {"bandlimit", Type::integer, 0, "0 selects the bandlimit from the omitted tail"},
                  {"max_leakage", Type::real, 0.05, "leakage threshold"}},
                 {{"wave", {"t", "eps", "rho", "bandlimit", "leakage", "resolution", "outside", "total", "radial",
                            "converged"}}},
                 {{"wave", "eps", "leakage"}},
                 [](const Config& c, std::ostream*) {
                   return std::vector<ExperimentReport>{crs::harness::wave_suite(
                       c.real("t"), c.reals("eps"), c.integer("n"), c.integer("bandlimit"), c.real("max_leakage"))};
                 }});

  out.push_back({"riesz-norm",
                 "L1 operator norm of the Riesz means over an R grid, slope over the top decade",
                 {n_param(), {"delta", Type::reals, json::array({2.0}), "Riesz indices"},
                  {"R", Type::reals, kRGrid, "R grid"}},
                 {{"riesz-norm", {"R", "bandlimit", "blocks", "l1_norm", "previous_grid", "radial", "converged"}}},
                 {{"riesz-norm", "R", "l1_norm"}},
                 [](const Config& c, std::ostream*) {
                   std::vector<ExperimentReport> reps;
                   for (double d : c.reals("delta"))
                     reps.push_back(crs::harness::riesz_growth_scan(d, c.reals("R"), c.integer("n")));
                   return reps;
                 }});

  out.push_back({"converge",
                 "L^p error of the Riesz means applied to a test function",
                 {n_param(),
                  {"function", Type::text, "smooth", "smooth | band_limited | rough"},
                  {"p", Type::real, 1.0, "exponent p >= 1"},
                  {"delta", Type::real, 2.0, "Riesz index"},
                  {"R", Type::reals, json::array({25, 100, 400, 1600}), "R grid"},
                  {"seed", Type::integer, 1, "random seed"}},
                 {{"converge", {"R", "error", "previous_grid", "radial", "angular", "mc_error", "mc_halfwidth"}},
                  {"converge (band_limited)", {"R", "error", "quadrature_degree", "nodes", "mc_halfwidth"}}},
                 {{"converge", "R", "error"}},
                 [](const Config& c, std::ostream*) {
                   const int seed = c.integer("seed");
                   if (seed < 0) throw UsageError("seed must be >= 0");
                   return std::vector<ExperimentReport>{crs::harness::convergence_experiment(
                       crs::harness::parse_test_function(c.text("function")), c.real("p"), c.real("delta"),
                       c.reals("R"), c.integer("n"), static_cast<std::uint64_t>(seed))};
                 }});

  out.push_back({"verify-lemma",
                 "counting and restriction ratios; projector bound sweep",
                 {n_param(), {"R", Type::reals, json::array({100, 1000, 10000}), "R grid"},
                  {"max_total", Type::integer, 400, "largest l + lp in the projector sweep"}},
                 {{"verify-lemma", {"R", "nu", "band_lo", "band_hi", "counting_ratio", "restriction_norm",
                                    "restriction_ratio"}},
                  {"projector-bound", {"n", "total_degree", "max_ratio"}}},
                 {{"verify-lemma", "R", "counting_ratio"}, {"projector-bound", "total_degree", "max_ratio"}},
                 [](const Config& c, std::ostream*) {
                   return std::vector<ExperimentReport>{
                       crs::harness::lemma_suite(c.reals("R"), c.integer("n")),
                       crs::harness::projector_bound_sweep(c.integer("max_total"), {c.integer("n")})};
                 }});

  out.push_back({"partition-check",
                 "residual of the dyadic partition of the Riesz multiplier",
                 {n_param(), {"delta", Type::reals, json::array({0.5, 1.5, 2.0}), "Riesz indices"},
                  {"R", Type::reals, json::array({50, 400, 1600}), "R grid"},
                  {"margin", Type::real, 0.1, "eigenvalues up to R (1 + margin) are checked"}},
                 {{"partition", {"delta", "R", "bandlimit", "residual"}}},
                 {{"partition", "R", "residual"}},
                 [](const Config& c, std::ostream*) {
                   return std::vector<ExperimentReport>{crs::harness::partition_suite(
                       c.reals("delta"), c.reals("R"), c.integer("n"), c.real("margin"))};
                 }});

  out.push_back({"h-lemma",
                 "support, Fourier tail and sup of h_{nu,r}",
                 {{"nu", Type::integers, json::array({1, 2, 3, 4, 5}), "dyadic indices"},
                  {"r", Type::reals, json::array({10, 20, 40}), "radii"},
                  {"delta", Type::real, 2.0, "index"},
                  {"k", Type::integer, 3, "decay order"}},
                 {{"h-lemma", {"nu", "r", "support", "support_over_r2nu", "sup", "sup_times_2deltanu", "tail_slope",
                               "tail_points", "tail_bound_constant"}}},
                 {{"h-lemma", "nu", "sup_times_2deltanu"}},
                 [](const Config& c, std::ostream*) {
                   return std::vector<ExperimentReport>{
                       crs::harness::hlemma_suite(c.integers("nu"), c.reals("r"), c.real("delta"), c.integer("k"))};
                 }});

  out.push_back({"selftest",
                 "exact eigen-identity and projection suites",
                 {{"max_total", Type::integer, 6, "largest l + lp"}, {"seed", Type::integer, 1, "random seed"}},
                 {{"eigen-suite", {"n", "l", "lp", "lambda", "basis_size", "dimension", "exact"}},
                  {"projection-suite", {"n", "l", "lp", "reproduction_error", "idempotency_error", "orthogonality_error"}}},
                 {},
                 [](const Config& c, std::ostream*) {
                   const int L = c.integer("max_total");
                   if (L < 0 || L > 10) throw UsageError("max_total must be in [0, 10]");
                   return std::vector<ExperimentReport>{
                       crs::harness::eigen_suite(2, L), crs::harness::eigen_suite(3, L),
                       crs::harness::projection_suite(2, L, 20, static_cast<std::uint64_t>(c.integer("seed")))};
                 }});
  return out;
}

json schema_of(const Command& cmd) {
  json j;
  j["command"] = cmd.name;
  j["description"] = cmd.help;
  json params = json::array();
  for (const auto& p : cmd.params)
    params.push_back({{"key", p.key}, {"flag", flag_of(p.key)}, {"type", type_name(p.type)}, {"default", p.fallback},
                      {"description", p.help}});
  j["parameters"] = params;
  json outputs = json::array();
  for (const auto& o : cmd.outputs) outputs.push_back({{"report", o.report}, {"csv_columns", o.columns}});
  j["outputs"] = outputs;
  return j;
}

// Effective configuration: defaults, then the config file, then flags.
Config resolve(const Command& cmd, const std::string& config_file,
               const std::map<std::string, std::vector<std::string>>& flags, const std::map<std::string, CLI::Option*>& opts) {
  Config cfg;
  for (const auto& p : cmd.params) cfg.values[p.key] = p.fallback;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw UsageError("cannot read config file " + config_file);
    json file;
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError(std::string("config file: ") + e.what());
    }
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [key, value] : file.items()) {
      if (key == "experiment") {
        if (!value.is_string() || value.get<std::string>() != cmd.name)
          throw UsageError("config file is for experiment '" + value.dump() + "', not '" + cmd.name + "'");
        continue;
      }
      const auto it = std::find_if(cmd.params.begin(), cmd.params.end(), [&](const Param& p) { return p.key == key; });
      if (it == cmd.params.end()) throw UsageError("unknown key '" + key + "' for " + cmd.name);
      cfg.values[key] = from_file(*it, value);
    }
  }
  for (const auto& p : cmd.params)
    if (opts.at(p.key)->count() > 0) cfg.values[p.key] = from_flag(p, flags.at(p.key));
  return cfg;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  body(os);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral multipliers of the sublaplacian on the CR sphere"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CRSPHERE_VERSION);

  const auto cmds = commands();
  struct Slot {
    std::string config, out, json_path;
    bool schema = false;
    std::map<std::string, std::vector<std::string>> flags;
    std::map<std::string, CLI::Option*> opts;
  };
  std::vector<Slot> slots(cmds.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    auto* sub = app.add_subcommand(cmds[i].name, cmds[i].help);
    auto& slot = slots[i];
    sub->add_option("--config", slot.config, "JSON config file; flags override its values");
    sub->add_option("--out", slot.out, "directory for CSV, JSON and gnuplot files (default: CSV on stdout)");
    sub->add_option("--json", slot.json_path, "write the JSON summary to this file");
    sub->add_flag("--schema", slot.schema, "print parameters and CSV columns as JSON and exit");
    for (const auto& p : cmds[i].params) {
      auto* opt = sub->add_option(flag_of(p.key), slot.flags[p.key], p.help + " [" + type_name(p.type) + ", default " +
                                                                         p.fallback.dump() + "]");
      if (p.type != Type::integers && p.type != Type::reals) opt->expected(1);
      opt->allow_extra_args(p.type == Type::integers || p.type == Type::reals);
      slot.opts[p.key] = opt;
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  for (std::size_t i = 0; i < cmds.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const auto& cmd = cmds[i];
    const auto& slot = slots[i];
    if (slot.schema) {
      std::cout << schema_of(cmd).dump(2) << '\n';
      return kExitPass;
    }
    try {
      const Config cfg = resolve(cmd, slot.config, slot.flags, slot.opts);
      std::ostringstream grid;
      const bool to_dir = !slot.out.empty();
      auto reports = cmd.run(cfg, &grid);
      for (auto& r : reports) {
        crs::harness::stamp(r);
        r.set_provenance("command", cmd.name);
        r.set_provenance("config", cfg.values.dump());
      }

      if (to_dir) {
        const fs::path dir = slot.out;
        fs::create_directories(dir);
        for (const auto& r : reports) {
          const std::string base = r.id();
          if (cmd.name == "kernel")
            write_file(dir / (base + ".csv"), [&](std::ostream& os) { os << grid.str(); });
          else
            write_file(dir / (base + ".csv"), [&](std::ostream& os) { r.write_csv(os); });
          write_file(dir / (base + ".json"), [&](std::ostream& os) { r.write_json(os); });
        }
        for (const auto& p : cmd.plots)
          for (const auto& r : reports)
            if (r.id() == p.report && !r.rows().empty()) {
              std::string name = r.id();
              if (reports.size() > 1 && r.provenance().count("delta")) name += "_delta" + r.provenance().at("delta");
              write_file(dir / (name + "_" + p.x + "_" + p.y + ".dat"),
                         [&](std::ostream& os) { r.write_gnuplot(os, p.x, p.y); });
            }
      } else if (cmd.name == "kernel") {
        std::cout << grid.str();
      } else {
        for (const auto& r : reports) {
          if (reports.size() > 1) std::cout << "# " << r.id() << '\n';
          r.write_csv(std::cout);
        }
      }
      if (!slot.json_path.empty())
        write_file(slot.json_path, [&](std::ostream& os) {
          json all = json::array();
          for (const auto& r : reports) {
            std::ostringstream one;
            r.write_json(one);
            all.push_back(json::parse(one.str()));
          }
          os << (all.size() == 1 ? all[0] : all).dump(2) << '\n';
        });

      bool pass = true;
      for (const auto& r : reports) {
        for (const auto& c : r.checks()) {
          std::cerr << (c.relation == "report" ? "INFO " : c.pass ? "PASS " : "FAIL ") << r.id() << ": " << c.name << " (" << c.value << ")\n";
        }
        pass = pass && r.passed();
      }
      return pass ? kExitPass : kExitFail;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  return kExitUsage;
}
