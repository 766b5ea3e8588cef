// bridgelab: oracle evaluation, path simulation, verification suites and
// figure-data export for Wiener and OU bridges.

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bridgelab/mc_lab.hpp"
#include "bridgelab/ou_oracle.hpp"
#include "bridgelab/path_engine.hpp"
#include "bridgelab/wiener_oracle.hpp"

#ifndef BRIDGELAB_VERSION
#define BRIDGELAB_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using Json = nlohmann::json;
using namespace bridgelab;

namespace {

enum Exit { kOk = 0, kGateFailure = 1, kUsage = 2, kDomain = 3, kIo = 4 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Values of the shared flags. Options left unset on the command line may be
// filled from a --config file.
struct Params {
  std::string kind, process = "wiener", suite = "all", out;
  double q = 1.0, sigma = 1.0, a = 0.0, b = 0.0, T = 1.0, s = 0.25, t = 0.5;
  double b_tilde = 0.0, d_tilde = 0.0;
  std::optional<double> d;
  int steps = 1024, grid = 201, paths = 1;
  std::int64_t reps = 100000;
  std::uint64_t seed = 42;
  bool serial = false;
};

std::string fmt(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string term(double v) { return fmt(v, 15); }

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char h[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(h, sizeof h, "%02x", md[i]);
    hex += h;
  }
  return hex;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

void close_out(std::ofstream& os, const fs::path& p) {
  os.close();
  if (!os) throw IoError("write failed for " + p.string());
}

ou::TimeChange time_change(const Params& p) {
  ou::TimeChange tc{{p.q, p.sigma}, p.T};
  tc.validate();
  return tc;
}

paths::ModelSpec model_of(const Params& p) {
  paths::ModelSpec m;
  m.process = parse_process(p.process);
  m.a = p.a;
  m.b = p.b;
  m.ou = {p.q, p.sigma};
  m.validate();
  return m;
}

std::vector<Kind> kinds_of(const Params& p) {
  if (p.kind.empty()) return {Kind::AV, Kind::IR, Kind::ST};
  return {parse_kind(p.kind)};
}

// ---------------------------------------------------------------------------
// Oracle registry

using Rows = std::vector<std::pair<std::string, std::string>>;

struct OracleEntry {
  const char* id;
  const char* formula;
  const char* flags;
  std::function<Rows(const Params&)> eval;
};

// One row per requested kind; the label is dropped when a single kind was
// asked for.
Rows per_kind(const Params& p, const std::function<std::string(Kind)>& f) {
  Rows r;
  for (Kind k : kinds_of(p)) r.push_back({std::string(to_string(k)), f(k)});
  return r;
}

std::string law(const gauss::GaussianMoment& m) { return term(m.mean) + " " + term(m.variance); }

const std::vector<OracleEntry>& registry() {
  static const std::vector<OracleEntry> entries = {
      {"wiener.bridge_mean", "a + (b - a) t / T", "--a --b --T --t",
       [](const Params& p) {
         return Rows{{"", term(wiener::bridge_mean(p.t, {p.a, p.b, p.T, Kind::AV}))}};
       }},
      {"wiener.bridge_cov", "min(s,t) (T - max(s,t)) / T", "--s --t --T",
       [](const Params& p) { return Rows{{"", term(wiener::bridge_cov(p.s, p.t, p.T))}}; }},
      {"wiener.cov_with_process", "Cov(W_t^br, W_t)", "--kind --t --T",
       [](const Params& p) {
         return per_kind(p, [&](Kind k) { return term(wiener::cov_with_process(k, p.t, p.T)); });
       }},
      {"wiener.corr_with_process", "Corr(W_t^br, W_t): sqrt((T-t)/T) for AV and ST, "
                                   "sqrt(T(T-t))/t log(T/(T-t)) for IR",
       "--kind --t --T",
       [](const Params& p) {
         return per_kind(p, [&](Kind k) { return term(wiener::corr_with_process(k, p.t, p.T)); });
       }},
      {"wiener.deviation_law", "mean and variance of W_t - W_t^br", "--kind --t --a --b --T",
       [](const Params& p) {
         return per_kind(p, [&](Kind k) { return law(wiener::deviation_law(k, p.t, p.b - p.a, p.T)); });
       }},
      {"wiener.cond_deviation_law", "mean and variance of W_t - W_t^br given W_T = d",
       "--kind --t --a --b --d --T",
       [](const Params& p) {
         if (!p.d) throw UsageError("--d is required");
         return per_kind(p, [&](Kind k) {
           return law(wiener::cond_deviation_law(k, p.t, p.b - p.a, *p.d, p.T));
         });
       }},
      {"wiener.expected_abs_dev", "E|W_t - W_t^br|", "--kind --t --a --b --T",
       [](const Params& p) {
         return per_kind(p,
                         [&](Kind k) { return term(wiener::expected_abs_dev(k, p.t, p.b - p.a, p.T)); });
       }},
      {"wiener.ir_variance", "t (1 + (T-t)/T) + 2 (T-t) log((T-t)/T)", "--t --T",
       [](const Params& p) { return Rows{{"", term(wiener::ir_deviation_variance(p.t, p.T))}}; }},
      {"wiener.expected_quad_dev", "E int_0^T (W_t - W_t^br)^2 dt", "--kind --a --b --T",
       [](const Params& p) {
         return per_kind(p,
                         [&](Kind k) { return term(wiener::expected_quad_dev(k, p.b - p.a, p.T)); });
       }},
      {"wiener.expected_cond_quad_dev", "E( int_0^T (W_t - W_t^br)^2 dt | W_T = d )",
       "--kind --a --b --d --T",
       [](const Params& p) {
         if (!p.d) throw UsageError("--d is required");
         return per_kind(p, [&](Kind k) {
           return term(wiener::expected_cond_quad_dev(k, p.b - p.a, *p.d, p.T));
         });
       }},
      {"wiener.region", "ordering label A-D of the conditional quadratic deviations at (b~, d~)",
       "--b-tilde --d-tilde",
       [](const Params& p) {
         return Rows{{"", wiener::region_classify({p.b_tilde, p.d_tilde}).tag()}};
       }},
      {"wiener.region_residuals", "residuals of e_av > e_ir, e_av > e_st, e_st < e_ir",
       "--b-tilde --d-tilde",
       [](const Params& p) {
         const auto r = wiener::region_residuals({p.b_tilde, p.d_tilde});
         return Rows{{"av_over_ir", term(r.av_over_ir)},
                     {"av_over_st", term(r.av_over_st)},
                     {"st_under_ir", term(r.st_under_ir)}};
       }},
      {"ou.kappa", "(1 - e^{-2qt}) / (2q)", "--q --t",
       [](const Params& p) { return Rows{{"", term(ou::kappa(p.t, p.q))}}; }},
      {"ou.kappa_star", "kappa(t) kappa(T) / (kappa(T) - kappa(t))", "--q --t --T",
       [](const Params& p) { return Rows{{"", term(ou::kappa_star(p.t, time_change(p)))}}; }},
      {"ou.t_star", "time in (0, T) with kappa_star(t) = T", "--q --T",
       [](const Params& p) { return Rows{{"", term(ou::t_star(time_change(p)))}}; }},
      {"ou.process_variance", "sigma^2 e^{2qt} kappa(t)", "--q --sigma --t",
       [](const Params& p) {
         return Rows{{"", term(ou::process_variance(p.t, {p.q, p.sigma}))}};
       }},
      {"ou.bridge_mean", "mean of the OU bridge from a to b", "--q --a --b --t --T",
       [](const Params& p) {
         return Rows{{"", term(ou::ou_bridge_mean(p.t, p.a, p.b, time_change(p)))}};
       }},
      {"ou.bridge_cov", "covariance of the OU bridge at (s, t)", "--q --sigma --s --t --T",
       [](const Params& p) { return Rows{{"", term(ou::ou_bridge_cov(p.s, p.t, time_change(p)))}}; }},
      {"ou.cov_with_process", "Cov(U_t^br, U_t^0)", "--kind --q --sigma --t --T",
       [](const Params& p) {
         const auto tc = time_change(p);
         return per_kind(p, [&](Kind k) { return term(ou::ou_cov_with_process(k, p.t, tc)); });
       }},
      {"ou.deviation_law", "mean and variance of U_t^a - U_t^br", "--kind --q --sigma --a --b --t --T",
       [](const Params& p) {
         const auto tc = time_change(p);
         const double b = ou::reduced_end(p.a, p.b, tc);
         return per_kind(p, [&](Kind k) { return law(ou::ou_deviation_law(k, p.t, b, tc)); });
       }},
      {"ou.j_integral", "int_0^{qT} (1 - e^{-2u}) log(sinh(qT) / sinh(u)) du", "--q --T",
       [](const Params& p) { return Rows{{"", term(ou::j_integral(p.q * p.T).value)}}; }},
      {"ou.expected_quad_dev", "E int_0^T (U_t^a - U_t^br)^2 dt including the b^2 mean term",
       "--kind --q --sigma --a --b --T",
       [](const Params& p) {
         const auto tc = time_change(p);
         const double b = ou::reduced_end(p.a, p.b, tc);
         return per_kind(p, [&](Kind k) { return term(ou::ou_expected_quad_dev(k, b, tc)); });
       }},
      {"ou.expected_quad_dev_printed", "as ou.expected_quad_dev with the ST mean term omitted",
       "--kind --q --sigma --a --b --T",
       [](const Params& p) {
         const auto tc = time_change(p);
         const double b = ou::reduced_end(p.a, p.b, tc);
         return per_kind(p, [&](Kind k) { return term(ou::ou_expected_quad_dev_printed(k, b, tc)); });
       }},
  };
  return entries;
}

int cmd_oracle(const std::string& id, const Params& p, bool list) {
  if (list) {
    for (const auto& e : registry()) {
      std::cout << e.id << "\n    " << e.formula << "\n    flags: " << e.flags << '\n';
    }
    return kOk;
  }
  for (const auto& e : registry()) {
    if (id != e.id) continue;
    const Rows rows = e.eval(p);
    for (const auto& [label, value] : rows) {
      if (rows.size() > 1) std::cout << label << ' ';
      std::cout << value << '\n';
    }
    return kOk;
  }
  throw UsageError("unknown statistic id '" + id + "' (see oracle --list)");
}

// ---------------------------------------------------------------------------
// Simulation and export

void write_paths_file(const fs::path& out, const paths::ModelSpec& model, double T, int steps,
                      std::uint64_t seed, std::int64_t first, std::int64_t count,
                      std::optional<double> d, bool replicate_column,
                      std::vector<paths::PathBundle>* keep = nullptr) {
  const auto grid = paths::TimeGrid::uniform(T, steps);
  const auto plan = model.process == Process::Wiener ? paths::DriverPlan::wiener(grid)
                                                     : paths::DriverPlan::ou(grid, model.ou);
  paths::Simulator sim(plan, model);
  auto os = open_out(out);
  paths::write_paths_header(os, model.process, replicate_column);
  for (std::int64_t r = first; r < first + count; ++r) {
    const auto& pb = sim.run({seed, static_cast<std::uint64_t>(r)}, d);
    paths::write_paths_rows(os, pb, replicate_column ? r : -1);
    if (keep) keep->push_back(pb);
  }
  close_out(os, out);
}

double integrated_sq(const paths::PathBundle& pb, Kind k) {
  const auto& x = pb.deviation_of(k);
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    s += 0.5 * (pb.t[i] - pb.t[i - 1]) * (x[i] * x[i] + x[i - 1] * x[i - 1]);
  }
  return s;
}

fs::path with_suffix(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_filename(out.stem().string() + suffix + out.extension().string());
  return p;
}

int cmd_simulate(const Params& p, std::vector<fs::path>& outputs) {
  if (p.out.empty()) throw UsageError("--out is required");
  if (p.steps < 1) throw DomainError("--steps must be positive");
  if (p.reps < 1) throw DomainError("--reps must be positive");
  const auto model = model_of(p);
  if (p.d && model.process == Process::OU) {
    throw UnsupportedError("conditioning on the endpoint is not available for OU runs");
  }
  write_paths_file(p.out, model, p.T, p.steps, p.seed, 0, p.reps, p.d, true);
  outputs.push_back(p.out);
  std::cout << "wrote " << p.reps << " path(s) to " << p.out << '\n';
  return kOk;
}

int cmd_export(const std::string& fig, const Params& p, std::vector<fs::path>& outputs,
               Json& notes) {
  if (p.out.empty()) throw UsageError("--out is required");
  const fs::path out = p.out;
  if (fig == "fig1" || fig == "fig2") {
    paths::ModelSpec model;
    model.a = p.a;
    model.b = p.b;
    // fig2 pins the driver endpoint to b.
    const std::optional<double> d =
        fig == "fig2" ? std::optional<double>(p.d.value_or(p.b - p.a)) : std::nullopt;
    for (int k = 0; k < p.paths; ++k) {
      const fs::path f = p.paths > 1 ? with_suffix(out, "_" + std::to_string(k + 1)) : out;
      write_paths_file(f, model, p.T, p.steps, p.seed, k, 1, d, false);
      outputs.push_back(f);
    }
  } else if (fig == "fig3") {
    if (p.grid < 2) throw DomainError("--grid needs at least 2 points");
    auto os = open_out(out);
    os << "b_tilde,d_tilde,label,boundary,e_av,e_ir,e_st\n";
    for (int i = 0; i < p.grid; ++i) {
      for (int j = 0; j < p.grid; ++j) {
        const double bt = -10.0 + 20.0 * i / (p.grid - 1);
        const double dt = -10.0 + 20.0 * j / (p.grid - 1);
        const auto lbl = wiener::region_classify({bt, dt});
        os << fmt(bt, 17) << ',' << fmt(dt, 17) << ',' << lbl.ordering_tag() << ','
           << (lbl.boundary ? 1 : 0);
        for (Kind k : kAllKinds) os << ',' << fmt(wiener::expected_cond_quad_dev(k, bt, dt, 1.0), 17);
        os << '\n';
      }
    }
    close_out(os, out);
    outputs.push_back(out);
  } else if (fig == "fig4") {
    for (double q : {-1.0, 2.0}) {
      paths::ModelSpec model;
      model.process = Process::OU;
      model.a = p.a;
      model.b = p.b;
      model.ou = {q, p.sigma};
      const fs::path f = with_suffix(out, q < 0 ? "_qm1" : "_q2");
      std::vector<paths::PathBundle> kept;
      write_paths_file(f, model, p.T, p.steps, p.seed, 0, 1, std::nullopt, false, &kept);
      outputs.push_back(f);
      Json n;
      n["q"] = q;
      n["file"] = f.filename().string();
      n["driver_endpoint_minus_b"] = kept[0].w.back() - p.b;
      for (Kind k : kAllKinds) {
        n[std::string("integrated_sq_dev_") + std::string(to_string(k))] = integrated_sq(kept[0], k);
      }
      notes.push_back(n);
    }
  } else {
    throw UsageError("unknown figure '" + fig + "' (fig1, fig2, fig3, fig4)");
  }
  for (const auto& f : outputs) std::cout << "wrote " << f.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// Verification

int cmd_verify(const Params& p, std::vector<fs::path>& outputs) {
  mc::SuiteOptions opt;
  opt.run.reps = p.reps;
  opt.run.seed = p.seed;
  opt.run.mode = p.serial ? ExecMode::Serial : ExecMode::Parallel;
  opt.region_grid = p.grid;
  if (p.reps < 1000) throw DomainError("--reps must be at least 1000");
  const auto res = mc::verify_suite(p.suite, opt);
  const fs::path out = p.out.empty() ? fs::path("verify-" + p.suite + ".json") : fs::path(p.out);
  auto os = open_out(out);
  os << res.to_json(opt.run).dump(2) << '\n';
  close_out(os, out);
  outputs.push_back(out);
  std::size_t gates = res.reports.size() + res.checks.size();
  const auto failures = res.failures();
  std::cout << "suite " << p.suite << ": " << gates - failures.size() << "/" << gates
            << " gates passed, report " << out.string() << '\n';
  for (const auto& n : res.notes) std::cout << "note: " << n << '\n';
  for (const auto& f : failures) std::cout << "FAILED " << f << '\n';
  return failures.empty() ? kOk : kGateFailure;
}

// ---------------------------------------------------------------------------
// Flags, config files and manifests

void add_model_flags(CLI::App* c, Params& p, std::string& d_text) {
  c->add_option("--kind", p.kind, "av, ir or st (default: all kinds)")
      ->check(CLI::IsMember({"av", "ir", "st"}));
  c->add_option("--process", p.process, "wiener or ou")->check(CLI::IsMember({"wiener", "ou"}));
  c->add_option("--q", p.q, "OU rate");
  c->add_option("--sigma", p.sigma, "OU volatility");
  c->add_option("--a", p.a, "start level");
  c->add_option("--b", p.b, "end level");
  c->add_option("--d", d_text, "driver endpoint W_T to condition on");
  c->add_option("--T", p.T, "horizon");
  c->add_option("--s", p.s, "first time of a covariance");
  c->add_option("--t", p.t, "time");
  c->add_option("--b-tilde", p.b_tilde, "normalised end level b / sqrt(T)");
  c->add_option("--d-tilde", p.d_tilde, "normalised driver endpoint d / sqrt(T)");
}

void add_run_flags(CLI::App* c, Params& p) {
  c->add_option("--steps", p.steps, "uniform grid steps");
  c->add_option("--reps", p.reps, "replicates");
  c->add_option("--seed", p.seed, "master seed");
  c->add_option("--out", p.out, "output path");
  c->add_option("--grid", p.grid, "points per axis of the region grid");
}

// Fills options absent from the command line with values from a flat JSON
// object whose keys are flag names without dashes.
void apply_config(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  Json cfg;
  try {
    in >> cfg;
  } catch (const Json::parse_error& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config must be a JSON object");
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + it.key());
    } catch (const CLI::OptionNotFound&) {
      throw UsageError("config key '" + it.key() + "' is not a flag of " + sub->get_name());
    }
    if (opt->count() > 0) continue;
    std::string text;
    if (it->is_string()) {
      text = it->get<std::string>();
    } else if (it->is_number_integer() || it->is_number_unsigned()) {
      text = it->dump();
    } else if (it->is_number()) {
      text = fmt(it->get<double>(), 17);
    } else {
      throw UsageError("config key '" + it.key() + "' must be a string or number");
    }
    opt->clear();
    opt->add_result(text);
    opt->run_callback();
  }
}

Json config_snapshot(const Params& p) {
  Json j;
  j["kind"] = p.kind;
  j["process"] = p.process;
  j["q"] = p.q;
  j["sigma"] = p.sigma;
  j["a"] = p.a;
  j["b"] = p.b;
  j["d"] = p.d ? Json(*p.d) : Json(nullptr);
  j["T"] = p.T;
  j["s"] = p.s;
  j["t"] = p.t;
  j["steps"] = p.steps;
  j["reps"] = p.reps;
  j["seed"] = p.seed;
  j["grid"] = p.grid;
  j["paths"] = p.paths;
  j["suite"] = p.suite;
  j["out"] = p.out;
  return j;
}

void write_manifest(const fs::path& path, const std::vector<std::string>& argv, const Params& p,
                    const std::string& started, const std::vector<fs::path>& outputs,
                    const Json& notes) {
  Json m;
  m["argv"] = argv;
  m["command_line"] = [&] {
    std::string s;
    for (const auto& a : argv) s += (s.empty() ? "" : " ") + a;
    return s;
  }();
  m["config"] = config_snapshot(p);
  m["seed"] = p.seed;
  m["version"] = BRIDGELAB_VERSION;
  m["started"] = started;
  m["finished"] = utc_now();
  m["cwd"] = fs::current_path().string();
  Json files = Json::array();
  for (const auto& f : outputs) files.push_back({{"path", f.string()}, {"sha256", sha256_file(f)}});
  m["outputs"] = files;
  if (!notes.empty()) m["notes"] = notes;
  auto os = open_out(path);
  os << m.dump(2) << '\n';
  close_out(os, path);
}

int run(std::vector<std::string> args);

int cmd_replay(const std::string& manifest_path, bool check_only) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot read manifest " + manifest_path);
  Json m;
  try {
    in >> m;
  } catch (const Json::parse_error& e) {
    throw UsageError("manifest " + manifest_path + ": " + e.what());
  }
  std::vector<std::string> argv = m.at("argv").get<std::vector<std::string>>();
  // Replays never write a new manifest over the recorded one.
  std::vector<std::string> replay_args = {"bridgelab"};
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--manifest") {
      ++i;
      continue;
    }
    if (argv[i].rfind("--manifest=", 0) == 0) continue;
    replay_args.push_back(argv[i]);
  }
  const fs::path cwd = m.value("cwd", std::string());
  const fs::path here = fs::current_path();
  if (!cwd.empty() && fs::exists(cwd)) fs::current_path(cwd);
  int status = kOk;
  if (!check_only) status = run(replay_args);
  int mismatches = 0;
  for (const auto& f : m.at("outputs")) {
    const std::string path = f.at("path");
    const std::string want = f.at("sha256");
    const std::string got = fs::exists(path) ? sha256_file(path) : std::string("missing");
    const bool same = got == want;
    if (!same) ++mismatches;
    std::cout << (same ? "identical " : "DIFFERS   ") << path << '\n';
  }
  fs::current_path(here);
  if (status != kOk) return status;
  return mismatches == 0 ? kOk : kGateFailure;
}

int run(std::vector<std::string> args) {
  CLI::App app{"Wiener and OU bridge constructions: oracles, simulation, verification"};
  app.set_version_flag("--version", BRIDGELAB_VERSION);
  app.require_subcommand(1);
  Params p;
  std::string d_text, config, manifest, oracle_id, figure, replay_path;
  bool list = false, check_only = false;

  auto* oracle = app.add_subcommand("oracle", "evaluate a closed-form statistic");
  oracle->add_option("id", oracle_id, "statistic id");
  oracle->add_flag("--list", list, "list statistic ids with their formulas");
  add_model_flags(oracle, p, d_text);

  auto* simulate = app.add_subcommand("simulate", "write sample paths of the three bridges");
  add_model_flags(simulate, p, d_text);
  add_run_flags(simulate, p);
  simulate->add_option("--manifest", manifest, "write a run manifest");

  auto* verify = app.add_subcommand("verify", "run a Monte Carlo verification suite");
  verify->add_option("--suite", p.suite, "suite name")
      ->check(CLI::IsMember(std::vector<std::string>(std::begin(mc::kSuites), std::end(mc::kSuites))));
  add_run_flags(verify, p);
  verify->add_flag("--serial", p.serial, "use the serial reference loop");
  verify->add_option("--manifest", manifest, "write a run manifest");

  auto* exp = app.add_subcommand("export", "write figure data");
  exp->add_option("figure", figure, "fig1, fig2, fig3 or fig4")->required();
  add_model_flags(exp, p, d_text);
  add_run_flags(exp, p);
  exp->add_option("--paths", p.paths, "sample paths for fig1 and fig2");
  exp->add_option("--manifest", manifest, "write a run manifest");

  auto* man = app.add_subcommand("manifest", "work with run manifests");
  man->require_subcommand(1);
  auto* replay = man->add_subcommand("replay", "re-run a manifest and compare output digests");
  replay->add_option("manifest", replay_path, "manifest file")->required();
  replay->add_flag("--check", check_only, "only compare the digests of existing outputs");

  for (auto* c : {oracle, simulate, verify, exp}) {
    c->add_option("--config", config, "JSON file of flag values");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (!config.empty() && sub != man) {
    try {
      apply_config(sub, config);
    } catch (const CLI::ParseError& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
  }
  if (!d_text.empty()) {
    try {
      std::size_t used = 0;
      p.d = std::stod(d_text, &used);
      if (used != d_text.size()) throw std::invalid_argument(d_text);
    } catch (const std::logic_error&) {
      throw UsageError("--d expects a number");
    }
  }

  const std::string started = utc_now();
  std::vector<fs::path> outputs;
  Json notes = Json::array();
  int status = kOk;
  if (sub == oracle) {
    if (!list && oracle_id.empty()) throw UsageError("oracle needs a statistic id or --list");
    return cmd_oracle(oracle_id, p, list);
  } else if (sub == simulate) {
    status = cmd_simulate(p, outputs);
  } else if (sub == verify) {
    status = cmd_verify(p, outputs);
  } else if (sub == exp) {
    status = cmd_export(figure, p, outputs, notes);
  } else {
    return cmd_replay(replay_path, check_only);
  }
  if (!manifest.empty()) {
    write_manifest(manifest, std::vector<std::string>(args.begin() + 1, args.end()), p, started,
                   outputs, notes);
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    return run(args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const UnsupportedError& e) {
    std::cerr << "unsupported: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kDomain;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kDomain;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  }
}
