// Acceptance run: one PASS/FAIL line per criterion. The Monte Carlo
// criteria read the report of `bridgelab verify --suite all`, which is run
// twice for the determinism criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bridgelab/ou_oracle.hpp"
#include "bridgelab/quadrature.hpp"
#include "bridgelab/scalar_gauss.hpp"
#include "bridgelab/wiener_oracle.hpp"

using namespace bridgelab;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

double rel(double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); }

std::string num(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", x);
  return b;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int sh(const std::string& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir + "' && '" BRIDGELAB_CLI "' " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

Outcome ac1() {
  Outcome o;
  const struct {
    double b, T, av, ir, st;
  } rows[] = {{0.0, 1.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0}, {2.0, 3.0, 7.0, 5.5, 7.0}};
  for (const auto& r : rows) {
    o.require(std::abs(wiener::expected_quad_dev(Kind::AV, r.b, r.T) - r.av) <= 1e-14, "AV");
    o.require(std::abs(wiener::expected_quad_dev(Kind::IR, r.b, r.T) - r.ir) <= 1e-14, "IR");
    o.require(std::abs(wiener::expected_quad_dev(Kind::ST, r.b, r.T) - r.st) <= 1e-14, "ST");
  }
  return o;
}

Outcome ac2() {
  Outcome o;
  for (double d : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    for (double T : {0.25, 0.5, 1.0, 2.0, 5.0}) {
      const std::string at = " d=" + num(d) + " T=" + num(T);
      o.require(std::abs(wiener::expected_cond_quad_dev(Kind::AV, d, d, T)) <= 1e-14, "AV" + at);
      o.require(std::abs(wiener::expected_cond_quad_dev(Kind::IR, d, d, T) -
                         (2.0 / 27.0 * d * d * T + T * T / 27.0)) <= 1e-14,
                "IR" + at);
      o.require(std::abs(wiener::expected_cond_quad_dev(Kind::ST, d, d, T) -
                         (d * d * T / 12.0 + T * T / 6.0)) <= 1e-14,
                "ST" + at);
    }
  }
  return o;
}

Outcome ac3() {
  Outcome o;
  double worst_w = 0.0, worst_ou = 0.0;
  for (Kind k : kAllKinds) {
    for (double b : {0.0, 1.0, -2.0}) {
      for (double T : {0.5, 1.0, 3.0}) {
        const auto r = quad::integrate(
            [&](double t) { return gauss::second_moment(wiener::deviation_law(k, t, b, T)); }, 0.0,
            T, {1e-13, 1e-12, 4000});
        worst_w = std::max(worst_w, rel(r.value, wiener::expected_quad_dev(k, b, T)));
      }
    }
  }
  o.require(worst_w <= 1e-9, "wiener rel " + num(worst_w));
  for (double q : {-5.0, -1.0, -0.5, 0.5, 1.0, 5.0}) {
    for (double b : {0.0, 1.0}) {
      for (double sigma : {1.0, 2.0}) {
        for (double T : {1.0, 2.0}) {
          const ou::TimeChange tc{{q, sigma}, T};
          for (Kind k : kAllKinds) {
            const auto r = quad::integrate(
                [&](double t) { return gauss::second_moment(ou::ou_deviation_law(k, t, b, tc)); },
                0.0, T, {1e-15, 1e-12, 8000});
            worst_ou = std::max(worst_ou, rel(r.value, ou::ou_expected_quad_dev(k, b, tc)));
          }
          const double full = ou::ou_expected_quad_dev(Kind::ST, b, tc);
          const double gap = full - ou::ou_expected_quad_dev_printed(Kind::ST, b, tc);
          const double mt = b * b / (4.0 * q) * (std::sinh(2.0 * q * T) - 2.0 * q * T) /
                            std::pow(std::sinh(q * T), 2);
          o.require(std::abs(gap - mt) <= 1e-15 * std::abs(full) + 1e-12 * mt,
                    "printed ST gap q=" + num(q) + " b=" + num(b));
        }
      }
    }
  }
  o.require(worst_ou <= 1e-8, "ou rel " + num(worst_ou));
  if (o.pass) o.detail = "max rel wiener " + num(worst_w) + ", ou " + num(worst_ou);
  return o;
}

Outcome ac9() {
  Outcome o;
  double worst[2] = {0.0, 0.0};
  for (double q : {1e-4, -1e-4, 1e-5, -1e-5}) {
    const int slot = std::abs(q) > 5e-5 ? 0 : 1;
    const double T = 1.0;
    const ou::TimeChange tc{{q, 1.0}, T};
    auto see = [&](double x, double y) { worst[slot] = std::max(worst[slot], rel(x, y)); };
    auto see_abs = [&](double x, double y) {
      worst[slot] = std::max(worst[slot], std::abs(x - y) / std::max(1.0, std::abs(y)));
    };
    see(ou::t_star(tc), 0.5);
    for (double t : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      see(ou::kappa(t, q), t);
      see(ou::kappa_star(t, tc), t * T / (T - t));
      see(ou::process_variance(t, tc.params), t);
      see(ou::ou_bridge_mean(t, 0.5, 2.0, tc), wiener::bridge_mean(t, {0.5, 2.0, T, Kind::AV}));
      see(ou::ou_bridge_cov(t, 0.6, tc), wiener::bridge_cov(t, 0.6, T));
      for (Kind k : kAllKinds) {
        see(ou::ou_cov_with_process(k, t, tc), wiener::cov_with_process(k, t, T));
        for (double b : {0.0, 1.0}) {
          const auto x = ou::ou_deviation_law(k, t, b, tc);
          const auto w = wiener::deviation_law(k, t, b, T);
          see(x.variance, w.variance);
          see_abs(x.mean, w.mean);
        }
      }
    }
    for (Kind k : kAllKinds) {
      for (double b : {0.0, 1.0, 2.0}) {
        see(ou::ou_expected_quad_dev(k, b, tc), wiener::expected_quad_dev(k, b, T));
      }
    }
  }
  o.require(worst[0] <= 1e-3, "q=1e-4 rel " + num(worst[0]));
  o.require(worst[1] <= 1e-4, "q=1e-5 rel " + num(worst[1]));
  if (o.pass) o.detail = "max rel " + num(worst[0]) + " at |q|=1e-4, " + num(worst[1]) + " at |q|=1e-5";
  return o;
}

// Report filters over the verify JSON.
bool param_is(const Json& r, const char* key, double v) {
  const auto& p = r["params"];
  return p.contains(key) && p[key].is_number() && p[key].get<double>() == v;
}

bool param_null(const Json& r, const char* key) {
  const auto& p = r["params"];
  return !p.contains(key) || p[key].is_null();
}

bool is(const Json& r, const char* stat, const char* process) {
  return r["statistic"] == stat && r["params"].value("process", "") == process;
}

const Json* check_named(const Json& rep, const std::string& name) {
  for (const auto& c : rep["checks"]) {
    if (c["name"] == name) return &c;
  }
  return nullptr;
}

void require_check(Outcome& o, const Json& rep, const std::string& name) {
  const Json* c = check_named(rep, name);
  o.require(c != nullptr, "missing check " + name);
  if (c) o.require((*c)["passed"].get<bool>(), "check " + name);
}

// Requires `want` matching reports, all passing.
void require_reports(Outcome& o, const Json& rep, std::size_t want, const std::string& what,
                     const std::function<bool(const Json&)>& match) {
  std::size_t n = 0;
  double worst = 0.0;
  for (const auto& r : rep["reports"]) {
    if (!match(r)) continue;
    ++n;
    if (!r["z"].is_null()) worst = std::max(worst, std::abs(r["z"].get<double>()));
    o.require(r["verdict"] == "pass", what + " " + r["statistic"].get<std::string>() + "[" +
                                          r["kind"].get<std::string>() + "] z=" +
                                          (r["z"].is_null() ? "null" : num(r["z"].get<double>())));
  }
  o.require(n == want, what + ": " + std::to_string(n) + " reports, expected " + std::to_string(want));
}

Outcome ac4(const Json& rep) {
  Outcome o;
  auto m = [](const char* stat) {
    return [stat](const Json& r) {
      return is(r, stat, "wiener") && param_is(r, "b", 0.0) && param_is(r, "T", 1.0) &&
             param_null(r, "d") && r["grid_n"] == 1024;
    };
  };
  require_reports(o, rep, 3, "integrated", m("integrated_quad_dev"));
  require_reports(o, rep, 3, "gaps", m("integrated_gap"));
  // AV and ST share their oracle here; the other two pairs must separate.
  for (const auto& r : rep["reports"]) {
    if (!m("integrated_gap")(r)) continue;
    const bool distinct = std::abs(r["oracle"].get<double>()) > 1e-9;
    o.require(r["mode"] == (distinct ? "separate" : "agree"),
              "gap " + r["kind"].get<std::string>() + " gated in the wrong mode");
  }
  return o;
}

Outcome ac5(const Json& rep) {
  Outcome o;
  for (double d : {0.0, 1.0, 2.0}) {
    require_reports(o, rep, 3, "d=" + num(d), [d](const Json& r) {
      return is(r, "integrated_quad_dev", "wiener") && param_is(r, "b", 0.0) &&
             param_is(r, "T", 1.0) && param_is(r, "d", d) && param_null(r, "b_tilde");
    });
  }
  require_check(o, rep, "conditional_av_exact_zero");
  return o;
}

Outcome ac6(const Json& rep) {
  Outcome o;
  auto at_grid = [](const Json& r) {
    if (r["t"].is_null()) return false;
    const double t = r["t"].get<double>();
    const double k = std::round(t * 10.0);
    return k >= 1 && k <= 9 && std::abs(t - k / 10.0) < 1e-12;
  };
  auto base = [&](const Json& r, const char* stat) {
    return is(r, stat, "wiener") && param_is(r, "b", 0.0) && param_is(r, "T", 1.0) &&
           param_null(r, "d") && at_grid(r);
  };
  require_reports(o, rep, 27, "corr", [&](const Json& r) { return base(r, "corr_process"); });
  // Gap gates exist where the analytic IR - AV gap exceeds 0.005.
  std::size_t want = 0;
  for (int k = 1; k <= 9; ++k) {
    const double t = k / 10.0;
    if (wiener::corr_with_process(Kind::IR, t, 1.0) - wiener::corr_with_process(Kind::AV, t, 1.0) >
        0.005) {
      ++want;
    }
  }
  require_reports(o, rep, want, "gap", [&](const Json& r) { return base(r, "corr_gap"); });
  return o;
}

Outcome ac7(const Json& rep) {
  Outcome o;
  for (double q : {2.0, -2.0}) {
    auto m = [q](const char* stat) {
      return [q, stat](const Json& r) {
        return is(r, stat, "ou") && param_is(r, "q", q) && param_is(r, "b", 0.0) &&
               param_is(r, "sigma", 1.0) && param_is(r, "T", 1.0) && r["statistic"] == stat;
      };
    };
    double est[3] = {0, 0, 0};
    std::size_t n = 0;
    for (const auto& r : rep["reports"]) {
      if (!m("integrated_quad_dev")(r)) continue;
      est[kind_index(parse_kind(r["kind"].get<std::string>()))] = r["estimate"].get<double>();
      ++n;
    }
    o.require(n == 3, "q=" + num(q) + " integrated reports");
    const double av = est[0], ir = est[1], st = est[2];
    if (q > 0) {
      o.require(ir < st && st < av, "q=2 order IR<ST<AV");
    } else {
      o.require(ir < av && av < st, "q=-2 order IR<AV<ST");
    }
    // Every pairwise gap, adjacent ones included, separates beyond the gate.
    std::size_t seps = 0;
    for (const auto& r : rep["reports"]) {
      if (!m("integrated_gap")(r)) continue;
      ++seps;
      o.require(r["mode"] == "separate" && r["verdict"] == "pass",
                "q=" + num(q) + " gap " + r["kind"].get<std::string>());
    }
    o.require(seps == 3, "q=" + num(q) + " gap reports");
  }
  return o;
}

Outcome ac8(const Json& rep) {
  Outcome o;
  for (double q : {1.0, -1.0}) {
    require_reports(o, rep, 3, "q=" + num(q), [q](const Json& r) {
      return is(r, "integrated_quad_dev", "ou") && param_is(r, "q", q) && param_is(r, "b", 0.0) &&
             param_is(r, "sigma", 1.0) && param_is(r, "T", 1.0);
    });
  }
  require_check(o, rep, "j_quadrature_vs_midpoint_q1");
  require_check(o, rep, "j_quadrature_vs_midpoint_qm1");
  return o;
}

Outcome ac10(const Json& rep) {
  Outcome o;
  require_check(o, rep, "region_grid_matches_direct_comparison");
  require_check(o, rep, "region_labels_all_present");
  require_check(o, rep, "region_d_needs_large_b");
  int spots = 0;
  for (const auto& c : rep["checks"]) {
    if (c["name"].get<std::string>().rfind("region_mc(", 0) != 0) continue;
    ++spots;
    o.require(c["passed"].get<bool>(), "spot " + c["name"].get<std::string>());
  }
  o.require(spots == 6, "six spot checks");
  return o;
}

Outcome ac11(const Json& rep) {
  Outcome o;
  for (const char* c : {"wiener_bridge_variance_decay", "ou_bridge_variance_decay",
                        "wiener_ir_endpoint_concentration", "ou_ir_endpoint_concentration"}) {
    require_check(o, rep, c);
  }
  return o;
}

Outcome ac12(const fs::path& dir, const std::string& first, const std::string& second) {
  Outcome o;
  o.require(!first.empty() && first == second, "verify reports differ between runs");
  const std::string d = dir.string();
  o.require(sh(d, "export fig1 --steps 256 --seed 7 --paths 3 --out fig1.csv --manifest m1.json") == 0,
            "fig1 export");
  o.require(sh(d, "export fig3 --grid 201 --out fig3.csv --manifest m3.json") == 0, "fig3 export");
  o.require(sh(d, "export fig4 --steps 256 --seed 7 --out fig4.csv --manifest m4.json") == 0,
            "fig4 export");
  for (const char* m : {"m1.json", "m3.json", "m4.json"}) {
    const auto man = Json::parse(slurp(dir / m));
    std::vector<std::string> before;
    for (const auto& f : man["outputs"]) {
      before.push_back(slurp(dir / f["path"].get<std::string>()));
      fs::remove(dir / f["path"].get<std::string>());
    }
    o.require(sh(d, std::string("manifest replay ") + m) == 0, std::string("replay ") + m);
    std::size_t i = 0;
    for (const auto& f : man["outputs"]) {
      o.require(slurp(dir / f["path"].get<std::string>()) == before[i++],
                "replayed " + f["path"].get<std::string>() + " differs");
    }
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  long reps = 100000;
  if (argc > 1) reps = std::atol(argv[1]);
  const fs::path dir = fs::temp_directory_path() / "bridgelab_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::vector<std::pair<std::string, Outcome>> results;
  auto record = [&](const std::string& id, Outcome o) {
    std::cout << (o.pass ? "PASS " : "FAIL ") << id;
    if (!o.detail.empty()) std::cout << "  " << o.detail;
    std::cout << std::endl;
    results.emplace_back(id, std::move(o));
  };

  record("AC1", ac1());
  record("AC2", ac2());
  record("AC3", ac3());

  const std::string args = "verify --suite all --seed 42 --reps " + std::to_string(reps);
  auto t0 = std::chrono::steady_clock::now();
  const int rc1 = sh(dir.string(), args + " --out all_1.json");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string first = slurp(dir / "all_1.json");
  Json rep;
  try {
    rep = Json::parse(first);
  } catch (const std::exception& e) {
    std::cout << "verify produced no report (exit " << rc1 << "): " << e.what() << std::endl;
    return 1;
  }
  std::cout << "verify --suite all: exit " << rc1 << ", " << num(secs) << " s" << std::endl;

  record("AC4", ac4(rep));
  record("AC5", ac5(rep));
  record("AC6", ac6(rep));
  record("AC7", ac7(rep));
  record("AC8", ac8(rep));
  record("AC9", ac9());
  record("AC10", ac10(rep));
  record("AC11", ac11(rep));

  sh(dir.string(), args + " --out all_2.json");
  record("AC12", ac12(dir, first, slurp(dir / "all_2.json")));

  int failed = 0;
  for (const auto& [id, o] : results) failed += o.pass ? 0 : 1;
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  fs::remove_all(dir);
  return failed == 0 ? 0 : 1;
}
