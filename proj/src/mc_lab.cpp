#include "bridgelab/mc_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "bridgelab/ou_oracle.hpp"
#include "bridgelab/scalar_gauss.hpp"

namespace bridgelab::mc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string kind_name(Kind k) { return std::string(to_string(k)); }

std::string pair_name(Kind x, Kind y) { return kind_name(x) + "-" + kind_name(y); }

// Distinct stream keys for the runs inside one suite.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (run + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double mean_of(const SumSet& s, std::size_t c) { return s.mean(c); }

// Unbiased variance from power sums.
double var_of(const SumSet& s, std::size_t cx, std::size_t cxx) {
  const double n = static_cast<double>(s.count());
  const double sx = s.sum(cx);
  return (s.sum(cxx) - sx * sx / n) / (n - 1.0);
}

double cov_of(const SumSet& s, std::size_t cx, std::size_t cy, std::size_t cxy) {
  const double n = static_cast<double>(s.count());
  return (s.sum(cxy) - s.sum(cx) * s.sum(cy) / n) / (n - 1.0);
}

// Standard error of a mean from power sums.
double mean_se(const SumSet& s, std::size_t cx, std::size_t cxx) {
  const double v = var_of(s, cx, cxx);
  return std::sqrt(std::max(0.0, v) / static_cast<double>(s.count()));
}

// Full-sample statistic with a batch-means standard error.
template <class Stat>
std::pair<double, double> batch_estimate(const BatchedSums& acc, const SumSet& total, Stat stat) {
  const int B = acc.batches();
  std::vector<double> vals;
  vals.reserve(B);
  for (int b = 0; b < B; ++b) {
    if (acc.batch(b).count() > 1) vals.push_back(stat(acc.batch(b)));
  }
  double se = 0.0;
  if (vals.size() > 1) {
    ExactSum s;
    for (double v : vals) s.add(v);
    const double m = s.value() / static_cast<double>(vals.size());
    ExactSum ss;
    for (double v : vals) ss.add((v - m) * (v - m));
    se = std::sqrt(ss.value() / (static_cast<double>(vals.size()) - 1.0) /
                   static_cast<double>(vals.size()));
  }
  return {stat(total), se};
}

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

paths::DriverPlan make_plan(const Scenario& sc, const paths::TimeGrid& grid) {
  return sc.model.process == Process::Wiener ? paths::DriverPlan::wiener(grid)
                                             : paths::DriverPlan::ou(grid, sc.model.ou);
}

ou::TimeChange time_change(const Scenario& sc) { return ou::TimeChange{sc.model.ou, sc.T}; }

// Oracle deviation law at t for the scenario; conditional laws for Wiener
// runs with d.
gauss::GaussianMoment deviation_oracle(const Scenario& sc, Kind k, double t) {
  const double b = sc.model.b - sc.model.a;
  if (sc.model.process == Process::Wiener) {
    if (sc.d) return wiener::cond_deviation_law(k, t, b, *sc.d, sc.T);
    return wiener::deviation_law(k, t, b, sc.T);
  }
  const auto tc = time_change(sc);
  return ou::ou_deviation_law(k, t, ou::reduced_end(sc.model.a, sc.model.b, tc), tc);
}

double abs_oracle(const gauss::GaussianMoment& m) {
  return m.variance > 0.0 ? gauss::folded_mean(m) : std::abs(m.mean);
}

EstimateReport base_report(const std::string& stat, const std::string& kind,
                           std::optional<double> t, const Scenario& sc, const RunConfig& cfg,
                           std::uint64_t seed, int grid_n) {
  EstimateReport r;
  r.statistic = stat;
  r.kind = kind;
  r.t = t;
  r.params = sc.to_json();
  r.replicates = cfg.reps;
  r.gate = cfg.gate;
  r.seed = seed;
  r.grid_n = grid_n;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

void Scenario::validate() const {
  model.validate();
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("horizon T must be positive");
  if (d && model.process == Process::OU) {
    throw UnsupportedError("conditioning on the endpoint is not available for OU runs");
  }
  if (d && !std::isfinite(*d)) throw DomainError("conditioning level must be finite");
}

Json Scenario::to_json() const {
  Json j;
  j["process"] = std::string(to_string(model.process));
  j["a"] = model.a;
  j["b"] = model.b;
  j["T"] = T;
  j["d"] = opt_json(d);
  if (model.process == Process::OU) {
    j["q"] = model.ou.q;
    j["sigma"] = model.ou.sigma;
  }
  return j;
}

void EstimateReport::judge() {
  if (!oracle) {
    verdict = "no-oracle";
    z.reset();
    return;
  }
  const double se = std_error > 0.0 ? std_error : kSeFloor * std::max(1.0, std::abs(*oracle));
  if (mode == GateMode::Agree) {
    z = (estimate - *oracle) / se;
    verdict = std::abs(*z) <= gate ? "pass" : "fail";
  } else {
    z = estimate / se;
    const bool same_sign = (estimate > 0.0) == (*oracle > 0.0);
    verdict = same_sign && std::abs(*z) > gate ? "pass" : "fail";
  }
}

Json EstimateReport::to_json() const {
  Json j;
  j["statistic"] = statistic;
  j["kind"] = kind;
  j["t"] = opt_json(t);
  j["params"] = params;
  j["estimate"] = finite_or_null(estimate);
  j["se"] = finite_or_null(std_error);
  j["reps"] = replicates;
  j["oracle"] = opt_json(oracle);
  j["z"] = opt_json(z);
  j["gate"] = gate;
  j["mode"] = mode == GateMode::Agree ? "agree" : "separate";
  j["verdict"] = verdict;
  j["seed"] = seed;
  j["grid_n"] = grid_n;
  if (bias) j["bias"] = *bias;
  if (raw_estimate) j["raw_estimate"] = *raw_estimate;
  if (!note.empty()) j["note"] = note;
  return j;
}

// ---------------------------------------------------------------------------

BatchedSums::BatchedSums(std::size_t width, int batches, std::int64_t n)
    : sets_(std::max(1, batches), SumSet(width)), n_(n) {}

void BatchedSums::add(std::int64_t rep, const std::vector<double>& row) {
  const auto B = static_cast<std::int64_t>(sets_.size());
  sets_[static_cast<std::size_t>(rep * B / n_)].add_row(row);
}

void BatchedSums::merge(const BatchedSums& other) {
  for (std::size_t b = 0; b < sets_.size(); ++b) sets_[b].merge(other.sets_[b]);
}

SumSet BatchedSums::total() const {
  SumSet t(sets_.front().width());
  for (const auto& s : sets_) t.merge(s);
  return t;
}

// ---------------------------------------------------------------------------

std::vector<EstimateReport> estimate_pointwise(const Scenario& sc, const PointwiseRequest& req,
                                               const RunConfig& cfg) {
  sc.validate();
  if (cfg.reps < 1000) throw DomainError("pointwise estimates need at least 1000 replicates");
  std::vector<double> cols = req.times;
  for (auto [s, t] : req.cov_pairs) {
    cols.push_back(s);
    cols.push_back(t);
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  for (double t : cols) {
    if (!(t > 0.0 && t < sc.T)) throw DomainError("pointwise times must lie strictly inside (0, T)");
  }
  std::vector<double> pts = {0.0};
  pts.insert(pts.end(), cols.begin(), cols.end());
  pts.push_back(sc.T);
  const auto grid = paths::TimeGrid::from_points(pts);
  const auto plan = make_plan(sc, grid);

  // Column layout per time: P, P^2, then per kind X, X^2, |X|, Y, Y^2, YP.
  constexpr std::size_t kPer = 2 + 3 * 6;
  auto col_of = [&](double t) {
    return static_cast<std::size_t>(std::lower_bound(cols.begin(), cols.end(), t) - cols.begin());
  };
  const std::size_t width = kPer * cols.size() + 3 * req.cov_pairs.size();
  auto base = [&](std::size_t i) { return kPer * i; };
  auto kcol = [&](std::size_t i, int j, int off) { return kPer * i + 2 + 6 * j + off; };
  auto pcol = [&](std::size_t p, int j) { return kPer * cols.size() + 3 * p + j; };

  struct Workspace {
    paths::Simulator sim;
    std::vector<double> row;
  };
  const std::uint64_t seed = cfg.seed;
  BatchedSums acc = reduce_replicates(
      cfg.reps, cfg.mode, [&] { return BatchedSums(width, cfg.batches, cfg.reps); },
      [&] { return Workspace{paths::Simulator(plan, sc.model), std::vector<double>(width)}; },
      [&](std::int64_t rep, Workspace& ws, BatchedSums& a) {
        const auto& pb = ws.sim.run({seed, static_cast<std::uint64_t>(rep)}, sc.d);
        auto& row = ws.row;
        for (std::size_t i = 0; i < cols.size(); ++i) {
          const std::size_t k = i + 1;  // grid index of cols[i]
          const double p = pb.process_path[k];
          row[base(i)] = p;
          row[base(i) + 1] = p * p;
          for (int j = 0; j < 3; ++j) {
            const double x = pb.deviation[j][k];
            const double y = pb.bridge[j][k];
            row[kcol(i, j, 0)] = x;
            row[kcol(i, j, 1)] = x * x;
            row[kcol(i, j, 2)] = std::abs(x);
            row[kcol(i, j, 3)] = y;
            row[kcol(i, j, 4)] = y * y;
            row[kcol(i, j, 5)] = y * p;
          }
        }
        for (std::size_t pi = 0; pi < req.cov_pairs.size(); ++pi) {
          const std::size_t ks = col_of(req.cov_pairs[pi].first) + 1;
          const std::size_t kt = col_of(req.cov_pairs[pi].second) + 1;
          for (int j = 0; j < 3; ++j) row[pcol(pi, j)] = pb.bridge[j][ks] * pb.bridge[j][kt];
        }
        a.add(rep, row);
      });
  const SumSet total = acc.total();

  const bool wiener = sc.model.process == Process::Wiener;
  const bool conditional = sc.d.has_value();
  const int grid_n = grid.n_steps();
  std::vector<EstimateReport> out;
  auto push = [&](EstimateReport r) {
    r.judge();
    out.push_back(std::move(r));
  };

  for (double t : req.times) {
    const std::size_t i = col_of(t);
    std::array<double, 3> corr_est{}, var_est{};
    for (Kind k : kAllKinds) {
      const int j = kind_index(k);
      const auto law = deviation_oracle(sc, k, t);
      {
        auto r = base_report("dev_mean", kind_name(k), t, sc, cfg, seed, grid_n);
        r.estimate = mean_of(total, kcol(i, j, 0));
        r.std_error = mean_se(total, kcol(i, j, 0), kcol(i, j, 1));
        r.oracle = law.mean;
        push(r);
      }
      {
        auto r = base_report("dev_var", kind_name(k), t, sc, cfg, seed, grid_n);
        std::tie(r.estimate, r.std_error) = batch_estimate(acc, total, [&](const SumSet& s) {
          return var_of(s, kcol(i, j, 0), kcol(i, j, 1));
        });
        r.oracle = law.variance;
        var_est[j] = r.estimate;
        push(r);
      }
      {
        auto r = base_report("abs_dev", kind_name(k), t, sc, cfg, seed, grid_n);
        r.estimate = mean_of(total, kcol(i, j, 2));
        r.std_error = mean_se(total, kcol(i, j, 2), kcol(i, j, 1));
        r.oracle = abs_oracle(law);
        push(r);
      }
      if (conditional) continue;
      {
        auto r = base_report("bridge_mean", kind_name(k), t, sc, cfg, seed, grid_n);
        r.estimate = mean_of(total, kcol(i, j, 3));
        r.std_error = mean_se(total, kcol(i, j, 3), kcol(i, j, 4));
        r.oracle = wiener ? wiener::bridge_mean(t, {sc.model.a, sc.model.b, sc.T, k})
                          : ou::ou_bridge_mean(t, sc.model.a, sc.model.b, time_change(sc));
        push(r);
      }
      const double bvar = wiener ? wiener::bridge_cov(t, t, sc.T)
                                 : ou::ou_bridge_cov(t, t, time_change(sc));
      const double pvar = wiener ? t : ou::process_variance(t, sc.model.ou);
      const double cov_oracle = wiener ? wiener::cov_with_process(k, t, sc.T)
                                       : ou::ou_cov_with_process(k, t, time_change(sc));
      {
        auto r = base_report("cov_process", kind_name(k), t, sc, cfg, seed, grid_n);
        std::tie(r.estimate, r.std_error) = batch_estimate(acc, total, [&](const SumSet& s) {
          return cov_of(s, kcol(i, j, 3), base(i), kcol(i, j, 5));
        });
        r.oracle = cov_oracle;
        push(r);
      }
      {
        auto r = base_report("corr_process", kind_name(k), t, sc, cfg, seed, grid_n);
        std::tie(r.estimate, r.std_error) = batch_estimate(acc, total, [&](const SumSet& s) {
          return cov_of(s, kcol(i, j, 3), base(i), kcol(i, j, 5)) /
                 std::sqrt(var_of(s, kcol(i, j, 3), kcol(i, j, 4)) * var_of(s, base(i), base(i) + 1));
        });
        r.oracle = wiener ? wiener::corr_with_process(k, t, sc.T)
                          : cov_oracle / std::sqrt(bvar * pvar);
        corr_est[j] = r.estimate;
        push(r);
      }
    }
    if (req.corr_gaps && !conditional) {
      const double gap = wiener ? wiener::corr_with_process(Kind::IR, t, sc.T) -
                                      wiener::corr_with_process(Kind::AV, t, sc.T)
                                : kNaN;
      if (gap > 0.005) {
        auto r = base_report("corr_gap", pair_name(Kind::IR, Kind::AV), t, sc, cfg, seed, grid_n);
        const int ji = kind_index(Kind::IR), ja = kind_index(Kind::AV);
        std::tie(r.estimate, r.std_error) = batch_estimate(acc, total, [&](const SumSet& s) {
          auto corr = [&](int j) {
            return cov_of(s, kcol(i, j, 3), base(i), kcol(i, j, 5)) /
                   std::sqrt(var_of(s, kcol(i, j, 3), kcol(i, j, 4)) *
                             var_of(s, base(i), base(i) + 1));
          };
          return corr(ji) - corr(ja);
        });
        r.oracle = gap;
        r.mode = GateMode::Separate;
        push(r);
      }
    }
    if (req.variance_order) {
      std::array<Kind, 3> order = {Kind::AV, Kind::IR, Kind::ST};
      std::array<double, 3> ov{};
      for (Kind k : kAllKinds) ov[kind_index(k)] = deviation_oracle(sc, k, t).variance;
      std::sort(order.begin(), order.end(),
                [&](Kind x, Kind y) { return ov[kind_index(x)] < ov[kind_index(y)]; });
      for (int m = 0; m < 2; ++m) {
        const Kind lo = order[m], hi = order[m + 1];
        auto r = base_report("dev_var_gap", pair_name(hi, lo), t, sc, cfg, seed, grid_n);
        const int jh = kind_index(hi), jl = kind_index(lo);
        std::tie(r.estimate, r.std_error) = batch_estimate(acc, total, [&](const SumSet& s) {
          return var_of(s, kcol(i, jh, 0), kcol(i, jh, 1)) -
                 var_of(s, kcol(i, jl, 0), kcol(i, jl, 1));
        });
        r.oracle = ov[jh] - ov[jl];
        r.mode = GateMode::Separate;
        push(r);
      }
    }
  }
  if (!conditional) {
    for (std::size_t pi = 0; pi < req.cov_pairs.size(); ++pi) {
      const auto [s, t] = req.cov_pairs[pi];
      const std::size_t is = col_of(s), it = col_of(t);
      for (Kind k : kAllKinds) {
        const int j = kind_index(k);
        auto r = base_report("bridge_cov", kind_name(k), t, sc, cfg, seed, grid_n);
        r.params["s"] = s;
        std::tie(r.estimate, r.std_error) = batch_estimate(acc, total, [&](const SumSet& ss) {
          return cov_of(ss, kcol(is, j, 3), kcol(it, j, 3), pcol(pi, j));
        });
        r.oracle = wiener ? wiener::bridge_cov(s, t, sc.T) : ou::ou_bridge_cov(s, t, time_change(sc));
        push(r);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::optional<double> integrated_oracle(const Scenario& sc, Kind kind) {
  const double b = sc.model.b - sc.model.a;
  if (sc.model.process == Process::Wiener) {
    if (sc.d) return wiener::expected_cond_quad_dev(kind, b, *sc.d, sc.T);
    return wiener::expected_quad_dev(kind, b, sc.T);
  }
  if (sc.d) return std::nullopt;
  const auto tc = time_change(sc);
  return ou::ou_expected_quad_dev(kind, ou::reduced_end(sc.model.a, sc.model.b, tc), tc);
}

IntegratedResult estimate_integrated(const Scenario& sc, int n_steps, const RunConfig& cfg,
                                     double separation_floor) {
  sc.validate();
  if (n_steps < 4 || n_steps % 2 != 0) throw DomainError("integrated estimates need an even grid");
  if (cfg.reps < 2) throw DomainError("integrated estimates need at least 2 replicates");
  const auto grid = paths::TimeGrid::uniform(sc.T, n_steps);
  const auto plan = make_plan(sc, grid);
  const double h = sc.T / n_steps;

  static constexpr std::array<std::pair<Kind, Kind>, 3> kPairs = {
      std::pair{Kind::AV, Kind::IR}, std::pair{Kind::AV, Kind::ST},
      std::pair{Kind::ST, Kind::IR}};
  // Per kind: refined, refined^2, fine trapezoid, fine - coarse; per pair:
  // difference and its square; IR bridge at t_{n-1} and its square.
  constexpr std::size_t kWidth = 12 + 6 + 2;
  auto kc = [](int j, int off) { return static_cast<std::size_t>(4 * j + off); };
  auto pc = [](int p, int off) { return static_cast<std::size_t>(12 + 2 * p + off); };
  constexpr std::size_t kLast = 18;

  struct Workspace {
    paths::Simulator sim;
    std::vector<double> row;
  };
  const std::uint64_t seed = cfg.seed;
  SumSet acc = reduce_replicates(
      cfg.reps, cfg.mode, [] { return SumSet(kWidth); },
      [&] { return Workspace{paths::Simulator(plan, sc.model), std::vector<double>(kWidth)}; },
      [&](std::int64_t rep, Workspace& ws, SumSet& a) {
        const auto& pb = ws.sim.run({seed, static_cast<std::uint64_t>(rep)}, sc.d);
        auto& row = ws.row;
        std::array<double, 3> refined{};
        for (int j = 0; j < 3; ++j) {
          const auto& x = pb.deviation[j];
          double all = 0.0, even = 0.0;
          for (int k = 1; k < n_steps; ++k) {
            const double v = x[k] * x[k];
            all += v;
            if (k % 2 == 0) even += v;
          }
          const double ends = 0.5 * (x[0] * x[0] + x[n_steps] * x[n_steps]);
          const double fine = h * (all + ends);
          const double coarse = 2.0 * h * (even + ends);
          refined[j] = (4.0 * fine - coarse) / 3.0;
          row[kc(j, 0)] = refined[j];
          row[kc(j, 1)] = refined[j] * refined[j];
          row[kc(j, 2)] = fine;
          row[kc(j, 3)] = fine - coarse;
        }
        for (int p = 0; p < 3; ++p) {
          const double diff =
              refined[kind_index(kPairs[p].first)] - refined[kind_index(kPairs[p].second)];
          row[pc(p, 0)] = diff;
          row[pc(p, 1)] = diff * diff;
        }
        const double last = pb.bridge[kind_index(Kind::IR)][n_steps - 1];
        row[kLast] = last;
        row[kLast + 1] = last * last;
        a.add_row(row);
      });

  IntegratedResult res;
  for (Kind k : kAllKinds) {
    const int j = kind_index(k);
    auto r = base_report("integrated_quad_dev", kind_name(k), std::nullopt, sc, cfg, seed, n_steps);
    r.estimate = acc.mean(kc(j, 0));
    r.std_error = mean_se(acc, kc(j, 0), kc(j, 1));
    r.raw_estimate = acc.mean(kc(j, 2));
    r.bias = acc.mean(kc(j, 3)) / 3.0;
    r.oracle = integrated_oracle(sc, k);
    r.judge();
    res.reports.push_back(r);
  }
  for (int p = 0; p < 3; ++p) {
    const auto [x, y] = kPairs[p];
    auto r = base_report("integrated_gap", pair_name(x, y), std::nullopt, sc, cfg, seed, n_steps);
    r.estimate = acc.mean(pc(p, 0));
    r.std_error = mean_se(acc, pc(p, 0), pc(p, 1));
    const auto ox = integrated_oracle(sc, x), oy = integrated_oracle(sc, y);
    if (ox && oy) {
      r.oracle = *ox - *oy;
      r.mode = std::abs(*r.oracle) > separation_floor ? GateMode::Separate : GateMode::Agree;
    }
    r.judge();
    res.reports.push_back(r);
  }
  res.max_abs_av = std::max(acc.max_abs(kc(0, 0)), acc.max_abs(kc(0, 2)));
  res.ir_sd_last = std::sqrt(std::max(0.0, var_of(acc, kLast, kLast + 1)));
  const double t_last = grid.points[n_steps - 1];
  if (!sc.d) {
    res.ir_sd_oracle = std::sqrt(sc.model.process == Process::Wiener
                                     ? wiener::bridge_cov(t_last, t_last, sc.T)
                                     : ou::ou_bridge_cov(t_last, t_last, time_change(sc)));
  } else {
    res.ir_sd_oracle = kNaN;
  }
  return res;
}

// ---------------------------------------------------------------------------

std::vector<RegionPointResult> region_map_mc(const std::vector<wiener::RegionPoint>& points,
                                             int n_steps, const RunConfig& cfg) {
  std::vector<RegionPointResult> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto p = points[i];
    RegionPointResult pr;
    pr.point = p;
    pr.oracle_label = wiener::region_classify(p).tag();
    Scenario sc;
    sc.model.process = Process::Wiener;
    sc.model.b = p.b_tilde;
    sc.T = 1.0;
    sc.d = p.d_tilde;
    RunConfig c = cfg;
    c.seed = derive_seed(cfg.seed, 1000 + i);
    auto res = estimate_integrated(sc, n_steps, c, 0.0);
    std::array<double, 3> est{};
    for (const auto& r : res.reports) {
      if (r.statistic == "integrated_quad_dev") est[kind_index(parse_kind(r.kind))] = r.estimate;
    }
    std::array<Kind, 3> order = {Kind::AV, Kind::IR, Kind::ST};
    std::sort(order.begin(), order.end(),
              [&](Kind x, Kind y) { return est[kind_index(x)] < est[kind_index(y)]; });
    wiener::RegionLabel mc_label;
    mc_label.order = order;
    pr.mc_label = mc_label.ordering_tag();
    bool separated = true;
    for (auto& r : res.reports) {
      r.params["b_tilde"] = p.b_tilde;
      r.params["d_tilde"] = p.d_tilde;
      if (r.statistic == "integrated_gap") separated = separated && r.verdict == "pass";
    }
    pr.agrees = separated && pr.mc_label == pr.oracle_label;
    pr.reports = std::move(res.reports);
    out.push_back(std::move(pr));
  }
  return out;
}

// ---------------------------------------------------------------------------

BackendResult backend_crosscheck(const paths::ModelSpec& model, double T, int n_fine,
                                 const RunConfig& cfg) {
  model.validate();
  if (n_fine % 4 != 0) throw DomainError("fine grid must be divisible by 4");
  const auto grid = paths::TimeGrid::uniform(T, n_fine);
  const auto plan = model.process == Process::Wiener ? paths::DriverPlan::wiener(grid)
                                                     : paths::DriverPlan::ou(grid, model.ou);
  const std::array<int, 3> strides = {4, 2, 1};
  std::array<std::size_t, 3> offset{};
  std::size_t width = 0;
  for (int l = 0; l < 3; ++l) {
    offset[l] = width;
    width += static_cast<std::size_t>(n_fine / strides[l] - 1);
  }
  struct Workspace {
    paths::Simulator sim;
    std::vector<double> euler, row;
  };
  SumSet acc = reduce_replicates(
      cfg.reps, cfg.mode, [&] { return SumSet(width); },
      [&] { return Workspace{paths::Simulator(plan, model), {}, std::vector<double>(width)}; },
      [&](std::int64_t rep, Workspace& ws, SumSet& a) {
        const auto& pb = ws.sim.run({cfg.seed, static_cast<std::uint64_t>(rep)});
        const auto& exact = pb.bridge[kind_index(Kind::IR)];
        for (int l = 0; l < 3; ++l) {
          paths::euler_bridge(plan, ws.sim.driver(), model, strides[l], ws.euler);
          const int m = n_fine / strides[l];
          for (int j = 1; j < m; ++j) {
            const double e = ws.euler[j] - exact[j * strides[l]];
            ws.row[offset[l] + j - 1] = e * e;
          }
        }
        a.add_row(ws.row);
      });
  BackendResult res;
  for (int l = 0; l < 3; ++l) {
    const int m = n_fine / strides[l];
    double worst = 0.0;
    for (int j = 1; j < m; ++j) worst = std::max(worst, std::sqrt(acc.mean(offset[l] + j - 1)));
    res.levels.push_back({m, worst});
  }
  res.monotone = true;
  for (int l = 0; l + 1 < 3; ++l) {
    res.rates.push_back(std::log2(res.levels[l].max_rms / res.levels[l + 1].max_rms));
    res.monotone = res.monotone && res.levels[l + 1].max_rms < res.levels[l].max_rms;
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {

Scenario wiener_scenario(double b, double T, std::optional<double> d = std::nullopt) {
  Scenario sc;
  sc.model.process = Process::Wiener;
  sc.model.b = b;
  sc.T = T;
  sc.d = d;
  return sc;
}

Scenario ou_scenario(double q, double sigma, double T, double b) {
  Scenario sc;
  sc.model.process = Process::OU;
  sc.model.ou = {q, sigma};
  sc.model.b = b;
  sc.T = T;
  return sc;
}

void append(std::vector<EstimateReport>& dst, std::vector<EstimateReport> src) {
  for (auto& r : src) dst.push_back(std::move(r));
}

// Bridge variance decreasing strictly towards 0 on [T - 0.1, T): a uniform
// sweep followed by distances 0.1 * 2^-k from T.
Check decay_check(const std::string& name, const std::function<double(double)>& var, double T) {
  Check c;
  c.name = name;
  std::vector<double> ts;
  constexpr int kPoints = 1000;
  for (int i = 0; i < kPoints; ++i) ts.push_back(T - 0.1 + 0.1 * i / kPoints);
  for (int k = 1; k <= 40; ++k) ts.push_back(T - std::ldexp(0.1 / kPoints, -k));
  const double first = var(ts.front());
  double prev = first;
  bool ok = prev > 0.0;
  for (std::size_t i = 1; i < ts.size() && ok; ++i) {
    const double v = var(ts[i]);
    ok = v < prev && v >= 0.0;
    prev = v;
  }
  c.passed = ok && prev <= 1e-12 * first;
  c.detail["T"] = T;
  c.detail["last_value"] = prev;
  return c;
}

Check concentration_check(const std::string& name, const IntegratedResult& res) {
  Check c;
  c.name = name;
  c.passed = res.ir_sd_last <= 1.1 * res.ir_sd_oracle;
  c.detail["sample_sd"] = res.ir_sd_last;
  c.detail["oracle_sd"] = res.ir_sd_oracle;
  return c;
}

RunConfig sub_config(const RunConfig& cfg, std::uint64_t run) {
  RunConfig c = cfg;
  c.seed = derive_seed(cfg.seed, run);
  return c;
}

void suite_wiener_unconditional(const SuiteOptions& opt, SuiteResult& out) {
  const RunConfig& cfg = opt.run;
  auto base = estimate_integrated(wiener_scenario(0.0, 1.0), 1024, sub_config(cfg, 1));
  out.checks.push_back(concentration_check("wiener_ir_endpoint_concentration", base));
  append(out.reports, std::move(base.reports));
  append(out.reports,
         estimate_integrated(wiener_scenario(2.0, 3.0), 512, sub_config(cfg, 2)).reports);

  PointwiseRequest req;
  for (int i = 1; i <= 9; ++i) req.times.push_back(0.1 * i);
  req.cov_pairs = {{0.25, 0.75}};
  req.corr_gaps = true;
  append(out.reports, estimate_pointwise(wiener_scenario(0.0, 1.0), req, sub_config(cfg, 3)));

  PointwiseRequest drift;
  drift.times = {1.0};
  append(out.reports, estimate_pointwise(wiener_scenario(4.0, 2.0), drift, sub_config(cfg, 4)));

  out.checks.push_back(decay_check(
      "wiener_bridge_variance_decay", [](double t) { return wiener::bridge_cov(t, t, 1.0); }, 1.0));
}

void suite_wiener_conditional(const SuiteOptions& opt, SuiteResult& out) {
  const RunConfig& cfg = opt.run;
  for (int d = 0; d <= 2; ++d) {
    auto res = estimate_integrated(wiener_scenario(0.0, 1.0, d), 512, sub_config(cfg, 10 + d));
    if (d == 0) {
      Check c;
      c.name = "conditional_av_exact_zero";
      c.passed = res.max_abs_av == 0.0;
      c.detail["max_abs"] = res.max_abs_av;
      out.checks.push_back(c);
    }
    append(out.reports, std::move(res.reports));
  }
  PointwiseRequest req;
  req.times = {0.25, 0.5, 0.75};
  append(out.reports, estimate_pointwise(wiener_scenario(0.0, 1.0, 1.0), req, sub_config(cfg, 13)));
}

void suite_ou(const SuiteOptions& opt, SuiteResult& out) {
  const RunConfig& cfg = opt.run;
  std::uint64_t run = 20;
  for (double q : {1.0, -1.0, 2.0, -2.0}) {
    auto res = estimate_integrated(ou_scenario(q, 1.0, 1.0, 0.0), 512, sub_config(cfg, run++));
    if (q == 1.0) out.checks.push_back(concentration_check("ou_ir_endpoint_concentration", res));
    append(out.reports, std::move(res.reports));
  }
  {
    const auto sc = ou_scenario(1.0, 1.0, 1.0, 2.0);
    auto res = estimate_integrated(sc, 512, sub_config(cfg, run++));
    const auto tc = time_change(sc);
    const double printed = ou::ou_expected_quad_dev_printed(Kind::ST, 2.0, tc);
    for (auto& r : res.reports) {
      if (r.statistic != "integrated_quad_dev" || r.kind != "st") continue;
      const double z_printed = (r.estimate - printed) / r.std_error;
      std::ostringstream os;
      os.precision(15);
      os << "printed ST value without the b^2 term is " << printed << ", " << z_printed
         << " SE from the estimate";
      r.note = os.str();
      out.notes.push_back("ou st b=2: " + os.str() +
                          (std::abs(z_printed) > 6.0 ? " (discrepancy beyond 6 SE)" : ""));
    }
    append(out.reports, std::move(res.reports));
  }
  {
    PointwiseRequest req;
    for (int k = 1; k <= 16; ++k) req.times.push_back(k / 17.0);
    req.times.push_back(0.5);
    append(out.reports,
           estimate_pointwise(ou_scenario(1.0, 1.0, 1.0, 1.0), req, sub_config(cfg, run++)));
  }
  for (double q : {2.0, -2.0}) {
    PointwiseRequest req;
    req.times = {0.5};
    req.variance_order = true;
    append(out.reports,
           estimate_pointwise(ou_scenario(q, 1.0, 1.0, 0.0), req, sub_config(cfg, run++)));
  }
  const ou::TimeChange tc{{1.0, 1.0}, 1.0};
  out.checks.push_back(decay_check(
      "ou_bridge_variance_decay", [&](double t) { return ou::ou_bridge_cov(t, t, tc); }, 1.0));
  for (double x : {1.0, -1.0}) {
    Check c;
    c.name = x > 0 ? "j_quadrature_vs_midpoint_q1" : "j_quadrature_vs_midpoint_qm1";
    const double quad = ou::j_integral(x).value;
    const double mid = j_midpoint(x, 10'000'000);
    c.passed = std::abs(quad - mid) <= 1e-8;
    c.detail["quadrature"] = quad;
    c.detail["midpoint"] = mid;
    out.checks.push_back(c);
  }
}

// Spot-check points: one per region plus two within 0.5 of the D boundary.
const std::vector<wiener::RegionPoint> kRegionSpots = {
    {0.0, 0.0}, {0.0, 0.7}, {0.0, 2.0}, {8.0, 4.0}, {6.0, 3.0}, {6.0, 4.0}};

void suite_regions(const SuiteOptions& opt, SuiteResult& out) {
  const int n = opt.region_grid;
  if (n < 2) throw DomainError("region grid needs at least 2 points per axis");
  std::map<std::string, long> counts;
  long mismatches = 0, boundary = 0, bad_d = 0;
  Json first_mismatch = nullptr;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const wiener::RegionPoint p{-10.0 + 20.0 * i / (n - 1), -10.0 + 20.0 * j / (n - 1)};
      const auto lbl = wiener::region_classify(p);
      if (lbl.boundary) {
        ++boundary;
        continue;
      }
      const auto direct = wiener::region_by_direct_comparison(p);
      const auto tag = lbl.tag();
      ++counts[tag];
      if (!direct.boundary && direct.ordering_tag() != lbl.ordering_tag()) {
        if (mismatches++ == 0) first_mismatch = {p.b_tilde, p.d_tilde};
      }
      if (tag == "D" && p.b_tilde * p.b_tilde < 224.0 / 9.0) ++bad_d;
    }
  }
  Check agree{"region_grid_matches_direct_comparison", mismatches == 0, Json::object()};
  agree.detail["grid"] = n;
  agree.detail["mismatches"] = mismatches;
  agree.detail["boundary_points"] = boundary;
  agree.detail["first_mismatch"] = first_mismatch;
  out.checks.push_back(agree);
  Check labels{"region_labels_all_present", true, Json::object()};
  for (const char* t : {"A", "B", "C", "D"}) {
    labels.detail[t] = counts[t];
    labels.passed = labels.passed && counts[t] > 0;
  }
  out.checks.push_back(labels);
  Check d_only{"region_d_needs_large_b", bad_d == 0, Json::object()};
  d_only.detail["violations"] = bad_d;
  out.checks.push_back(d_only);

  for (auto& pr : region_map_mc(kRegionSpots, 512, sub_config(opt.run, 40))) {
    Check c;
    std::ostringstream os;
    os << "region_mc(" << pr.point.b_tilde << "," << pr.point.d_tilde << ")";
    c.name = os.str();
    c.passed = pr.agrees;
    c.detail["oracle"] = pr.oracle_label;
    c.detail["mc"] = pr.mc_label;
    out.checks.push_back(c);
    append(out.reports, std::move(pr.reports));
  }
}

void suite_backends(const SuiteOptions& opt, SuiteResult& out) {
  RunConfig cfg = opt.run;
  cfg.reps = std::min<std::int64_t>(cfg.reps, 20000);
  struct Case {
    const char* name;
    paths::ModelSpec model;
  };
  std::vector<Case> cases(3);
  cases[0] = {"backend_wiener_ir", {}};
  cases[1] = {"backend_ou_q1", {}};
  cases[1].model.process = Process::OU;
  cases[1].model.ou = {1.0, 1.0};
  cases[2] = {"backend_ou_qm1", {}};
  cases[2].model.process = Process::OU;
  cases[2].model.ou = {-1.0, 1.0};
  std::uint64_t run = 50;
  for (const auto& cs : cases) {
    const auto res = backend_crosscheck(cs.model, 1.0, 1024, sub_config(cfg, run++));
    Check c;
    c.name = cs.name;
    c.passed = res.monotone;
    Json levels = Json::array();
    for (const auto& l : res.levels) levels.push_back({{"n", l.n_steps}, {"max_rms", l.max_rms}});
    c.detail["levels"] = levels;
    c.detail["rates"] = res.rates;
    c.detail["reps"] = cfg.reps;
    out.checks.push_back(c);
  }
}

}  // namespace

SuiteResult verify_suite(const std::string& name, const SuiteOptions& opt) {
  SuiteResult out;
  out.suite = name;
  const bool all = name == "all";
  bool known = all;
  auto run = [&](const char* suite, void (*fn)(const SuiteOptions&, SuiteResult&)) {
    if (all || name == suite) {
      known = true;
      fn(opt, out);
    }
  };
  run("wiener-unconditional", suite_wiener_unconditional);
  run("wiener-conditional", suite_wiener_conditional);
  run("ou", suite_ou);
  run("regions", suite_regions);
  run("backends", suite_backends);
  if (!known) throw DomainError("unknown suite '" + name + "'");
  return out;
}

// ---------------------------------------------------------------------------

double j_midpoint(double x, std::int64_t panels) {
  if (panels < 1) throw DomainError("j_midpoint needs at least one panel");
  const double h = x / static_cast<double>(panels);
  const double sx = std::sinh(x);
  ExactSum s;
  for (std::int64_t i = 0; i < panels; ++i) {
    const double u = (static_cast<double>(i) + 0.5) * h;
    s.add((1.0 - std::exp(-2.0 * u)) * std::log(sx / std::sinh(u)));
  }
  return s.value() * h;
}

// ---------------------------------------------------------------------------

bool SuiteResult::passed() const {
  for (const auto& r : reports) {
    if (!r.passed()) return false;
  }
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

std::vector<std::string> SuiteResult::failures() const {
  std::vector<std::string> f;
  for (const auto& r : reports) {
    if (r.passed()) continue;
    std::ostringstream os;
    os << r.statistic;
    if (!r.kind.empty()) os << '[' << r.kind << ']';
    if (r.t) os << " t=" << *r.t;
    os << ' ' << r.params.dump();
    f.push_back(os.str());
  }
  for (const auto& c : checks) {
    if (!c.passed) f.push_back("check " + c.name);
  }
  return f;
}

Json SuiteResult::to_json(const RunConfig& cfg) const {
  Json j;
  j["suite"] = suite;
  j["seed"] = cfg.seed;
  j["reps"] = cfg.reps;
  j["gate"] = cfg.gate;
  j["passed"] = passed();
  j["failures"] = failures();
  Json rs = Json::array();
  for (const auto& r : reports) rs.push_back(r.to_json());
  j["reports"] = rs;
  Json cs = Json::array();
  for (const auto& c : checks) {
    Json cj;
    cj["name"] = c.name;
    cj["passed"] = c.passed;
    cj["detail"] = c.detail;
    cs.push_back(cj);
  }
  j["checks"] = cs;
  j["notes"] = notes;
  return j;
}

void write_reports_csv(std::ostream& os, const std::vector<EstimateReport>& reports) {
  os << "statistic,kind,t,process,a,b,d,T,q,sigma,estimate,se,oracle,z,verdict,reps,seed,grid_n\n";
  auto num = [&](const Json& v) {
    if (v.is_null()) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return std::string(buf);
  };
  auto opt = [&](const std::optional<double>& v) { return v ? num(Json(*v)) : std::string(); };
  for (const auto& r : reports) {
    const auto& p = r.params;
    auto field = [&](const char* key) { return p.contains(key) ? num(p[key]) : std::string(); };
    os << r.statistic << ',' << r.kind << ',' << opt(r.t) << ','
       << p.value("process", std::string()) << ',' << field("a") << ',' << field("b") << ','
       << field("d") << ',' << field("T") << ',' << field("q") << ',' << field("sigma") << ','
       << num(Json(r.estimate)) << ',' << num(Json(r.std_error)) << ',' << opt(r.oracle) << ','
       << opt(r.z) << ',' << r.verdict << ',' << r.replicates << ',' << r.seed << ','
       << r.grid_n << '\n';
  }
}

}  // namespace bridgelab::mc
