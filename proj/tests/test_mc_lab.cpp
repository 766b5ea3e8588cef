#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "bridgelab/mc_lab.hpp"
#include "bridgelab/ou_oracle.hpp"

using namespace bridgelab;
using namespace bridgelab::mc;

namespace {

Scenario wiener_scenario(double b = 0.0, double T = 1.0) {
  Scenario sc;
  sc.model.b = b;
  sc.T = T;
  return sc;
}

Scenario ou_scenario(double q, double b = 0.0) {
  Scenario sc;
  sc.model.process = Process::OU;
  sc.model.ou = {q, 1.0};
  sc.model.b = b;
  return sc;
}

const EstimateReport& find(const std::vector<EstimateReport>& rs, const std::string& stat,
                           const std::string& kind, double t) {
  for (const auto& r : rs) {
    if (r.statistic == stat && r.kind == kind && r.t && std::abs(*r.t - t) < 1e-12) return r;
  }
  throw std::runtime_error("report not found: " + stat + " " + kind);
}

}  // namespace

TEST(Judge, AgreeAndSeparate) {
  EstimateReport r;
  r.estimate = 1.03;
  r.std_error = 0.01;
  r.oracle = 1.0;
  r.judge();
  EXPECT_NEAR(*r.z, 3.0, 1e-12);
  EXPECT_EQ(r.verdict, "pass");
  r.estimate = 1.05;
  r.judge();
  EXPECT_EQ(r.verdict, "fail");

  EstimateReport s;
  s.mode = GateMode::Separate;
  s.estimate = -0.05;
  s.std_error = 0.01;
  s.oracle = -0.04;
  s.judge();
  EXPECT_EQ(s.verdict, "pass");
  s.estimate = -0.03;
  s.judge();
  EXPECT_EQ(s.verdict, "fail");
  s.estimate = 0.05;
  s.judge();
  EXPECT_EQ(s.verdict, "fail");

  EstimateReport none;
  none.judge();
  EXPECT_EQ(none.verdict, "no-oracle");
  EXPECT_TRUE(none.passed());
}

TEST(Judge, ZeroStandardErrorUsesFloor) {
  EstimateReport r;
  r.estimate = 0.0;
  r.std_error = 0.0;
  r.oracle = 0.0;
  r.judge();
  EXPECT_EQ(r.verdict, "pass");
  r.estimate = 1e-6;
  r.judge();
  EXPECT_EQ(r.verdict, "fail");
}

TEST(BatchedSums, MergeMatchesSingleAccumulator) {
  const std::int64_t n = 1000;
  BatchedSums all(2, 10, n), lo(2, 10, n), hi(2, 10, n);
  for (std::int64_t r = 0; r < n; ++r) {
    const std::vector<double> row = {0.1 * r, 1.0 / (r + 1)};
    all.add(r, row);
    (r < 437 ? lo : hi).add(r, row);
  }
  lo.merge(hi);
  for (int b = 0; b < 10; ++b) {
    EXPECT_EQ(lo.batch(b).count(), 100);
    EXPECT_EQ(lo.batch(b).sum(0), all.batch(b).sum(0));
    EXPECT_EQ(lo.batch(b).sum(1), all.batch(b).sum(1));
  }
  EXPECT_EQ(lo.total().sum(1), all.total().sum(1));
}

TEST(Pointwise, WienerExamples) {
  RunConfig cfg;
  const auto rs = estimate_pointwise(wiener_scenario(), {{0.5}, {}, false, false}, cfg);
  const auto& ir_var = find(rs, "dev_var", "ir", 0.5);
  EXPECT_NEAR(*ir_var.oracle, 0.75 - std::log(2.0), 1e-15);
  EXPECT_EQ(ir_var.verdict, "pass");
  EXPECT_LE(ir_var.std_error, 0.01 * *ir_var.oracle);
  const auto& av_abs = find(rs, "abs_dev", "av", 0.5);
  EXPECT_NEAR(*av_abs.oracle, 0.3989422804014327, 1e-15);
  EXPECT_EQ(av_abs.verdict, "pass");
  for (const auto& r : rs) EXPECT_TRUE(r.passed()) << r.statistic << ' ' << r.kind;
}

TEST(Pointwise, SerialAndParallelReportsIdentical) {
  RunConfig cfg;
  cfg.reps = 5000;
  const PointwiseRequest req{{0.3, 0.6}, {{0.3, 0.6}}, true, false};
  cfg.mode = ExecMode::Serial;
  const auto a = estimate_pointwise(ou_scenario(-1.0, 0.5), req, cfg);
  cfg.mode = ExecMode::Parallel;
  const auto b = estimate_pointwise(ou_scenario(-1.0, 0.5), req, cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].to_json().dump(), b[i].to_json().dump());
}

TEST(Pointwise, StandardErrorShrinksWithReplicates) {
  // Many batches keep the batch-means error itself accurate enough for the
  // ratio to sit near 1/sqrt(2).
  RunConfig cfg;
  cfg.batches = 5000;
  cfg.reps = 50000;
  const auto small = find(estimate_pointwise(wiener_scenario(), {{0.5}, {}, false, false}, cfg),
                          "dev_mean", "ir", 0.5);
  cfg.reps = 100000;
  cfg.seed = 43;
  const auto big = find(estimate_pointwise(wiener_scenario(), {{0.5}, {}, false, false}, cfg),
                        "dev_mean", "ir", 0.5);
  const double ratio = big.std_error / small.std_error;
  EXPECT_GE(ratio, 0.66);
  EXPECT_LE(ratio, 0.75);
}

TEST(Pointwise, OuOrderingsSeparate) {
  RunConfig cfg;
  for (double q : {2.0, -2.0}) {
    const auto rs = estimate_pointwise(ou_scenario(q), {{0.5}, {}, false, true}, cfg);
    int gaps = 0;
    for (const auto& r : rs) {
      if (r.statistic != "dev_var_gap") continue;
      ++gaps;
      EXPECT_EQ(r.verdict, "pass") << "q=" << q << ' ' << r.kind;
    }
    EXPECT_EQ(gaps, 2);
  }
}

TEST(Pointwise, Errors) {
  RunConfig cfg;
  EXPECT_THROW(estimate_pointwise(wiener_scenario(), {{1.0}, {}, false, false}, cfg), DomainError);
  EXPECT_THROW(estimate_pointwise(wiener_scenario(), {{0.0}, {}, false, false}, cfg), DomainError);
  cfg.reps = 999;
  EXPECT_THROW(estimate_pointwise(wiener_scenario(), {{0.5}, {}, false, false}, cfg), DomainError);
  cfg.reps = 1000;
  auto sc = ou_scenario(1.0);
  sc.d = 0.0;
  EXPECT_THROW(estimate_pointwise(sc, {{0.5}, {}, false, false}, cfg), UnsupportedError);
  EXPECT_THROW(estimate_integrated(wiener_scenario(), 7, cfg), DomainError);
  EXPECT_THROW(verify_suite("nope", {}), DomainError);
}

TEST(Integrated, OraclesAndConditionalAvIsExact) {
  EXPECT_NEAR(*integrated_oracle(wiener_scenario(), Kind::AV), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(*integrated_oracle(wiener_scenario(), Kind::IR), 1.0 / 6.0, 1e-15);
  auto sc = wiener_scenario(0.5);
  sc.d = 0.5;
  EXPECT_NEAR(*integrated_oracle(sc, Kind::AV), 0.0, 1e-15);
  RunConfig cfg;
  cfg.reps = 4000;
  const auto res = estimate_integrated(sc, 64, cfg);
  EXPECT_EQ(res.max_abs_av, 0.0);
  for (const auto& r : res.reports) EXPECT_TRUE(r.passed()) << r.statistic << ' ' << r.kind;
}

TEST(Integrated, SerialAndParallelIdentical) {
  RunConfig cfg;
  cfg.reps = 3000;
  cfg.mode = ExecMode::Serial;
  const auto a = estimate_integrated(ou_scenario(1.0, 1.0), 32, cfg);
  cfg.mode = ExecMode::Parallel;
  const auto b = estimate_integrated(ou_scenario(1.0, 1.0), 32, cfg);
  ASSERT_EQ(a.reports.size(), b.reports.size());
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    EXPECT_EQ(a.reports[i].to_json().dump(), b.reports[i].to_json().dump());
  }
  EXPECT_EQ(a.max_abs_av, b.max_abs_av);
}

TEST(Backend, EulerConvergesToExact) {
  RunConfig cfg;
  cfg.reps = 2000;
  paths::ModelSpec m;
  const auto res = backend_crosscheck(m, 1.0, 256, cfg);
  ASSERT_EQ(res.levels.size(), 3u);
  EXPECT_TRUE(res.monotone);
  for (double r : res.rates) EXPECT_GT(r, 0.3);
}

TEST(JMidpoint, MatchesQuadrature) {
  for (double x : {1.0, -1.0, 0.5, 3.0}) {
    EXPECT_NEAR(j_midpoint(x, 200000), ou::j_integral(x).value, 1e-8) << x;
  }
  EXPECT_THROW(j_midpoint(1.0, 0), DomainError);
}

TEST(Reports, CsvAndJson) {
  EstimateReport r;
  r.statistic = "dev_var";
  r.kind = "ir";
  r.t = 0.5;
  r.params = {{"process", "wiener"}, {"a", 0.0}, {"b", 0.0}, {"T", 1.0}};
  r.estimate = 0.0568;
  r.std_error = 0.0003;
  r.oracle = 0.75 - std::log(2.0);
  r.replicates = 100000;
  r.judge();
  std::ostringstream os;
  write_reports_csv(os, {r});
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')),
            "statistic,kind,t,process,a,b,d,T,q,sigma,estimate,se,oracle,z,verdict,reps,seed,grid_n");
  EXPECT_NE(s.find("dev_var,ir,0.5,"), std::string::npos);
  const auto j = r.to_json();
  EXPECT_EQ(j["verdict"], "pass");
  EXPECT_EQ(j["kind"], "ir");
}
