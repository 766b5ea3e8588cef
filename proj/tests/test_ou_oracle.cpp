#include <gtest/gtest.h>

#include <cmath>

#include "bridgelab/ou_oracle.hpp"
#include "bridgelab/quadrature.hpp"
#include "bridgelab/wiener_oracle.hpp"

using namespace bridgelab;
using namespace bridgelab::ou;

namespace {

TimeChange tc_of(double q, double sigma = 1.0, double T = 1.0) { return {{q, sigma}, T}; }

double rel(double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); }

}  // namespace

TEST(OuHelpers, SinhRatioStable) {
  EXPECT_NEAR(sinh_ratio(1.0, 2.0), std::sinh(1.0) / std::sinh(2.0), 1e-16);
  EXPECT_NEAR(sinh_ratio(800.0, 801.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(sinh_ratio(-800.0, 801.0), -std::exp(-1.0), 1e-15);
  EXPECT_NEAR(log_sinh_ratio(700.0, 900.0), -200.0, 1e-12);
  EXPECT_THROW(sinh_ratio(1.0, 0.0), DomainError);
}

TEST(OuHelpers, TimeChange) {
  EXPECT_NEAR(kappa(0.5, 1.0), -std::expm1(-1.0) / 2.0, 1e-16);
  EXPECT_NEAR(kappa(1e-3, 1e-12), 1e-3, 1e-15);
  EXPECT_THROW(kappa(0.5, 0.0), DomainError);
  const auto tc = tc_of(1.0);
  const double ts = t_star(tc);
  EXPECT_NEAR(ts, 0.462761652483891, 1e-13);
  EXPECT_NEAR(kappa_star(ts, tc), 1.0, 1e-12);
  EXPECT_NEAR(t_star(tc_of(-1.0)), 0.462761652483891, 1e-13);
  EXPECT_NEAR(t_star(tc_of(2.0)), 0.388069402317037, 1e-13);
  EXPECT_NEAR(t_star(tc_of(-2.0)), 0.388069402317037, 1e-13);
  EXPECT_NEAR(t_star(tc_of(1e-8)), 0.5, 1e-8);
}

TEST(OuOracle, BridgeMoments) {
  const auto tc = tc_of(1.0);
  EXPECT_NEAR(ou_bridge_cov(0.5, 0.5, tc), 0.2310585786300049, 1e-15);
  EXPECT_NEAR(ou_bridge_mean(0.5, 0.0, 1.0, tc), std::sinh(0.5) / std::sinh(1.0), 1e-15);
  EXPECT_NEAR(ou_cov_with_process(Kind::ST, 0.5, tc), 0.28764913664496794, 1e-15);
  EXPECT_NEAR(ou_cov_with_process(Kind::IR, 0.5, tc), 0.41506985590107681, 1e-15);
  EXPECT_EQ(ou_bridge_cov(0.3, 1.0, tc), 0.0);
}

// The AV and ST representations subtract terms of the size of the process
// covariances, so agreement is measured on that scale.
TEST(OuOracle, BridgeCovarianceFromEachConstruction) {
  for (double q : {-5.0, -1.0, -0.5, 0.5, 1.0, 5.0}) {
    const auto tc = tc_of(q, 1.5, 2.0);
    auto rb = [&](double t) { return std::sinh(q * t) / std::sinh(q * tc.T); };
    for (double s : {0.1, 0.7, 1.3}) {
      for (double t : {0.2, 1.0, 1.9}) {
        const double ref = ou_bridge_cov(s, t, tc);
        const double scale =
            std::sqrt(process_variance(s, tc.params) * process_variance(t, tc.params)) +
            std::abs(rb(s) * rb(t)) * process_variance(tc.T, tc.params);
        for (Kind k : kAllKinds) {
          EXPECT_NEAR(ou_bridge_cov_via(k, s, t, tc), ref, 1e-14 * scale + 1e-14 * std::abs(ref))
              << to_string(k) << " q=" << q << " s=" << s << " t=" << t;
        }
      }
    }
  }
}

TEST(OuOracle, DeviationVariancesFrozen) {
  // Frozen from extended-precision quadrature of each construction's kernel.
  struct Case {
    double q, sigma, T, t, av, ir, st;
  };
  const Case cases[] = {
      {1.0, 1.0, 1.0, 0.3, 0.21449379701359972, 0.051808320423512939, 0.15596244413582283},
      {-2.0, 2.0, 2.0, 1.5, 0.13471037980754276, 0.0065099343637758282, 1.6966538806281517},
      {5.0, 1.0, 1.0, 0.9, 810.14518563304414, 809.07580101807313, 810.02154919625793},
  };
  for (const auto& c : cases) {
    const auto tc = tc_of(c.q, c.sigma, c.T);
    EXPECT_LE(rel(ou_deviation_variance(Kind::AV, c.t, tc), c.av), 1e-13);
    EXPECT_LE(rel(ou_deviation_variance(Kind::IR, c.t, tc), c.ir), 1e-13);
    EXPECT_LE(rel(ou_deviation_variance(Kind::ST, c.t, tc), c.st), 1e-13);
  }
}

TEST(OuOracle, IrVarianceWhereClosedFormsCancel) {
  EXPECT_LE(rel(ou_deviation_variance(Kind::IR, 0.3, tc_of(-5.0, 1.0, 2.0)), 4.9015019580530414e-17),
            1e-9);
  EXPECT_LE(rel(ou_deviation_variance(Kind::IR, 0.01, tc_of(0.5, 2.0, 2.0)), 1.784786096945977e-06),
            1e-10);
  EXPECT_LE(rel(ou_expected_quad_dev(Kind::IR, 0.0, tc_of(-5.0, 1.0, 2.0)), 0.0028986813163529933),
            1e-10);
}

TEST(OuOracle, LongAndRearrangedFormsAgree) {
  for (double q : {-5.0, -1.0, -0.5, 0.5, 1.0, 5.0}) {
    for (double sigma : {1.0, 2.0}) {
      for (double T : {1.0, 2.0}) {
        const auto tc = tc_of(q, sigma, T);
        for (int i = 1; i < 40; ++i) {
          const double t = T * i / 40.0;
          for (Kind k : kAllKinds) {
            EXPECT_LE(variance_form_mismatch(k, t, tc), 1e-12)
                << to_string(k) << " q=" << q << " t=" << t;
          }
        }
      }
    }
  }
}

TEST(OuOracle, ExpectedQuadraticDeviationFrozen) {
  struct Case {
    double q, av, ir, st;
  };
  const Case cases[] = {
      {1.0, 0.940746381983, 0.646834382873, 0.864980696503},
      {-1.0, 0.127316178059, 0.0472987481686, 0.203081863539},
      {2.0, 2.96555569689, 2.5401390466, 2.84635277487},
      {-2.0, 0.0543160472487, 0.0170474182614, 0.173518969271},
  };
  for (const auto& c : cases) {
    const auto tc = tc_of(c.q);
    EXPECT_LE(rel(ou_expected_quad_dev(Kind::AV, 0.0, tc), c.av), 1e-11);
    EXPECT_LE(rel(ou_expected_quad_dev(Kind::IR, 0.0, tc), c.ir), 1e-11);
    EXPECT_LE(rel(ou_expected_quad_dev(Kind::ST, 0.0, tc), c.st), 1e-11);
  }
  const auto tc = tc_of(1.0);
  EXPECT_LE(rel(ou_expected_quad_dev(Kind::AV, 2.0, tc), 2.11869363105), 1e-11);
  EXPECT_LE(rel(ou_expected_quad_dev(Kind::IR, 2.0, tc), 1.82478163194), 1e-11);
  EXPECT_LE(rel(ou_expected_quad_dev(Kind::ST, 2.0, tc), 2.04292794557), 1e-11);
  EXPECT_LE(rel(ou_expected_quad_dev_printed(Kind::ST, 2.0, tc), 0.864980696503), 1e-11);
  const auto tc2 = tc_of(0.5, 2.0, 2.0);
  EXPECT_LE(rel(ou_expected_quad_dev(Kind::ST, 1.0, tc2), 14.4286647686), 1e-11);
  EXPECT_LE(rel(ou_expected_quad_dev_printed(Kind::ST, 1.0, tc2), 13.839691144), 1e-10);
}

TEST(OuOracle, OrderingsBySignOfQ) {
  auto e = [](Kind k, double q) { return ou_expected_quad_dev(k, 0.0, tc_of(q)); };
  EXPECT_LT(e(Kind::IR, 2.0), e(Kind::ST, 2.0));
  EXPECT_LT(e(Kind::ST, 2.0), e(Kind::AV, 2.0));
  EXPECT_LT(e(Kind::IR, -2.0), e(Kind::AV, -2.0));
  EXPECT_LT(e(Kind::AV, -2.0), e(Kind::ST, -2.0));
}

TEST(OuOracle, JIntegralAgainstMidpointSums) {
  for (double x : {0.3, 1.0, -1.0, 4.0}) {
    const auto r = j_integral(x);
    // Midpoint rule in extended precision on a log-singular integrand.
    const long double h = static_cast<long double>(x) / 2000000;
    long double s = 0.0L;
    const long double sx = std::sinh(static_cast<long double>(x));
    for (int i = 0; i < 2000000; ++i) {
      const long double u = (i + 0.5L) * h;
      s += (1.0L - std::exp(-2.0L * u)) * std::log(sx / std::sinh(u));
    }
    EXPECT_NEAR(r.value, static_cast<double>(s * h), 1e-10 * std::max(1.0, std::abs(r.value)));
  }
}

// Integrating the pointwise second moments reproduces the integrated values.
TEST(OuOracle, QuadratureConsistency) {
  const quad::Options opt{1e-15, 1e-12, 8000};
  for (double q : {-5.0, -1.0, -0.5, 0.5, 1.0, 5.0}) {
    for (double b : {0.0, 1.0}) {
      for (double sigma : {1.0, 2.0}) {
        for (double T : {1.0, 2.0}) {
          const auto tc = tc_of(q, sigma, T);
          for (Kind k : kAllKinds) {
            const auto r = quad::integrate(
                [&](double t) { return gauss::second_moment(ou_deviation_law(k, t, b, tc)); }, 0.0,
                T, opt);
            const double exact = ou_expected_quad_dev(k, b, tc);
            EXPECT_LE(rel(r.value, exact), 1e-8)
                << to_string(k) << " q=" << q << " b=" << b << " s=" << sigma << " T=" << T;
          }
          // The printed ST value lacks exactly the integrated squared mean, up
          // to rounding of the values being subtracted.
          const double full = ou_expected_quad_dev(Kind::ST, b, tc);
          const double gap = full - ou_expected_quad_dev_printed(Kind::ST, b, tc);
          const double mt = b * b / (4.0 * q) * (std::sinh(2.0 * q * T) - 2.0 * q * T) /
                            std::pow(std::sinh(q * T), 2);
          EXPECT_NEAR(gap, mt, 1e-15 * std::abs(full) + 1e-12 * mt);
          EXPECT_NEAR(mean_term(b, tc), mt, 1e-12 * std::max(1.0, mt));
        }
      }
    }
  }
}

// Every OU quantity tends to its Wiener counterpart as q -> 0 with sigma = 1,
// at rate O(q).
TEST(OuOracle, SmallRateLimit) {
  for (double q : {1e-4, 1e-5, -1e-4, -1e-5}) {
    const double tol = std::abs(q) > 5e-5 ? 1e-3 : 1e-4;
    const double T = 1.0;
    const auto tc = tc_of(q, 1.0, T);
    EXPECT_LE(std::abs(t_star(tc) - 0.5) / 0.5, tol);
    for (double t : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      EXPECT_LE(rel(kappa(t, q), t), tol);
      EXPECT_LE(rel(kappa_star(t, tc), t * T / (T - t)), tol);
      EXPECT_LE(rel(process_variance(t, tc.params), t), tol);
      EXPECT_LE(rel(ou_bridge_mean(t, 0.5, 2.0, tc), wiener::bridge_mean(t, {0.5, 2.0, T, Kind::AV})),
                tol);
      EXPECT_LE(rel(ou_bridge_cov(t, 0.6, tc), wiener::bridge_cov(t, 0.6, T)), tol);
      for (Kind k : kAllKinds) {
        EXPECT_LE(rel(ou_cov_with_process(k, t, tc), wiener::cov_with_process(k, t, T)), tol);
        for (double b : {0.0, 1.0}) {
          const auto o = ou_deviation_law(k, t, b, tc);
          const auto w = wiener::deviation_law(k, t, b, T);
          EXPECT_LE(rel(o.variance, w.variance), tol) << to_string(k) << " t=" << t;
          EXPECT_LE(std::abs(o.mean - w.mean), tol * std::max(1.0, std::abs(w.mean)));
        }
      }
    }
    for (Kind k : kAllKinds) {
      for (double b : {0.0, 1.0, 2.0}) {
        EXPECT_LE(rel(ou_expected_quad_dev(k, b, tc), wiener::expected_quad_dev(k, b, T)), tol)
            << to_string(k) << " q=" << q << " b=" << b;
      }
    }
  }
}

TEST(OuOracle, DomainErrors) {
  EXPECT_THROW(ou_expected_quad_dev(Kind::AV, 0.0, tc_of(0.0)), DomainError);
  EXPECT_THROW(ou_expected_quad_dev(Kind::AV, 0.0, tc_of(1.0, -1.0)), DomainError);
  EXPECT_THROW(ou_deviation_law(Kind::IR, 1.0, 0.0, tc_of(1.0)), DomainError);
  EXPECT_THROW(ou_bridge_cov(0.5, 1.5, tc_of(1.0)), DomainError);
}
