// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numeric>

#include <bpnet/metrics.hpp>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace bpnet::metrics;
using bpnet::ErrorKind;

namespace {

bool near(double a, long double b, double tol = 1e-12) {
  return std::fabs(static_cast<long double>(a) - b) <= tol * std::max(1.0L, std::fabs(b));
}

bool mentions(const AamiVerdict &v, const std::string &needle) {
  for (const auto &r : v.reasons)
    if (r.find(needle) != std::string::npos)
      return true;
  return false;
}

} // namespace

TEST_SUITE("error stats") {
  TEST_CASE("worked examples") {
    const std::vector<double> ref{1, 2}, est{2, 4};
    const auto s = error_stats(ref, est);
    CHECK(s.mae == 1.5);
    CHECK(s.me == 1.5);
    CHECK(s.rmse == doctest::Approx(std::sqrt(2.5)).epsilon(1e-15));
    CHECK(s.rmse == doctest::Approx(1.58114).epsilon(1e-5));
    CHECK(s.n == 2);
    CHECK(error_stats(ref, ref) == ErrorStats{0, 0, 0, 0, 2});
    CHECK(error_stats(std::vector<double>{3}, std::vector<double>{5}).sde == 0.0);
  }

  TEST_CASE("random cases against the oracle, mae <= rmse") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const std::size_t n = 2 + seed % 40;
      const auto ref = testutil::uniform_vector(n, seed, 60, 180);
      const auto est = testutil::uniform_vector(n, seed + 1000, 60, 180);
      const auto s = error_stats(ref, est);
      const auto o = oracle::stats(ref, est);
      CHECK(near(s.me, o.me));
      CHECK(near(s.sde, o.sde));
      CHECK(near(s.rmse, o.rmse));
      CHECK(near(s.mae, o.mae));
      CHECK(s.mae <= s.rmse);
      CHECK(s.sde >= 0.0);
    }
  }

  TEST_CASE("mae equals rmse iff every |error| is equal") {
    const std::vector<double> ref{0, 0, 0, 0}, est{2, -2, 2, -2};
    const auto s = error_stats(ref, est);
    CHECK(s.mae == s.rmse);
    const std::vector<double> est2{2, -2, 2, -1};
    CHECK(error_stats(ref, est2).mae < error_stats(ref, est2).rmse);
  }

  TEST_CASE("length errors") {
    CHECK_THROWS_AS(error_stats(std::vector<double>{1, 2}, std::vector<double>{1}), bpnet::Error);
    CHECK_THROWS_AS(error_stats(std::vector<double>{}, std::vector<double>{}), bpnet::Error);
  }
}

TEST_CASE("AAMI verdicts") {
  CHECK(aami_check({0, 1, 0, 0, 10}, 104).pass);
  const auto me = aami_check({6, 1, 0, 0, 10}, 104);
  CHECK_FALSE(me.pass);
  CHECK(me.reasons.size() == 1);
  CHECK(mentions(me, "ME"));
  const auto pop = aami_check({0, 1, 0, 0, 10}, 50);
  CHECK_FALSE(pop.pass);
  CHECK(mentions(pop, "85"));
  const auto all = aami_check({-5.5, 9, 0, 0, 10}, 3);
  CHECK(all.reasons.size() == 3);
  CHECK(aami_check({-5.0, 8.0, 0, 0, 10}, 85).pass);
}

TEST_SUITE("BHS") {
  TEST_CASE("extremes and the 94 percent set") {
    const auto zero = bhs_grade(std::vector<double>(10, 0.0));
    CHECK(zero == BhsResult{100, 100, 100, 'A'});
    const auto twenty = bhs_grade(std::vector<double>(10, 20.0));
    CHECK(twenty == BhsResult{0, 0, 0, 'D'});

    std::vector<double> e(94, 4.0);
    e.insert(e.end(), {-6, 7, 9.5, -12, 14, 30});
    const auto r = bhs_grade(e);
    CHECK(r.pct_within_5 == 94.0);
    CHECK(r.pct_within_10 == 97.0);
    CHECK(r.pct_within_15 == 99.0);
    CHECK(r.grade == 'A');
  }

  TEST_CASE("thresholds are inclusive and grades step down") {
    CHECK(bhs_grade(std::vector<double>{5.0, -10.0, 15.0}).pct_within_5 == doctest::Approx(100.0 / 3));
    std::vector<double> b(50, 1.0);
    b.insert(b.end(), 25, 8.0);
    b.insert(b.end(), 15, 12.0);
    b.insert(b.end(), 10, 40.0);
    CHECK(bhs_grade(b).grade == 'B');
    b[0] = 40.0;
    CHECK(bhs_grade(b).grade == 'C');
  }

  TEST_CASE("random cases against the oracle, monotone percentages") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto e = testutil::normal_vector(10 + seed, seed, 1.0 + 0.05 * static_cast<double>(seed));
      const auto r = bhs_grade(e);
      const auto o = oracle::bhs(e);
      CHECK(near(r.pct_within_5, o.p5));
      CHECK(near(r.pct_within_10, o.p10));
      CHECK(near(r.pct_within_15, o.p15));
      CHECK(r.grade == o.grade);
      CHECK(r.pct_within_5 <= r.pct_within_10);
      CHECK(r.pct_within_10 <= r.pct_within_15);
    }
  }
}

TEST_SUITE("Bland-Altman") {
  TEST_CASE("examples") {
    const std::vector<double> ref{3, 5, 7};
    const auto same = bland_altman(ref, ref);
    CHECK(same.limits == BlandAltmanLimits{0, 0, 0, 0});
    REQUIRE(same.points.size() == 3);
    CHECK(same.points[1].mean == 5.0);

    const auto two = bland_altman(std::vector<double>{10, 10}, std::vector<double>{9, 11});
    CHECK(two.limits.mean_diff == 0.0);
    CHECK(two.limits.sd_diff == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(two.limits.loa_low == doctest::Approx(-2.7719).epsilon(1e-4));
    CHECK(two.limits.loa_high == doctest::Approx(2.7719).epsilon(1e-4));
  }

  TEST_CASE("limits are 1.96 sd either side, matching the oracle") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const std::size_t n = 3 + seed % 30;
      const auto ref = testutil::uniform_vector(n, seed, 80, 160);
      auto est = ref;
      const auto noise = testutil::normal_vector(n, seed + 7, 3.77);
      for (std::size_t i = 0; i < n; ++i)
        est[i] += noise[i] + 0.25;
      const auto r = bland_altman(ref, est).limits;
      const auto o = oracle::loa(ref, est);
      CHECK(near(r.mean_diff, o.mean));
      CHECK(near(r.sd_diff, o.sd));
      CHECK(near(r.loa_low, o.low));
      CHECK(near(r.loa_high, o.high));
      CHECK(r.loa_high - r.loa_low == doctest::Approx(2 * 1.96 * r.sd_diff).epsilon(1e-14));
    }
  }

  TEST_CASE("engineered spread gives limits of the expected shape") {
    const std::size_t n = 20000;
    const auto ref = testutil::uniform_vector(n, 3, 90, 170);
    auto est = ref;
    const auto noise = testutil::normal_vector(n, 4, 3.77);
    for (std::size_t i = 0; i < n; ++i)
      est[i] += 0.275 + noise[i];
    const auto r = bland_altman(ref, est).limits;
    CHECK(r.loa_low == doctest::Approx(-7.11).epsilon(0.03));
    CHECK(r.loa_high == doctest::Approx(7.66).epsilon(0.03));
  }
}

TEST_SUITE("Pearson") {
  TEST_CASE("examples") {
    const std::vector<double> x{1, 2, 3}, y{1, 2, 4};
    CHECK(pearson_r(x, x) == doctest::Approx(1.0).epsilon(1e-15));
    const std::vector<double> neg{-1, -2, -3};
    CHECK(pearson_r(x, neg) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(pearson_r(x, y) == doctest::Approx(0.98198).epsilon(1e-5));
    CHECK(testutil::throws_error([] { pearson_r(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}); },
                                 ErrorKind::Numeric, "undefined correlation"));
  }

  TEST_CASE("oracle agreement and affine invariance") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const std::size_t n = 3 + seed % 50;
      const auto x = testutil::uniform_vector(n, seed);
      auto y = testutil::uniform_vector(n, seed + 99);
      for (std::size_t i = 0; i < n; ++i)
        y[i] += 0.5 * x[i];
      const double r = pearson_r(x, y);
      CHECK(near(r, oracle::pearson(x, y)));
      auto z = y;
      for (auto &v : z)
        v = 3.5 * v - 40.0;
      CHECK(pearson_r(x, z) == doctest::Approx(r).epsilon(1e-12));
      CHECK(r >= -1.0);
      CHECK(r <= 1.0);
    }
  }
}

TEST_SUITE("histogram") {
  TEST_CASE("single value and symmetry") {
    const auto one = error_histogram(std::vector<double>{2.2}, 1.0);
    CHECK(one.counts == std::vector<std::size_t>{1});
    CHECK(one.bin_low[0] == doctest::Approx(1.5));

    const std::vector<double> sym{-3, -1, -1, 0, 1, 1, 3};
    const auto h = error_histogram(sym, 1.0);
    REQUIRE(h.counts.size() == 7);
    for (std::size_t i = 0; i < 7; ++i)
      CHECK(h.counts[i] == h.counts[6 - i]);
    CHECK(h.bin_low[0] == -3.5);
  }

  TEST_CASE("normal draws: counts sum to n and the binned mean is near zero") {
    const auto e = testutil::normal_vector(10000, 12);
    const auto h = error_histogram(e, 0.5);
    CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}) == 10000);
    double m = 0.0;
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      m += (h.bin_low[i] + 0.25) * static_cast<double>(h.counts[i]);
    CHECK(std::abs(m / 10000.0) < 0.05);
    CHECK(h.bin_low.front() <= *std::min_element(e.begin(), e.end()));
    CHECK(h.bin_low.back() + 0.5 > *std::max_element(e.begin(), e.end()));
  }

  TEST_CASE("bad width") {
    CHECK_THROWS_AS(error_histogram(std::vector<double>{1.0}, 0.0), bpnet::Error);
  }
}

TEST_SUITE("report") {
  SubjectPredictions subject(const std::string &id, std::vector<double> sbp_err,
                             std::vector<double> dbp_err) {
    SubjectPredictions s{id, {}, {}, {}, {}};
    for (std::size_t i = 0; i < sbp_err.size(); ++i) {
      s.sbp_ref.push_back(100.0 + static_cast<double>(i));
      s.sbp_est.push_back(s.sbp_ref.back() + sbp_err[i]);
      s.dbp_ref.push_back(70.0 + static_cast<double>(i % 3));
      s.dbp_est.push_back(s.dbp_ref.back() + dbp_err[i]);
    }
    return s;
  }

  TEST_CASE("one subject: average equals combined") {
    const auto r = build_report({subject("A", {1, -2, 3, 0.5}, {1, 1, -1, 0})});
    CHECK(r.sbp.subject_average == r.sbp.combined);
    CHECK(r.dbp.subject_average == r.dbp.combined);
    CHECK(r.subjects.size() == 1);
  }

  TEST_CASE("two subjects with different error levels") {
    // A: errors +-1 (rmse 1, mae 1), 2 samples; B: errors +-4 (rmse 4), 6 samples.
    const auto r = build_report({subject("A", {1, -1}, {0, 0}),
                                 subject("B", {4, -4, 4, -4, 4, -4}, {0, 0, 0, 0, 0, 0})});
    CHECK(r.sbp.subject_average.rmse == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(r.sbp.subject_average.mae == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(r.sbp.combined.rmse == doctest::Approx(std::sqrt((2.0 + 96.0) / 8.0)).epsilon(1e-15));
    CHECK(r.sbp.combined.mae == doctest::Approx(26.0 / 8.0).epsilon(1e-15));
    CHECK(r.sbp.combined.n == 8);
    CHECK(r.sbp.subject_average.n == 8);
    CHECK(r.sbp.pearson_r.has_value());
    CHECK_FALSE(r.sbp.aami.pass);
  }

  TEST_CASE("identical error distributions aggregate identically") {
    const std::vector<double> e{1.5, -0.5, 2.0, -3.0};
    const auto r = build_report({subject("A", e, e), subject("B", e, e), subject("C", e, e)});
    CHECK(std::abs(r.sbp.subject_average.rmse - r.sbp.combined.rmse) < 1e-12);
    CHECK(std::abs(r.sbp.subject_average.mae - r.sbp.combined.mae) < 1e-12);
  }

  TEST_CASE("constant references leave the correlation undefined") {
    auto s = subject("A", {1, 2, 3}, {1, 2, 3});
    s.dbp_ref.assign(3, 70.0);
    s.dbp_est.assign(3, 71.0);
    const auto r = build_report({s});
    CHECK_FALSE(r.dbp.pearson_r.has_value());
    CHECK(report_from_json(report_to_json(r)) == r);
  }

  TEST_CASE("JSON round trip is lossless") {
    std::vector<SubjectPredictions> subjects;
    for (int k = 0; k < 4; ++k)
      subjects.push_back(subject("S" + std::to_string(k),
                                 testutil::normal_vector(50, 10 + k, 4.0),
                                 testutil::normal_vector(50, 20 + k, 2.0)));
    const auto r = build_report(subjects);
    const auto text = report_to_json(r);
    CHECK(report_from_json(text) == r);
    CHECK(report_to_json(report_from_json(text)) == text);
    CHECK(testutil::throws_error([] { report_from_json("{\"format\":\"x\"}"); }, ErrorKind::Data,
                                 "not an evaluation report"));
  }
}
