#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "reveal/metrics.hpp"

using namespace reveal;

TEST_CASE("rmse") {
  const std::vector<double> t{1.0, -2.0, 7.5};
  CHECK(rmse(t, t) == 0.0);
  CHECK(rmse(std::vector<double>{3.0, 4.0}, std::vector<double>{0.0, 0.0}) == doctest::Approx(std::sqrt(12.5)));
  std::vector<double> shifted = t;
  for (double& v : shifted) v -= 2.25;
  CHECK(rmse(shifted, t) == doctest::Approx(2.25));
  CHECK_THROWS(rmse(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}));
  CHECK_THROWS(rmse(std::vector<double>{}, std::vector<double>{}));
}

TEST_CASE("mae") {
  const std::vector<double> t{1.0, -2.0, 7.5};
  CHECK(mae(t, t) == 0.0);
  CHECK(mae(std::vector<double>{3.0, -4.0}, std::vector<double>{0.0, 0.0}) == doctest::Approx(3.5));
  std::vector<double> shifted = t;
  for (double& v : shifted) v += 1.5;
  CHECK(mae(shifted, t) == doctest::Approx(1.5));
  CHECK_THROWS(mae(std::vector<double>{1.0}, std::vector<double>{}));
}

TEST_CASE("r squared") {
  const std::vector<double> t{0.0, 1.0, 2.0};
  CHECK(r_squared(t, t) == 1.0);
  CHECK(r_squared(std::vector<double>{1.0, 1.0, 1.0}, t) == doctest::Approx(0.0));
  CHECK(r_squared(std::vector<double>{2.0, 1.0, 0.0}, t) == doctest::Approx(-3.0));
  CHECK_THROWS(r_squared(t, std::vector<double>{4.0, 4.0, 4.0}));
}

TEST_CASE("rmse dominates mae and equals the scaled residual norm") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(17), t(17);
    double sq = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] = n(rng);
      t[k] = n(rng);
      sq += (p[k] - t[k]) * (p[k] - t[k]);
    }
    CHECK(rmse(p, t) >= mae(p, t));
    CHECK(rmse(p, t) == doctest::Approx(std::sqrt(sq) / std::sqrt(17.0)).epsilon(1e-14));
  }
}

TEST_CASE("percentile convention") {
  CHECK(percentile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(percentile({4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(percentile({4, 1, 3, 2}, 1.0) == 4.0);
  CHECK(percentile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(percentile({7}, 0.9) == 7.0);
  CHECK_THROWS(percentile({}, 0.5));
  CHECK_THROWS(percentile({1, 2}, 1.5));
}

TEST_CASE("ecdf") {
  SUBCASE("single value") {
    const std::vector<double> v{2.0};
    const auto e = ecdf(v);
    REQUIRE(e.steps.size() == 1);
    CHECK(e(1.999) == 0.0);
    CHECK(e(2.0) == 1.0);
    CHECK(e(5.0) == 1.0);
  }
  SUBCASE("four values") {
    const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
    const auto e = ecdf(v);
    CHECK(e.p50 == doctest::Approx(2.5));
    CHECK(e.p25 == doctest::Approx(1.75));
    CHECK(e.p75 == doctest::Approx(3.25));
    CHECK(e(0.5) == 0.0);
    CHECK(e(1.0) == 0.25);
    CHECK(e(2.5) == 0.5);
    CHECK(e(4.0) == 1.0);
  }
  SUBCASE("ties collapse into one step") {
    const std::vector<double> v{1.0, 1.0, 2.0};
    const auto e = ecdf(v);
    REQUIRE(e.steps.size() == 2);
    CHECK(e.steps[0].cumulative == doctest::Approx(2.0 / 3.0));
  }
  CHECK_THROWS(ecdf(std::vector<double>{}));
}

TEST_CASE("eval report") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(-70.0, 8.0);
  std::vector<double> t(200), p(200);
  for (std::size_t k = 0; k < t.size(); ++k) {
    t[k] = n(rng);
    p[k] = t[k] + 0.3 * n(rng) + 21.0;
  }
  const auto r = evaluate(p, t);
  CHECK(r.n_points == 200);
  CHECK(r.rmse >= 0.0);
  CHECK(r.mae >= 0.0);
  CHECK(r.rmse >= r.mae);
  CHECK(r.rmse == doctest::Approx(rmse(p, t)));
  CHECK(r.r_squared == doctest::Approx(r_squared(p, t)));
  REQUIRE(r.abs_error_percentiles.size() >= 3);
  for (std::size_t k = 1; k < r.abs_error_percentiles.size(); ++k) {
    CHECK(r.abs_error_percentiles[k].first > r.abs_error_percentiles[k - 1].first);
    CHECK(r.abs_error_percentiles[k].second >= r.abs_error_percentiles[k - 1].second);
  }
  CHECK_FALSE(r.wall_time_s.has_value());

  const auto back = eval_report_from_json(to_json(r));
  CHECK(back.rmse == r.rmse);
  CHECK(back.mae == r.mae);
  CHECK(back.r_squared == r.r_squared);
  CHECK(back.n_points == r.n_points);
  CHECK(back.abs_error_percentiles == r.abs_error_percentiles);

  const std::string csv = eval_report_csv(r, "reveal");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.rfind("label,", 0) == 0);
  CHECK(csv.find("\nreveal,") != std::string::npos);
}
