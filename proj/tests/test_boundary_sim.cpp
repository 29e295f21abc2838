#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "json.hpp"
#include "oscombine/boundary_sim.hpp"
#include "oscombine/rng.hpp"

using namespace oscombine;

namespace {

TwoClassExplicitModel tanh_model(double s, double x_star, bool with_hint = true) {
  TwoClassExplicitModel m;
  m.p_j = [s, x_star](double x) { return 0.5 * (1.0 + std::tanh(s * (x - x_star))); };
  m.p_i = [s, x_star](double x) { return 0.5 * (1.0 - std::tanh(s * (x - x_star))); };
  m.x_star = x_star;
  m.s_hint = with_hint ? s : 0.0;
  return m;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("slope difference") {
  CHECK(slope_difference(LocalLinearModel{2.5}) == doctest::Approx(2.5));
  CHECK_THROWS_AS(slope_difference(LocalLinearModel{0.0}), std::invalid_argument);
  CHECK(slope_difference(tanh_model(2.0, 0.3)) == doctest::Approx(2.0));
  // without a hint the slope comes from a central difference at the crossing
  CHECK(slope_difference(tanh_model(2.0, 0.3, false)) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("noise validation") {
  NoiseSpec noise;
  noise.sigma_eta = 0.0;
  CHECK_THROWS_AS(noise.validate(), std::invalid_argument);
  noise.sigma_eta = 0.1;
  noise.n = 3;
  noise.delta = -0.6;  // below -1/2
  CHECK_THROWS_AS(noise.validate(), std::invalid_argument);
  noise.delta = 0.3;
  noise.dist = BaseDistribution::uniform01();
  CHECK_THROWS_AS(noise.validate(), std::invalid_argument);  // correlated non-Gaussian
  noise.delta = 0.0;
  CHECK_NOTHROW(noise.validate());
  noise.biases_i = {0.1};
  CHECK_THROWS_AS(noise.validate(), std::invalid_argument);  // length != n
}

TEST_CASE("offset simulation is deterministic per seed") {
  NoiseSpec noise;
  noise.sigma_eta = 0.1;
  noise.n = 3;
  auto a = simulate_offsets(LocalLinearModel{2.0}, noise, Average{}, 500, 99);
  auto b = simulate_offsets(LocalLinearModel{2.0}, noise, Average{}, 500, 99);
  auto c = simulate_offsets(LocalLinearModel{2.0}, noise, Average{}, 500, 100);
  REQUIRE(a.b.size() == 500);
  CHECK(a.b == b.b);
  CHECK(a.b != c.b);
  CHECK(a.seed == 99);
  CHECK(a.rejected == 0);
}

TEST_CASE("sample moments") {
  OffsetSamples s;
  s.b = {1.0, -1.0};
  auto m = empirical_moments(s);
  CHECK(m.m1 == doctest::Approx(0.0));
  CHECK(m.m2 == doctest::Approx(1.0));
  s.b = {1.0};
  CHECK_THROWS_AS(empirical_moments(s), std::invalid_argument);
}

TEST_CASE("single classifier offsets match the closed-form variance") {
  NoiseSpec noise;
  noise.sigma_eta = 0.1;
  noise.n = 1;
  auto r = compare_to_theory(LocalLinearModel{2.0}, noise, Average{}, 100'000, kDefaultSeed);
  REQUIRE(r.predicted.has_value());
  CHECK(r.predicted->e_add == doctest::Approx(0.005));  // (s/2) * 2 sigma^2 / s^2
  CHECK(std::abs(r.empirical.m1) < 4.0 * 0.1 / std::sqrt(50'000.0));
  CHECK(r.empirical_variance == doctest::Approx(0.005).epsilon(0.05));
  CHECK(r.ratio == doctest::Approx(1.0).epsilon(0.05));
  CHECK(r.variance_ratio == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("averaging divides the offset variance by the ensemble size") {
  NoiseSpec noise;
  noise.sigma_eta = 0.15;
  noise.n = 4;
  auto r = compare_to_theory(LocalLinearModel{1.0}, noise, Average{}, 100'000,
                             substream_seed(kDefaultSeed, 21));
  REQUIRE(r.predicted.has_value());
  CHECK(r.variance_ratio == doctest::Approx(0.25).epsilon(0.05));
  CHECK(r.ratio == doctest::Approx(1.0).epsilon(0.05));

  // uniform weights go through the same closed form
  std::vector<double> w(4, 0.25);
  auto rw = compare_to_theory(LocalLinearModel{1.0}, noise, WeightedAverage{w}, 20'000,
                              substream_seed(kDefaultSeed, 22));
  CHECK(rw.predicted.has_value());

  // non-uniform weights have no closed form here; the report says so
  std::vector<double> wu{0.7, 0.1, 0.1, 0.1};
  auto ru = compare_to_theory(LocalLinearModel{1.0}, noise, WeightedAverage{wu}, 5'000,
                              substream_seed(kDefaultSeed, 23));
  CHECK_FALSE(ru.predicted.has_value());
  CHECK_FALSE(ru.prediction_note.empty());
  CHECK(std::isnan(ru.ratio));
  CHECK(ru.empirical.m2 > 0.0);
}

TEST_CASE("extreme and median selection match their variance ratios") {
  NoiseSpec noise;
  noise.sigma_eta = 0.1;
  noise.n = 3;
  auto rmax = compare_to_theory(LocalLinearModel{2.0}, noise, OrderStat{RankSpec::max()}, 200'000,
                                substream_seed(kDefaultSeed, 31));
  REQUIRE(rmax.predicted.has_value());
  CHECK(std::abs(rmax.variance_ratio - 0.560) < 0.02);
  CHECK(rmax.ratio == doctest::Approx(1.0).epsilon(0.05));

  noise.n = 5;
  auto rmed = compare_to_theory(LocalLinearModel{2.0}, noise, OrderStat{RankSpec::median()},
                                200'000, substream_seed(kDefaultSeed, 32));
  REQUIRE(rmed.predicted.has_value());
  CHECK(std::abs(rmed.variance_ratio - 0.287) < 0.02);
  CHECK(rmed.ratio == doctest::Approx(1.0).epsilon(0.05));

  // both classes go through the same selection, so the mean shifts cancel and
  // min lands on the same variance ratio as max
  noise.n = 4;
  auto rmin = compare_to_theory(LocalLinearModel{2.0}, noise, OrderStat{RankSpec::min()}, 100'000,
                                substream_seed(kDefaultSeed, 33));
  REQUIRE(rmin.predicted.has_value());
  CHECK(std::abs(rmin.empirical.m1) < 0.005);
  CHECK(std::abs(rmin.variance_ratio - 0.492) < 0.02);
  CHECK(rmin.ratio == doctest::Approx(1.0).epsilon(0.05));

  // even median goes through the sampled variance ratio
  auto rmed4 = compare_to_theory(LocalLinearModel{2.0}, noise, OrderStat{RankSpec::median()},
                                 100'000, substream_seed(kDefaultSeed, 34));
  REQUIRE(rmed4.predicted.has_value());
  CHECK(rmed4.ratio == doctest::Approx(1.0).epsilon(0.06));
}

TEST_CASE("correlated averaging follows the correlation factor") {
  NoiseSpec noise;
  noise.sigma_eta = 0.1;
  noise.n = 7;
  noise.delta = 0.4;
  auto r = compare_to_theory(LocalLinearModel{2.0}, noise, Average{}, 100'000,
                             substream_seed(kDefaultSeed, 41));
  REQUIRE(r.predicted.has_value());
  CHECK(r.variance_ratio == doctest::Approx((1.0 + 0.4 * 6.0) / 7.0).epsilon(0.05));
  CHECK(r.ratio == doctest::Approx(1.0).epsilon(0.05));

  noise.delta = -1.0 / 6.0;
  auto ra = compare_to_theory(LocalLinearModel{2.0}, noise, Average{}, 50'000,
                              substream_seed(kDefaultSeed, 42));
  CHECK(ra.empirical_variance < 0.1 * 0.005);  // near-complete cancellation

  // no closed form for a correlated order statistic; empirical side still runs
  noise.delta = 0.4;
  auto ros = compare_to_theory(LocalLinearModel{2.0}, noise, OrderStat{RankSpec::max()}, 5'000,
                               substream_seed(kDefaultSeed, 43));
  CHECK_FALSE(ros.predicted.has_value());
  CHECK_FALSE(ros.prediction_note.empty());
  CHECK(std::isnan(ros.ratio));
  CHECK(ros.empirical.m2 > 0.0);
}

TEST_CASE("identical errors collapse every combiner to the same offsets") {
  NoiseSpec noise;
  noise.sigma_eta = 0.1;
  noise.n = 5;
  noise.delta = 1.0;
  auto seed = substream_seed(kDefaultSeed, 51);
  auto ave = simulate_offsets(LocalLinearModel{2.0}, noise, Average{}, 2'000, seed);
  auto mx = simulate_offsets(LocalLinearModel{2.0}, noise, OrderStat{RankSpec::max()}, 2'000, seed);
  auto md =
      simulate_offsets(LocalLinearModel{2.0}, noise, OrderStat{RankSpec::median()}, 2'000, seed);
  REQUIRE(ave.b.size() == mx.b.size());
  for (std::size_t t = 0; t < ave.b.size(); ++t) {
    CHECK(ave.b[t] == doctest::Approx(mx.b[t]).epsilon(1e-10));
    CHECK(ave.b[t] == doctest::Approx(md.b[t]).epsilon(1e-10));
  }
}

TEST_CASE("bias shifts the mean offset without touching the spread") {
  NoiseSpec noise;
  noise.sigma_eta = 0.1;
  noise.n = 4;
  noise.biases_i = {0.2, 0.2, 0.2, 0.2};
  noise.biases_j = {0.0, 0.0, 0.0, 0.0};
  auto r = compare_to_theory(LocalLinearModel{2.0}, noise, Average{}, 100'000,
                             substream_seed(kDefaultSeed, 61));
  REQUIRE(r.predicted.has_value());
  CHECK(r.predicted->moments.m1 == doctest::Approx(0.1));
  double se = std::sqrt(r.empirical_variance / 100'000.0);
  CHECK(std::abs(r.empirical.m1 - 0.1) < 4.0 * se + 1e-6);
  CHECK(r.empirical_variance == doctest::Approx(0.005 / 4.0).epsilon(0.06));
  CHECK(r.ratio == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("correlated error generator hits the requested correlation") {
  const std::size_t trials = 100'000;
  auto g = substream(kDefaultSeed, 71);
  auto dist = BaseDistribution::gaussian();

  std::vector<double> x(trials), y(trials);
  double buf[2];
  for (std::size_t t = 0; t < trials; ++t) {
    draw_correlated_errors(g, dist, 0.3, 0.6, {}, buf);
    x[t] = buf[0];
    y[t] = buf[1];
  }
  CHECK(pearson(x, y) == doctest::Approx(0.6).epsilon(0.02));
  double var = 0, mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(trials);
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(trials - 1);
  CHECK(std::abs(mean) < 0.005);
  CHECK(var == doctest::Approx(0.09).epsilon(0.03));

  // negative equicorrelation via the symmetric covariance root
  std::vector<std::vector<double>> cols(4, std::vector<double>(trials));
  double buf4[4];
  for (std::size_t t = 0; t < trials; ++t) {
    draw_correlated_errors(g, dist, 0.5, -0.3, {}, buf4);
    for (int k = 0; k < 4; ++k) cols[k][t] = buf4[k];
  }
  double rsum = 0;
  int pairs = 0;
  for (int a = 0; a < 4; ++a)
    for (int b2 = a + 1; b2 < 4; ++b2) {
      rsum += pearson(cols[a], cols[b2]);
      ++pairs;
    }
  CHECK(rsum / pairs == doctest::Approx(-0.3).epsilon(0.03));

  // biases shift the means
  double bias[2] = {0.5, -0.5};
  double out[2];
  double m0 = 0, m1 = 0;
  for (std::size_t t = 0; t < 20'000; ++t) {
    draw_correlated_errors(g, dist, 0.1, 0.0, bias, out);
    m0 += out[0];
    m1 += out[1];
  }
  CHECK(m0 / 20'000 == doctest::Approx(0.5).epsilon(0.02));
  CHECK(m1 / 20'000 == doctest::Approx(-0.5).epsilon(0.02));
}

TEST_CASE("explicit posteriors agree with the local linear picture") {
  auto model = tanh_model(2.0, 0.25);
  NoiseSpec noise;
  noise.sigma_eta = 0.1;
  noise.n = 1;
  auto seed = substream_seed(kDefaultSeed, 81);
  auto r = compare_to_theory(model, noise, Average{}, 100'000, seed);
  REQUIRE(r.predicted.has_value());
  CHECK(r.rejected_trials == 0);
  CHECK(r.variance_ratio == doctest::Approx(1.0).epsilon(0.05));
  // the exact between-posterior area stays within a few percent of the
  // quadratic approximation at this noise level
  CHECK(r.ratio == doctest::Approx(1.0).epsilon(0.05));

  auto samples = simulate_offsets(model, noise, Average{}, 50'000, seed);
  auto linear = simulate_offsets(LocalLinearModel{2.0}, noise, Average{}, 50'000, seed);
  REQUIRE(samples.b.size() == linear.b.size());
  double worst = 0;
  for (std::size_t t = 0; t < samples.b.size(); ++t)
    worst = std::max(worst, std::abs(samples.b[t] - linear.b[t]));
  CHECK(worst < 0.1);  // tanh boundary shift stays near eps/s for small eps

  double exact = empirical_added_error(samples, model);
  double quad = added_error_from_moments(2.0, empirical_moments(samples));
  CHECK(exact == doctest::Approx(quad).epsilon(0.02));
}

TEST_CASE("unresolvable trials are counted and flagged") {
  auto model = tanh_model(1.0, 0.0);
  NoiseSpec noise;
  noise.sigma_eta = 2.0;  // fused shift routinely exceeds the posterior gap range
  noise.n = 1;
  auto s = simulate_offsets(model, noise, Average{}, 2'000, substream_seed(kDefaultSeed, 91));
  CHECK(s.rejected > 100);
  CHECK(s.reject_warning);
  CHECK(s.b.size() + s.rejected == 2'000);
  auto r = compare_to_theory(model, noise, Average{}, 2'000, substream_seed(kDefaultSeed, 91));
  CHECK(r.rejected_trials == s.rejected);
}

TEST_CASE("uniform noise works when independent") {
  NoiseSpec noise;
  noise.sigma_eta = 0.1;
  noise.n = 3;
  noise.dist = BaseDistribution::uniform01();
  auto r = compare_to_theory(LocalLinearModel{2.0}, noise, Average{}, 50'000,
                             substream_seed(kDefaultSeed, 101));
  REQUIRE(r.predicted.has_value());
  CHECK(r.variance_ratio == doctest::Approx(1.0 / 3.0).epsilon(0.05));
  CHECK(r.ratio == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("report serialization") {
  NoiseSpec noise;
  noise.sigma_eta = 0.1;
  noise.n = 3;
  auto r = compare_to_theory(LocalLinearModel{2.0}, noise, Average{}, 2'000,
                             substream_seed(kDefaultSeed, 111));
  auto j = nlohmann::json::parse(to_json(r));
  for (const char* key :
       {"predicted", "empirical", "ratio", "stderr", "trials", "rejected_trials", "seed"}) {
    CAPTURE(key);
    CHECK(j.contains(key));
  }
  CHECK(j["predicted"].is_object());
  CHECK(j["predicted"].contains("bound_errcobi"));
  CHECK(j["empirical"].contains("m2"));
  CHECK(j["ratio"].is_number());
  CHECK(j["seed"].get<std::uint64_t>() == substream_seed(kDefaultSeed, 111));

  noise.delta = 0.4;
  auto ros = compare_to_theory(LocalLinearModel{2.0}, noise, OrderStat{RankSpec::max()}, 1'000,
                               substream_seed(kDefaultSeed, 112));
  auto jos = nlohmann::json::parse(to_json(ros));
  CHECK(jos["predicted"].is_null());
  CHECK(jos["ratio"].is_null());

  CHECK_FALSE(to_table(r).empty());

  OffsetSamples s;
  s.b = {0.5, -0.25};
  auto csv = offsets_csv(s);
  CHECK(csv.rfind("b\n", 0) == 0);
  CHECK(csv.find("0.5\n") != std::string::npos);
}
