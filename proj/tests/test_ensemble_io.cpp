#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oscombine/boundary_sim.hpp"
#include "oscombine/ensemble_io.hpp"
#include "oscombine/rng.hpp"

using namespace oscombine;

namespace {

const std::string kGood =
    "pattern_id,true_label,classifier_id,score_0,score_1\n"
    "p2,1,a,0.2,0.8\n"
    "p1,0,b,0.4,0.6\n"
    "p1,0,a,0.9,0.1\n"
    "p2,1,b,0.7,0.3\n"
    "p3,0,a,0.8,0.2\n"
    "p3,0,b,0.6,0.4\n";

ScoreDataset load_string(const std::string& text) {
  std::istringstream in(text);
  return load_scores(in, "test");
}

std::string load_error(const std::string& text) {
  try {
    load_string(text);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

// Dataset with the given per-(pattern, classifier, class) scores; pattern ids
// are zero padded so their lexical order matches construction order.
ScoreDataset make_ds(std::size_t patterns, std::vector<std::string> classifier_ids,
                     std::size_t classes, const std::function<std::size_t(std::size_t)>& label,
                     const std::function<double(std::size_t, std::size_t, std::size_t)>& score) {
  ScoreDataset ds;
  ds.classifier_ids = std::move(classifier_ids);
  ds.classes = classes;
  char buf[16];
  for (std::size_t p = 0; p < patterns; ++p) {
    std::snprintf(buf, sizeof buf, "p%05zu", p);
    ds.pattern_ids.emplace_back(buf);
    ds.true_labels.push_back(label(p));
    for (std::size_t m = 0; m < ds.classifier_ids.size(); ++m)
      for (std::size_t c = 0; c < classes; ++c) ds.scores.push_back(score(p, m, c));
  }
  return ds;
}

// The four-pattern workhorse: a and b each misclassify two patterns, their
// average misclassifies only one.
ScoreDataset two_classifier_ds() {
  std::istringstream in(
      "pattern_id,true_label,classifier_id,score_0,score_1\n"
      "p1,0,a,0.9,0.1\n"
      "p1,0,b,0.4,0.6\n"
      "p2,1,a,0.2,0.8\n"
      "p2,1,b,0.3,0.7\n"
      "p3,0,a,0.45,0.55\n"
      "p3,0,b,0.8,0.2\n"
      "p4,1,a,0.6,0.4\n"
      "p4,1,b,0.55,0.45\n");
  return load_scores(in, "fixture");
}

}  // namespace

TEST_CASE("loading sorts patterns and classifiers") {
  auto ds = load_string(kGood);
  REQUIRE(ds.patterns() == 3);
  REQUIRE(ds.classifiers() == 2);
  CHECK(ds.classes == 2);
  CHECK(ds.pattern_ids == std::vector<std::string>{"p1", "p2", "p3"});
  CHECK(ds.classifier_ids == std::vector<std::string>{"a", "b"});
  CHECK(ds.true_labels == std::vector<std::size_t>{0, 1, 0});
  CHECK(ds.scores_of(0, 0)[0] == doctest::Approx(0.9));  // p1, a
  CHECK(ds.scores_of(1, 1)[1] == doctest::Approx(0.3));  // p2, b
  CHECK(ds.classifier_index("b") == 1);
  CHECK_THROWS_AS(ds.classifier_index("zz"), std::invalid_argument);
}

TEST_CASE("csv round trip") {
  auto ds = load_string(kGood);
  auto ds2 = load_string(scores_csv(ds));
  CHECK(ds2.pattern_ids == ds.pattern_ids);
  CHECK(ds2.classifier_ids == ds.classifier_ids);
  CHECK(ds2.true_labels == ds.true_labels);
  CHECK(ds2.scores == ds.scores);
}

TEST_CASE("loader rejects malformed input with the offending row") {
  CHECK(load_error("").find("empty input") != std::string::npos);
  CHECK(load_error("pattern_id,true_label,classifier_id,score_0,score_1\n")
            .find("no score rows") != std::string::npos);
  CHECK(load_error("id,label,clf,s0,s1\nx,0,a,0.5,0.5\n").find("header") != std::string::npos);
  CHECK(load_error("pattern_id,true_label,classifier_id,score_1,score_0\nx,0,a,0.5,0.5\n")
            .find("score_0") != std::string::npos);

  const std::string header = "pattern_id,true_label,classifier_id,score_0,score_1\n";
  auto msg = load_error(header + "p1,0,a,0.5,0.5\np1,0,b,nan,0.5\n");
  CHECK(msg.find("row 3") != std::string::npos);
  CHECK(msg.find("non-finite") != std::string::npos);

  CHECK(load_error(header + "p1,0,a,abc,0.5\n").find("unparseable score") != std::string::npos);
  CHECK(load_error(header + "p1,0,a,0.5\n").find("expected 5 fields") != std::string::npos);
  CHECK(load_error(header + "p1,2,a,0.5,0.5\n").find("outside 0..1") != std::string::npos);
  CHECK(load_error(header + ",0,a,0.5,0.5\n").find("empty pattern_id") != std::string::npos);

  msg = load_error(header + "p1,0,a,0.5,0.5\np1,0,a,0.6,0.4\n");
  CHECK(msg.find("duplicate") != std::string::npos);
  CHECK(msg.find("row 3") != std::string::npos);

  msg = load_error(header + "p1,0,a,0.5,0.5\np1,1,b,0.6,0.4\n");
  CHECK(msg.find("conflicting labels") != std::string::npos);

  msg = load_error(header + "p1,0,a,0.5,0.5\np1,0,b,0.6,0.4\np2,0,a,0.5,0.5\n");
  CHECK(msg.find("pattern p2") != std::string::npos);
  CHECK(msg.find("missing b") != std::string::npos);
}

TEST_CASE("identical classifiers are fully correlated") {
  auto ds = make_ds(
      6, {"a", "b"}, 2, [](std::size_t p) { return p % 2; },
      [](std::size_t p, std::size_t, std::size_t c) {
        double v = 0.3 + 0.1 * static_cast<double>((p * 7 + c * 3) % 5);
        return c == 0 ? v : 1.0 - v;
      });
  auto rep = estimate_correlation(ds);
  CHECK(rep.warnings.empty());
  CHECK(rep.overall == doctest::Approx(1.0));
  CHECK(rep.class_delta[0] == doctest::Approx(1.0));
  CHECK(rep.pairwise[0][1] == doctest::Approx(1.0));  // (a, b) entry, class 0
  CHECK(rep.priors[0] == doctest::Approx(0.5));
}

TEST_CASE("zero-variance errors leave correlations undefined") {
  auto ds = make_ds(
      4, {"a", "b"}, 2, [](std::size_t p) { return p % 2; },
      [](std::size_t p, std::size_t m, std::size_t c) {
        double target = (p % 2 == c) ? 1.0 : 0.0;
        // 0.25 is exact in binary, so the error is constant to the last bit
        if (m == 1) return target + 0.25;
        return target + ((p / 2) % 2 == 0 ? 0.2 : -0.2);
      });
  auto rep = estimate_correlation(ds);
  CHECK_FALSE(rep.warnings.empty());
  CHECK(std::isnan(rep.overall));
  CHECK(std::isnan(rep.class_delta[0]));
  CHECK(std::isnan(rep.pairwise[0][1]));

  auto j = nlohmann::json::parse(to_json(rep));
  CHECK(j["overall_delta"].is_null());
  CHECK(j["pairwise"][0][0][1].is_null());
  CHECK_FALSE(j["warnings"].empty());
  CHECK(to_table(rep).find("n/a") != std::string::npos);
}

TEST_CASE("correlation is invariant to constant score shifts") {
  auto base = make_ds(
      8, {"a", "b"}, 2, [](std::size_t p) { return p % 2; },
      [](std::size_t p, std::size_t m, std::size_t c) {
        return 0.1 * static_cast<double>((p * (m + 2) + 3 * c) % 7);
      });
  auto shifted = base;
  for (std::size_t p = 0; p < shifted.patterns(); ++p)
    for (std::size_t c = 0; c < shifted.classes; ++c)
      shifted.scores[(p * 2 + 1) * 2 + c] += 0.25;  // classifier b only
  auto r1 = estimate_correlation(base);
  auto r2 = estimate_correlation(shifted);
  for (std::size_t c = 0; c < 2; ++c)
    CHECK(r1.class_delta[c] == doctest::Approx(r2.class_delta[c]));
  CHECK(r1.overall == doctest::Approx(r2.overall));
}

TEST_CASE("planted equicorrelated noise is recovered") {
  const std::size_t patterns = 4000;
  const double planted = 0.5;
  auto dist = BaseDistribution::gaussian();
  auto g = substream(kDefaultSeed, 301);
  std::vector<double> noise(3);
  auto ds = make_ds(
      patterns, {"c1", "c2", "c3"}, 2, [](std::size_t p) { return p % 2; },
      [](std::size_t, std::size_t, std::size_t) { return 0.0; });
  for (std::size_t p = 0; p < patterns; ++p)
    for (std::size_t c = 0; c < 2; ++c) {
      draw_correlated_errors(g, dist, 0.2, planted, {}, noise);
      for (std::size_t m = 0; m < 3; ++m)
        ds.scores[(p * 3 + m) * 2 + c] = (ds.true_labels[p] == c ? 1.0 : 0.0) + noise[m];
    }
  auto rep = estimate_correlation(ds);
  CHECK(std::abs(rep.overall - planted) < 0.05);

  // split halves agree with each other
  auto half = [&](std::size_t lo, std::size_t hi) {
    ScoreDataset h;
    h.classifier_ids = ds.classifier_ids;
    h.classes = ds.classes;
    h.pattern_ids.assign(ds.pattern_ids.begin() + lo, ds.pattern_ids.begin() + hi);
    h.true_labels.assign(ds.true_labels.begin() + lo, ds.true_labels.begin() + hi);
    h.scores.assign(ds.scores.begin() + lo * 3 * 2, ds.scores.begin() + hi * 3 * 2);
    return estimate_correlation(h).overall;
  };
  CHECK(std::abs(half(0, patterns / 2) - half(patterns / 2, patterns)) < 0.08);

  // independent noise reads as near-zero correlation
  for (std::size_t p = 0; p < patterns; ++p)
    for (std::size_t c = 0; c < 2; ++c) {
      draw_correlated_errors(g, dist, 0.2, 0.0, {}, noise);
      for (std::size_t m = 0; m < 3; ++m)
        ds.scores[(p * 3 + m) * 2 + c] = (ds.true_labels[p] == c ? 1.0 : 0.0) + noise[m];
    }
  CHECK(std::abs(estimate_correlation(ds).overall) < 0.05);
}

TEST_CASE("correlation preconditions") {
  auto one = make_ds(
      4, {"a"}, 2, [](std::size_t p) { return p % 2; },
      [](std::size_t p, std::size_t, std::size_t) { return 0.1 * static_cast<double>(p); });
  CHECK_THROWS_AS(estimate_correlation(one), std::invalid_argument);
  auto tiny = make_ds(
      2, {"a", "b"}, 2, [](std::size_t p) { return p % 2; },
      [](std::size_t p, std::size_t m, std::size_t) {
        return 0.1 * static_cast<double>(p + m);
      });
  CHECK_THROWS_AS(estimate_correlation(tiny), std::invalid_argument);
}

TEST_CASE("ensemble evaluation") {
  auto ds = two_classifier_ds();
  auto ev = evaluate_ensemble(ds, Average{});
  CHECK(ev.individual_error == std::vector<double>{0.5, 0.5});
  CHECK(ev.combined_error == doctest::Approx(0.25));
  CHECK(ev.patterns == 4);
  CHECK(ev.combiner == "average");

  auto evmax = evaluate_ensemble(ds, OrderStat{RankSpec::max()});
  CHECK(evmax.combined_error == doctest::Approx(0.25));

  // a single-classifier subset reproduces that classifier's own error
  std::vector<std::string> only_a{"a"};
  auto eva = evaluate_ensemble(ds, Average{}, only_a);
  CHECK(eva.combined_error == doctest::Approx(0.5));
  CHECK(eva.classifier_ids == only_a);

  // replication lists a classifier more than once
  std::vector<std::string> rep{"a", "a", "a", "b"};
  auto evr = evaluate_ensemble(ds, Average{}, rep);
  CHECK(evr.classifier_ids.size() == 4);
  CHECK(evr.combined_error == doctest::Approx(0.25));

  // subset order does not matter for symmetric combiners
  std::vector<std::string> ab{"a", "b"}, ba{"b", "a"};
  CHECK(evaluate_ensemble(ds, Average{}, ab).combined_error ==
        evaluate_ensemble(ds, Average{}, ba).combined_error);
  CHECK(evaluate_ensemble(ds, OrderStat{RankSpec::median()}, ab).combined_error ==
        evaluate_ensemble(ds, OrderStat{RankSpec::median()}, ba).combined_error);

  std::vector<std::string> bad{"zz"};
  CHECK_THROWS_AS(evaluate_ensemble(ds, Average{}, bad), std::invalid_argument);
}

TEST_CASE("group evaluation") {
  auto ds = two_classifier_ds();
  std::vector<ScoreDataset> groups{ds, ds};
  auto ge = evaluate_groups(groups, Average{});
  REQUIRE(ge.groups.size() == 2);
  CHECK(ge.combined_mean == doctest::Approx(0.25));
  CHECK(ge.combined_std == doctest::Approx(0.0));

  auto j = nlohmann::json::parse(to_json(ge));
  CHECK(j["combined_mean"].get<double>() == doctest::Approx(0.25));
  CHECK(j["groups"].size() == 2);
  CHECK(to_table(ge).find("combined") != std::string::npos);

  CHECK_THROWS_AS(evaluate_groups({}, Average{}), std::invalid_argument);
}

TEST_CASE("odd-n mixing favors the stronger family") {
  // b runs are always right, a runs are wrong half the time
  auto ds = make_ds(
      4, {"a1", "a2", "b1", "b2"}, 2, [](std::size_t p) { return p % 2; },
      [](std::size_t p, std::size_t m, std::size_t c) {
        bool right = m >= 2 || p < 2;
        double top = right ? 0.8 : 0.2;
        return (p % 2 == c) ? top : 1.0 - top;
      });
  std::vector<std::string> fam_a{"a1", "a2"}, fam_b{"b1", "b2"};
  auto subset = odd_n_mixed_subset(ds, fam_a, fam_b, 3);
  CHECK(subset == std::vector<std::string>{"b1", "b2", "a1"});

  // a tie keeps the first family in front
  auto tie = odd_n_mixed_subset(ds, fam_b, std::vector<std::string>{"b2", "b1"}, 3);
  CHECK(tie == std::vector<std::string>{"b1", "b2", "b2"});

  CHECK_THROWS_AS(odd_n_mixed_subset(ds, fam_a, fam_b, 2), std::invalid_argument);
  CHECK_THROWS_AS(odd_n_mixed_subset(ds, fam_a, fam_b, 5), std::invalid_argument);
  CHECK_THROWS_AS(odd_n_mixed_subset(ds, {}, fam_b, 3), std::invalid_argument);
}

TEST_CASE("per-pattern matrices support replication") {
  auto ds = load_string(kGood);
  std::vector<std::size_t> subset{0, 0, 1};
  auto m = ds.matrix_for(0, subset);
  CHECK(m.classifiers() == 3);
  CHECK(m(0, 0) == doctest::Approx(0.9));
  CHECK(m(1, 0) == doctest::Approx(0.9));
  CHECK(m(2, 0) == doctest::Approx(0.4));
  auto full = ds.matrix_for(2);
  CHECK(full.classifiers() == 2);
  CHECK(full(1, 1) == doctest::Approx(0.4));
}
