#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "oscombine/combiners.hpp"
#include "oscombine/distributions.hpp"
#include "oscombine/error_model.hpp"
#include "oscombine/rng.hpp"

namespace oscombine {

// Boundary geometry reduced to the slope difference; offsets are exact,
// b = (eps_i - eps_j) / s.
struct LocalLinearModel {
  double s = 1;
};

// Explicit posteriors around a known crossing; each trial shifts both
// posteriors by the fused errors and relocates the decision boundary by
// bracketed bisection inside x_star +- 10 single-classifier offset sigmas.
struct TwoClassExplicitModel {
  std::function<double(double)> p_i;
  std::function<double(double)> p_j;
  double x_star = 0;
  double s_hint = 0;  // slope difference at x_star; 0 = central difference estimate
};

using PosteriorModel = std::variant<LocalLinearModel, TwoClassExplicitModel>;

double slope_difference(const PosteriorModel& model);

struct NoiseSpec {
  double sigma_eta = 0.1;  // > 0
  BaseDistribution dist = BaseDistribution::gaussian();
  double delta = 0;   // equicorrelation within each class's n errors
  std::size_t n = 1;  // classifiers
  std::vector<double> biases_i;  // length n, or empty for unbiased
  std::vector<double> biases_j;

  void validate() const;
  BoundaryScenario scenario(double s, double bayes_error = 0) const;
};

struct OffsetSamples {
  std::vector<double> b;
  std::uint64_t seed = 0;
  std::size_t trials_requested = 0;
  std::size_t rejected = 0;     // explicit-model trials whose root left the window
  bool reject_warning = false;  // rejected > 1% of requested
};

// Trial t draws from substream (seed, t), so identical inputs give identical
// samples in identical order no matter how trials would be scheduled.
OffsetSamples simulate_offsets(const PosteriorModel& model, const NoiseSpec& noise,
                               const CombinerKind& combiner, std::size_t trials,
                               std::uint64_t seed = kDefaultSeed);

// Raw sample moments (mean of b, mean of b^2); requires at least 2 samples.
MomentPair empirical_moments(const OffsetSamples& s);

// Mean added error per trial: (s/2) b^2 for the linear model, the exact area
// between the posteriors over [x_star, x_star + b] for the explicit model.
double empirical_added_error(const OffsetSamples& s, const PosteriorModel& model);

struct ErrorReport {
  std::optional<ErrorPrediction> predicted;  // empty when no closed form applies
  std::string prediction_note;               // reason, when empty
  MomentPair empirical;
  double empirical_variance = 0;  // unbiased sample variance
  double empirical_e_add = 0;
  double e_add_se = 0;            // Monte Carlo standard error of empirical_e_add
  double ratio = 0;               // empirical_e_add / predicted e_add; NaN if unavailable
  double variance_ratio = 0;      // sample variance over single-classifier offset variance
  std::size_t trials = 0;
  std::size_t rejected_trials = 0;
  std::uint64_t seed = 0;
};

ErrorReport compare_to_theory(const PosteriorModel& model, const NoiseSpec& noise,
                              const CombinerKind& combiner, std::size_t trials,
                              std::uint64_t seed = kDefaultSeed);

std::string to_json(const ErrorReport& r);
std::string to_table(const ErrorReport& r);
std::string offsets_csv(const OffsetSamples& s);

// One class's n correlated errors: common-factor construction for delta >= 0,
// symmetric covariance square root for delta < 0. Exposed for direct testing.
void draw_correlated_errors(std::mt19937_64& g, const BaseDistribution& dist, double sigma_eta,
                            double delta, std::span<const double> biases, std::span<double> out);

}  // namespace oscombine
