#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oscombine {

// Raw first and second moments of the boundary offset b.
struct MomentPair {
  double m1 = 0;
  double m2 = 0;
  double variance() const noexcept { return m2 - m1 * m1; }
};

// Local description of one two-class decision boundary: the noise-free
// boundary sits where the posteriors cross, and s is the difference of the
// posterior slopes there. Classifier error moves the boundary by
// b = (eps_i - eps_j) / s.
struct BoundaryScenario {
  double s = 1;          // > 0
  double sigma_eta = 0;  // per-classifier noise standard deviation, >= 0
  std::size_t n = 1;     // ensemble size
  double delta = 0;      // common error correlation, -1/(n-1) <= delta <= 1
  double bayes_error = 0;
  std::vector<double> biases_i;  // per-classifier bias toward class i; empty = unbiased
  std::vector<double> biases_j;

  bool biased() const noexcept { return !biases_i.empty() || !biases_j.empty(); }
  // (biases_i[m] - biases_j[m]) / s
  double beta_single(std::size_t m) const;
  void validate() const;  // throws std::invalid_argument
};

// Bias summary of a combined classifier: beta_bar is its boundary bias, z >= 1
// relates it to the single-classifier bias (beta_bar = beta / z), sigma2_beta
// is the variance of the per-classifier boundary biases.
struct BiasSpec {
  double beta_bar = 0;
  double z = 1;
  double sigma2_beta = 0;
};

// Derives a BiasSpec from a scenario's bias vectors. z uses the RMS rule
// z = rms(beta_m) / |beta_bar|, which is 1 when all biases agree and grows as
// they cancel.
BiasSpec bias_spec_from(const BoundaryScenario& scn);

struct ErrorPrediction {
  double e_add = 0;
  double e_total = 0;           // e_add + bayes error
  double reduction_factor = 1;  // e_add over the matching single classifier's e_add
  MomentPair moments;           // predicted offset moments
  std::optional<double> tau_sq;
  std::optional<double> bound_errcobi;         // (1/tau) * single-classifier e_add
  std::optional<double> bound_errcobi_tau_sq;  // (1/tau^2) variant, informational
  // Order statistic extremes under bias: all classifiers equally biased
  // (sigma2_beta = 0) and fully cancelling biases (beta_bar = 0).
  std::optional<double> equal_bias_e_add;
  std::optional<double> cancelling_bias_e_add;
};

// Var b = 2 sigma_eta^2 / s^2 for one unbiased classifier.
double offset_variance_single(double s, double sigma_eta);

// E_add = s * m2 / 2; requires m2 >= m1^2.
double added_error_from_moments(double s, const MomentPair& m);

ErrorPrediction predict_single(const BoundaryScenario& scn);
ErrorPrediction predict_average(const BoundaryScenario& scn,
                                const std::optional<BiasSpec>& bias = {});
// alpha in (0, 1]: variance ratio of the chosen order statistic. Requires
// delta == 0; correlated order statistic ensembles have no closed form here.
ErrorPrediction predict_os(const BoundaryScenario& scn, double alpha,
                           const std::optional<BiasSpec>& bias = {});

// Prior-weighted combination of per-class correlations.
double overall_delta(std::span<const double> class_deltas, std::span<const double> priors);

struct ReductionPoint {
  std::size_t n;
  double delta;
  double factor;  // (1 + delta (n-1)) / n
};
std::vector<ReductionPoint> reduction_curve(std::span<const std::size_t> ns,
                                            std::span<const double> deltas);
std::string reduction_curve_csv(const std::vector<ReductionPoint>& points);

std::string to_json(const ErrorPrediction& p);

}  // namespace oscombine
