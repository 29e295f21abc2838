#include "oscombine/error_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace oscombine {
namespace {

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

double correlation_factor(std::size_t n, double delta) {
  return (1.0 + delta * static_cast<double>(n - 1)) / static_cast<double>(n);
}

// Single-classifier added error with bias beta: (s/2)(sigma_b^2 + beta^2).
double single_e_add(double s, double sigma2_b, double beta) {
  return 0.5 * s * (sigma2_b + beta * beta);
}

}  // namespace

double BoundaryScenario::beta_single(std::size_t m) const {
  double bi = biases_i.empty() ? 0.0 : biases_i.at(m);
  double bj = biases_j.empty() ? 0.0 : biases_j.at(m);
  return (bi - bj) / s;
}

void BoundaryScenario::validate() const {
  if (!(s > 0) || !std::isfinite(s))
    throw std::invalid_argument("slope difference s must be positive and finite");
  if (!(sigma_eta >= 0) || !std::isfinite(sigma_eta))
    throw std::invalid_argument("sigma_eta must be nonnegative and finite");
  if (n < 1) throw std::invalid_argument("ensemble size must be at least 1");
  if (!std::isfinite(delta) || delta > 1.0)
    throw std::invalid_argument("delta must be finite and at most 1");
  if (n > 1 && delta < -1.0 / static_cast<double>(n - 1))
    throw std::invalid_argument("delta below -1/(n-1); no such correlation matrix exists");
  if (!(bayes_error >= 0 && bayes_error <= 1))
    throw std::invalid_argument("bayes_error must lie in [0, 1]");
  for (const auto* v : {&biases_i, &biases_j}) {
    if (!v->empty() && v->size() != n)
      throw std::invalid_argument("bias vectors must be empty or length n");
    for (double b : *v)
      if (!std::isfinite(b)) throw std::invalid_argument("biases must be finite");
  }
}

BiasSpec bias_spec_from(const BoundaryScenario& scn) {
  scn.validate();
  std::vector<double> beta(scn.n);
  double sum = 0, sumsq = 0;
  for (std::size_t m = 0; m < scn.n; ++m) {
    beta[m] = scn.beta_single(m);
    sum += beta[m];
    sumsq += beta[m] * beta[m];
  }
  BiasSpec spec;
  spec.beta_bar = sum / static_cast<double>(scn.n);
  double rms = std::sqrt(sumsq / static_cast<double>(scn.n));
  spec.z = spec.beta_bar == 0.0 ? std::numeric_limits<double>::infinity()
                                : rms / std::abs(spec.beta_bar);
  if (rms == 0.0) spec.z = 1.0;
  spec.sigma2_beta =
      (sample_variance(scn.biases_i) + sample_variance(scn.biases_j)) / (scn.s * scn.s);
  return spec;
}

double offset_variance_single(double s, double sigma_eta) {
  if (!(s > 0) || !std::isfinite(s))
    throw std::invalid_argument("slope difference s must be positive and finite");
  if (!(sigma_eta >= 0) || !std::isfinite(sigma_eta))
    throw std::invalid_argument("sigma_eta must be nonnegative and finite");
  return 2.0 * sigma_eta * sigma_eta / (s * s);
}

double added_error_from_moments(double s, const MomentPair& m) {
  if (!(s > 0) || !std::isfinite(s))
    throw std::invalid_argument("slope difference s must be positive and finite");
  if (m.m2 < m.m1 * m.m1)
    throw std::invalid_argument("second moment below squared first moment");
  return 0.5 * s * m.m2;
}

ErrorPrediction predict_single(const BoundaryScenario& scn) {
  scn.validate();
  if (scn.n != 1) throw std::invalid_argument("single-classifier prediction needs n == 1");
  double sigma2_b = offset_variance_single(scn.s, scn.sigma_eta);
  double beta = scn.biased() ? scn.beta_single(0) : 0.0;
  ErrorPrediction p;
  p.moments = {beta, sigma2_b + beta * beta};
  p.e_add = added_error_from_moments(scn.s, p.moments);
  p.e_total = p.e_add + scn.bayes_error;
  p.reduction_factor = 1.0;
  return p;
}

ErrorPrediction predict_average(const BoundaryScenario& scn,
                                const std::optional<BiasSpec>& bias) {
  scn.validate();
  std::optional<BiasSpec> b = bias;
  if (!b && scn.biased()) b = bias_spec_from(scn);
  if (b && !(b->z >= 1))
    throw std::invalid_argument("bias ratio z must be at least 1");
  if (b && !(b->sigma2_beta >= 0))
    throw std::invalid_argument("sigma2_beta must be nonnegative");

  double sigma2_b = offset_variance_single(scn.s, scn.sigma_eta);
  double c = correlation_factor(scn.n, scn.delta);
  double beta_bar = b ? b->beta_bar : 0.0;
  ErrorPrediction p;
  p.moments = {beta_bar, sigma2_b * c + beta_bar * beta_bar};
  p.e_add = added_error_from_moments(scn.s, p.moments);
  p.e_total = p.e_add + scn.bayes_error;

  // Reference single classifier: bias beta_bar * z (the rms single bias).
  double beta_ref = b && std::isfinite(b->z) ? beta_bar * b->z : 0.0;
  double e_single = single_e_add(scn.s, sigma2_b, beta_ref);
  p.reduction_factor = e_single > 0 ? p.e_add / e_single : 1.0;

  double tau_sq = b ? std::min(b->z * b->z, c) : c;
  p.tau_sq = tau_sq;
  if (tau_sq > 0) {
    p.bound_errcobi = e_single / std::sqrt(tau_sq);
    p.bound_errcobi_tau_sq = e_single / tau_sq;
  }
  return p;
}

ErrorPrediction predict_os(const BoundaryScenario& scn, double alpha,
                           const std::optional<BiasSpec>& bias) {
  scn.validate();
  if (!(alpha > 0 && alpha <= 1) || !std::isfinite(alpha))
    throw std::invalid_argument("alpha must lie in (0, 1]");
  if (scn.delta != 0)
    throw std::invalid_argument(
        "order statistic predictions cover independent errors only (delta == 0)");
  std::optional<BiasSpec> b = bias;
  if (!b && scn.biased()) b = bias_spec_from(scn);
  if (b && !(b->sigma2_beta >= 0))
    throw std::invalid_argument("sigma2_beta must be nonnegative");

  double sigma2_b = offset_variance_single(scn.s, scn.sigma_eta);
  double beta_bar = b ? b->beta_bar : 0.0;
  double sigma2_beta = b ? b->sigma2_beta : 0.0;
  ErrorPrediction p;
  double var = alpha * (sigma2_b + sigma2_beta);
  p.moments = {beta_bar, var + beta_bar * beta_bar};
  p.e_add = added_error_from_moments(scn.s, p.moments);
  p.e_total = p.e_add + scn.bayes_error;

  double beta_ref = b && std::isfinite(b->z) ? beta_bar * b->z : 0.0;
  double e_single = single_e_add(scn.s, sigma2_b, beta_ref);
  p.reduction_factor = e_single > 0 ? p.e_add / e_single : alpha;
  if (b) {
    p.equal_bias_e_add = 0.5 * scn.s * (alpha * sigma2_b + beta_bar * beta_bar);
    p.cancelling_bias_e_add = 0.5 * scn.s * alpha * (sigma2_b + sigma2_beta);
  }
  return p;
}

double overall_delta(std::span<const double> class_deltas, std::span<const double> priors) {
  if (class_deltas.empty() || class_deltas.size() != priors.size())
    throw std::invalid_argument("need one prior per class delta");
  double psum = 0;
  for (double p : priors) {
    if (!(p >= 0) || !std::isfinite(p))
      throw std::invalid_argument("priors must be nonnegative and finite");
    psum += p;
  }
  if (std::abs(psum - 1.0) > 1e-9)
    throw std::invalid_argument("priors must sum to one");
  double d = 0;
  for (std::size_t i = 0; i < priors.size(); ++i) {
    if (!std::isfinite(class_deltas[i]) || class_deltas[i] < -1 || class_deltas[i] > 1)
      throw std::invalid_argument("class deltas must lie in [-1, 1]");
    d += priors[i] * class_deltas[i];
  }
  return d;
}

std::vector<ReductionPoint> reduction_curve(std::span<const std::size_t> ns,
                                            std::span<const double> deltas) {
  std::vector<ReductionPoint> out;
  out.reserve(ns.size() * deltas.size());
  for (std::size_t n : ns) {
    if (n < 1) throw std::invalid_argument("ensemble sizes must be at least 1");
    for (double d : deltas) {
      if (!std::isfinite(d) || d > 1.0)
        throw std::invalid_argument("delta must be finite and at most 1");
      if (n > 1 && d < -1.0 / static_cast<double>(n - 1))
        throw std::invalid_argument("delta below -1/(n-1) for n = " + std::to_string(n));
      out.push_back({n, d, correlation_factor(n, d)});
    }
  }
  return out;
}

std::string reduction_curve_csv(const std::vector<ReductionPoint>& points) {
  std::string out = "n,delta,factor\n";
  char line[96];
  for (const auto& p : points) {
    std::snprintf(line, sizeof line, "%zu,%g,%.6f\n", p.n, p.delta, p.factor);
    out += line;
  }
  return out;
}

std::string to_json(const ErrorPrediction& p) {
  nlohmann::ordered_json j;
  j["e_add"] = p.e_add;
  j["e_total"] = p.e_total;
  j["reduction_factor"] = p.reduction_factor;
  j["m1"] = p.moments.m1;
  j["m2"] = p.moments.m2;
  j["tau_sq"] = p.tau_sq ? nlohmann::ordered_json(*p.tau_sq) : nlohmann::ordered_json(nullptr);
  j["bound_errcobi"] =
      p.bound_errcobi ? nlohmann::ordered_json(*p.bound_errcobi) : nlohmann::ordered_json(nullptr);
  if (p.bound_errcobi_tau_sq) j["bound_errcobi_tau_sq"] = *p.bound_errcobi_tau_sq;
  if (p.equal_bias_e_add) j["equal_bias_e_add"] = *p.equal_bias_e_add;
  if (p.cancelling_bias_e_add) j["cancelling_bias_e_add"] = *p.cancelling_bias_e_add;
  return j.dump(2);
}

}  // namespace oscombine
