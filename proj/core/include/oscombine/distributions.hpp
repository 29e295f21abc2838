#pragma once

#include <random>
#include <span>
#include <string>
#include <string_view>

namespace oscombine {

// Base distribution of classifier error; Gaussian is the reference case,
// Uniform01 exists to show the order statistic machinery is not Gaussian-bound.
class BaseDistribution {
 public:
  enum class Kind { Gaussian, Uniform01 };

  static BaseDistribution gaussian() noexcept { return BaseDistribution{Kind::Gaussian}; }
  static BaseDistribution uniform01() noexcept { return BaseDistribution{Kind::Uniform01}; }
  static BaseDistribution parse(std::string_view name);

  Kind kind() const noexcept { return kind_; }
  std::string name() const;

  double pdf(double x) const noexcept;
  double cdf(double x) const noexcept;
  double mean() const noexcept;
  double variance() const noexcept;

  // Integration support; the Gaussian is truncated at +-10 sigma, beyond which
  // the omitted mass is below representable tolerance for n <= a few hundred.
  double quad_lo() const noexcept;
  double quad_hi() const noexcept;

  double sample(std::mt19937_64& g) const;
  // Zero mean, unit variance variant used for noise generation.
  double sample_standardized(std::mt19937_64& g) const;

 private:
  explicit BaseDistribution(Kind k) noexcept : kind_(k) {}
  Kind kind_;
};

// Bulk draw with one distribution object; deterministic for a given engine state.
void draw_standardized(const BaseDistribution& dist, std::mt19937_64& g, std::span<double> out);
void draw_raw(const BaseDistribution& dist, std::mt19937_64& g, std::span<double> out);

}  // namespace oscombine
