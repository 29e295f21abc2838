#include "oscombine/distributions.hpp"

#include <cmath>
#include <stdexcept>

namespace oscombine {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;  // 1/sqrt(2 pi)
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kUniformVar = 1.0 / 12.0;
constexpr double kSqrt12 = 3.4641016151377545871;
constexpr double kGaussCut = 10.0;

}  // namespace

BaseDistribution BaseDistribution::parse(std::string_view name) {
  if (name == "gaussian" || name == "normal") return gaussian();
  if (name == "uniform01" || name == "uniform") return uniform01();
  throw std::invalid_argument("unknown distribution: " + std::string(name));
}

std::string BaseDistribution::name() const {
  return kind_ == Kind::Gaussian ? "gaussian" : "uniform01";
}

double BaseDistribution::pdf(double x) const noexcept {
  if (kind_ == Kind::Gaussian) return kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0;
}

double BaseDistribution::cdf(double x) const noexcept {
  if (kind_ == Kind::Gaussian) return 0.5 * std::erfc(-x * kInvSqrt2);
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x;
}

double BaseDistribution::mean() const noexcept {
  return kind_ == Kind::Gaussian ? 0.0 : 0.5;
}

double BaseDistribution::variance() const noexcept {
  return kind_ == Kind::Gaussian ? 1.0 : kUniformVar;
}

double BaseDistribution::quad_lo() const noexcept {
  return kind_ == Kind::Gaussian ? -kGaussCut : 0.0;
}

double BaseDistribution::quad_hi() const noexcept {
  return kind_ == Kind::Gaussian ? kGaussCut : 1.0;
}

double BaseDistribution::sample(std::mt19937_64& g) const {
  if (kind_ == Kind::Gaussian) {
    std::normal_distribution<double> d;
    return d(g);
  }
  std::uniform_real_distribution<double> d(0.0, 1.0);
  return d(g);
}

double BaseDistribution::sample_standardized(std::mt19937_64& g) const {
  if (kind_ == Kind::Gaussian) return sample(g);
  return kSqrt12 * (sample(g) - 0.5);
}

void draw_raw(const BaseDistribution& dist, std::mt19937_64& g, std::span<double> out) {
  if (dist.kind() == BaseDistribution::Kind::Gaussian) {
    std::normal_distribution<double> d;
    for (double& v : out) v = d(g);
  } else {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (double& v : out) v = d(g);
  }
}

void draw_standardized(const BaseDistribution& dist, std::mt19937_64& g, std::span<double> out) {
  draw_raw(dist, g, out);
  if (dist.kind() == BaseDistribution::Kind::Uniform01)
    for (double& v : out) v = kSqrt12 * (v - 0.5);
}

}  // namespace oscombine
