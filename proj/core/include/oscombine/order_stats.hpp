#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oscombine/distributions.hpp"
#include "oscombine/rng.hpp"

namespace oscombine {

struct OsMoments {
  std::size_t rank = 0;  // 0 marks the even-n median (average of two ranks)
  std::size_t n = 0;
  double mean = 0;        // E[X_(rank:n)]
  double mean_shift = 0;  // mean minus the base distribution's mean
  double variance = 0;
  double alpha = 0;       // variance / base variance
  double mean_se = 0;     // Monte Carlo standard errors; zero for quadrature
  double variance_se = 0;
};

enum class MomentMethod { Quadrature, MonteCarlo };
MomentMethod parse_method(std::string_view name);

struct MomentOptions {
  double tol = 1e-9;                  // quadrature absolute error target
  std::uint64_t samples = 1'000'000;  // Monte Carlo sample count
  std::uint64_t seed = kDefaultSeed;
};

// Density of the rank-th smallest of n i.i.d. draws.
double os_density(double x, std::size_t rank, std::size_t n, const BaseDistribution& dist);

OsMoments os_moments_quadrature(std::size_t rank, std::size_t n, const BaseDistribution& dist,
                                double tol = 1e-9);
OsMoments os_moments_mc(std::size_t rank, std::size_t n, const BaseDistribution& dist,
                        std::uint64_t samples, std::uint64_t seed = kDefaultSeed);

// Median of n draws. Even n averages the two central order statistics, which
// has no single-rank density; only the Monte Carlo method supports it, and the
// quadrature method throws std::invalid_argument for even n.
OsMoments median_moments(std::size_t n, const BaseDistribution& dist, MomentMethod method,
                         const MomentOptions& opt = {});

struct AlphaRow {
  std::size_t n;
  double alpha_minmax;  // min and max share one variance for symmetric bases
  double alpha_median;
};

// One row per ensemble size 1..n_max. Even-n median rows always come from the
// Monte Carlo route (see median_moments), whatever the requested method.
std::vector<AlphaRow> alpha_table(std::size_t n_max, const BaseDistribution& dist,
                                  MomentMethod method, const MomentOptions& opt = {});
std::string alpha_table_csv(const std::vector<AlphaRow>& rows);

}  // namespace oscombine
