#include "oscombine/order_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "oscombine/quadrature.hpp"

namespace oscombine {
namespace {

constexpr std::size_t kBatch = 1 << 14;

void check_rank(std::size_t rank, std::size_t n) {
  if (n < 1) throw std::invalid_argument("sample size must be at least 1");
  if (rank < 1 || rank > n)
    throw std::invalid_argument("rank " + std::to_string(rank) + " outside 1.." +
                                std::to_string(n));
}

// Accumulates raw power sums of the extracted statistic; fourth powers feed
// the Monte Carlo standard error of the variance.
struct MomentAcc {
  KahanSum s1, s2, s3, s4;
  std::uint64_t count = 0;

  void add(double x) noexcept {
    double x2 = x * x;
    s1.add(x);
    s2.add(x2);
    s3.add(x2 * x);
    s4.add(x2 * x2);
    ++count;
  }
};

OsMoments finish_mc(const MomentAcc& acc, std::size_t rank, std::size_t n,
                    const BaseDistribution& dist) {
  double cnt = static_cast<double>(acc.count);
  double mean = acc.s1.value() / cnt;
  double ex2 = acc.s2.value() / cnt;
  double ex3 = acc.s3.value() / cnt;
  double ex4 = acc.s4.value() / cnt;
  double var = (acc.s2.value() - cnt * mean * mean) / (cnt - 1.0);
  double m2c = ex2 - mean * mean;
  double m4c = ex4 - 4.0 * mean * ex3 + 6.0 * mean * mean * ex2 - 3.0 * std::pow(mean, 4);
  OsMoments out;
  out.rank = rank;
  out.n = n;
  out.mean = mean;
  out.mean_shift = mean - dist.mean();
  out.variance = var;
  out.alpha = var / dist.variance();
  out.mean_se = std::sqrt(std::max(0.0, m2c) / cnt);
  out.variance_se = std::sqrt(std::max(0.0, m4c - m2c * m2c) / cnt);
  return out;
}

// lo == hi extracts one order statistic; lo < hi averages the two (even-sample
// median). Positions are 0-based.
OsMoments mc_positions(std::size_t lo, std::size_t hi, std::size_t rank_field, std::size_t n,
                       const BaseDistribution& dist, std::uint64_t samples, std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("Monte Carlo needs at least 2 samples");
  MomentAcc acc;
  std::vector<double> buf(n);
  std::uint64_t done = 0, batch_index = 0;
  while (done < samples) {
    std::uint64_t todo = std::min<std::uint64_t>(kBatch, samples - done);
    auto g = substream(seed, batch_index++);
    for (std::uint64_t k = 0; k < todo; ++k) {
      draw_raw(dist, g, buf);
      double v;
      if (lo == hi) {
        std::nth_element(buf.begin(), buf.begin() + lo, buf.end());
        v = buf[lo];
      } else {
        std::sort(buf.begin(), buf.end());
        v = 0.5 * (buf[lo] + buf[hi]);
      }
      acc.add(v);
    }
    done += todo;
  }
  return finish_mc(acc, rank_field, n, dist);
}

}  // namespace

MomentMethod parse_method(std::string_view name) {
  if (name == "quadrature" || name == "quad") return MomentMethod::Quadrature;
  if (name == "mc" || name == "montecarlo" || name == "monte-carlo") return MomentMethod::MonteCarlo;
  throw std::invalid_argument("unknown moment method: " + std::string(name));
}

double os_density(double x, std::size_t rank, std::size_t n, const BaseDistribution& dist) {
  check_rank(rank, n);
  double logc = std::lgamma(static_cast<double>(n) + 1.0) -
                std::lgamma(static_cast<double>(rank)) -
                std::lgamma(static_cast<double>(n - rank) + 1.0);
  double F = dist.cdf(x);
  double a = static_cast<double>(rank - 1);
  double b = static_cast<double>(n - rank);
  return std::exp(logc) * std::pow(F, a) * std::pow(1.0 - F, b) * dist.pdf(x);
}

OsMoments os_moments_quadrature(std::size_t rank, std::size_t n, const BaseDistribution& dist,
                                double tol) {
  check_rank(rank, n);
  if (!(tol > 0) || !std::isfinite(tol))
    throw std::invalid_argument("quadrature tolerance must be positive");
  double lo = dist.quad_lo(), hi = dist.quad_hi();
  auto dens = [&](double x) { return os_density(x, rank, n, dist); };
  double m0 = integrate(dens, lo, hi, tol);
  double m1 = integrate([&](double x) { return x * dens(x); }, lo, hi, tol);
  double m2 = integrate([&](double x) { return x * x * dens(x); }, lo, hi, tol);
  // Normalizing by the computed mass cancels most of the shared quadrature error.
  double mean = m1 / m0;
  double var = m2 / m0 - mean * mean;
  OsMoments out;
  out.rank = rank;
  out.n = n;
  out.mean = mean;
  out.mean_shift = mean - dist.mean();
  out.variance = var;
  out.alpha = var / dist.variance();
  return out;
}

OsMoments os_moments_mc(std::size_t rank, std::size_t n, const BaseDistribution& dist,
                        std::uint64_t samples, std::uint64_t seed) {
  check_rank(rank, n);
  return mc_positions(rank - 1, rank - 1, rank, n, dist, samples, seed);
}

OsMoments median_moments(std::size_t n, const BaseDistribution& dist, MomentMethod method,
                         const MomentOptions& opt) {
  if (n < 1) throw std::invalid_argument("sample size must be at least 1");
  if (n % 2 == 1) {
    std::size_t rank = (n + 1) / 2;
    return method == MomentMethod::Quadrature
               ? os_moments_quadrature(rank, n, dist, opt.tol)
               : os_moments_mc(rank, n, dist, opt.samples, opt.seed);
  }
  if (method == MomentMethod::Quadrature)
    throw std::invalid_argument(
        "even-sample median averages two order statistics and has no single-rank "
        "density; use the Monte Carlo method");
  return mc_positions(n / 2 - 1, n / 2, 0, n, dist, opt.samples, opt.seed);
}

std::vector<AlphaRow> alpha_table(std::size_t n_max, const BaseDistribution& dist,
                                  MomentMethod method, const MomentOptions& opt) {
  if (n_max < 1) throw std::invalid_argument("table needs n_max >= 1");
  std::vector<AlphaRow> rows;
  rows.reserve(n_max);
  for (std::size_t n = 1; n <= n_max; ++n) {
    OsMoments mm = method == MomentMethod::Quadrature
                       ? os_moments_quadrature(n, n, dist, opt.tol)
                       : os_moments_mc(n, n, dist, opt.samples,
                                       substream_seed(opt.seed, 2 * n));
    MomentOptions med_opt = opt;
    med_opt.seed = substream_seed(opt.seed, 2 * n + 1);
    // Even-n medians only exist on the Monte Carlo route.
    MomentMethod med_method = (n % 2 == 0) ? MomentMethod::MonteCarlo : method;
    OsMoments med = median_moments(n, dist, med_method, med_opt);
    rows.push_back({n, mm.alpha, med.alpha});
  }
  return rows;
}

std::string alpha_table_csv(const std::vector<AlphaRow>& rows) {
  std::string out = "N,alpha_minmax,alpha_median\n";
  char line[64];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%zu,%.3f,%.3f\n", r.n, r.alpha_minmax, r.alpha_median);
    out += line;
  }
  return out;
}

}  // namespace oscombine
