#include "oscombine/boundary_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "oscombine/order_stats.hpp"
#include "oscombine/quadrature.hpp"

namespace oscombine {
namespace {

constexpr double kWindowSigmas = 10.0;
constexpr std::uint64_t kAlphaStreamIndex = 0x0a17a;  // even-median alpha estimation
constexpr std::uint64_t kAlphaSamples = 2'000'000;

double posterior_gap(const TwoClassExplicitModel& m, double x) {
  return m.p_j(x) - m.p_i(x);
}

// Bisection on [lo, hi]; the caller guarantees a sign change.
double bisect(const TwoClassExplicitModel& m, double shift, double lo, double hi, double flo) {
  double tol = 1e-12 * std::max(1.0, std::abs(m.x_star) + (hi - lo));
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    double fm = posterior_gap(m, mid) - shift;
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct TrialStats {
  KahanSum sum_a, sum_a2;
  std::size_t count = 0;
  void add(double a) noexcept {
    sum_a.add(a);
    sum_a2.add(a * a);
    ++count;
  }
};

double exact_added_area(const TwoClassExplicitModel& m, double b) {
  if (b == 0.0) return 0.0;
  double a = integrate([&](double x) { return posterior_gap(m, x); }, m.x_star, m.x_star + b,
                       1e-14, 4);
  return std::abs(a);
}

}  // namespace

double slope_difference(const PosteriorModel& model) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LocalLinearModel>) {
          if (!(m.s > 0) || !std::isfinite(m.s))
            throw std::invalid_argument("slope difference s must be positive and finite");
          return m.s;
        } else {
          if (!m.p_i || !m.p_j) throw std::invalid_argument("posteriors must be callable");
          if (m.s_hint != 0) {
            if (!(m.s_hint > 0) || !std::isfinite(m.s_hint))
              throw std::invalid_argument("slope hint must be positive and finite");
            return m.s_hint;
          }
          double h = 1e-5 * std::max(1.0, std::abs(m.x_star));
          double s = (posterior_gap(m, m.x_star + h) - posterior_gap(m, m.x_star - h)) / (2 * h);
          if (!(s > 0) || !std::isfinite(s))
            throw std::invalid_argument("posterior gap must increase through the crossing");
          return s;
        }
      },
      model);
}

void NoiseSpec::validate() const {
  if (!(sigma_eta > 0) || !std::isfinite(sigma_eta))
    throw std::invalid_argument("sigma_eta must be positive and finite");
  if (n < 1) throw std::invalid_argument("ensemble size must be at least 1");
  if (!std::isfinite(delta) || delta > 1.0)
    throw std::invalid_argument("delta must be finite and at most 1");
  if (n > 1 && delta < -1.0 / static_cast<double>(n - 1))
    throw std::invalid_argument("delta below -1/(n-1); no such correlation matrix exists");
  if (delta != 0.0 && dist.kind() == BaseDistribution::Kind::Uniform01)
    throw std::invalid_argument(
        "correlated noise is only supported for the gaussian base; an equicorrelated "
        "construction does not preserve uniform marginals");
  for (const auto* v : {&biases_i, &biases_j}) {
    if (!v->empty() && v->size() != n)
      throw std::invalid_argument("bias vectors must be empty or length n");
    for (double b : *v)
      if (!std::isfinite(b)) throw std::invalid_argument("biases must be finite");
  }
}

BoundaryScenario NoiseSpec::scenario(double s, double bayes_error) const {
  BoundaryScenario scn;
  scn.s = s;
  scn.sigma_eta = sigma_eta;
  scn.n = n;
  scn.delta = delta;
  scn.bayes_error = bayes_error;
  scn.biases_i = biases_i;
  scn.biases_j = biases_j;
  return scn;
}

void draw_correlated_errors(std::mt19937_64& g, const BaseDistribution& dist, double sigma_eta,
                            double delta, std::span<const double> biases, std::span<double> out) {
  std::size_t n = out.size();
  if (delta != 0.0 && dist.kind() == BaseDistribution::Kind::Uniform01)
    throw std::invalid_argument("correlated noise requires the gaussian base");
  if (delta == 0.0) {
    draw_standardized(dist, g, out);
    for (double& v : out) v *= sigma_eta;
  } else if (delta > 0.0) {
    double common = std::sqrt(delta) * dist.sample_standardized(g);
    double indep = std::sqrt(1.0 - delta);
    draw_standardized(dist, g, out);
    for (double& v : out) v = sigma_eta * (common + indep * v);
  } else {
    // Symmetric square root of the equicorrelated matrix:
    // u I + ((v - u)/n) 1 1^T with u = sqrt(1-delta), v = sqrt(1+(n-1)delta).
    double u = std::sqrt(1.0 - delta);
    double v = std::sqrt(1.0 + delta * static_cast<double>(n - 1));
    double c = (v - u) / static_cast<double>(n);
    draw_standardized(dist, g, out);
    double sum = 0;
    for (double e : out) sum += e;
    for (double& e : out) e = sigma_eta * (u * e + c * sum);
  }
  if (!biases.empty())
    for (std::size_t m = 0; m < n; ++m) out[m] += biases[m];
}

OffsetSamples simulate_offsets(const PosteriorModel& model, const NoiseSpec& noise,
                               const CombinerKind& combiner, std::size_t trials,
                               std::uint64_t seed) {
  noise.validate();
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (const auto* w = std::get_if<WeightedAverage>(&combiner); w && w->weights.size() != noise.n)
    throw std::invalid_argument("weight count does not match ensemble size");

  double s = slope_difference(model);
  const auto* explicit_model = std::get_if<TwoClassExplicitModel>(&model);
  double sigma_b = std::sqrt(offset_variance_single(s, noise.sigma_eta));
  double window = kWindowSigmas * sigma_b;

  OffsetSamples out;
  out.seed = seed;
  out.trials_requested = trials;
  out.b.reserve(trials);

  std::vector<double> eps_i(noise.n), eps_j(noise.n);
  for (std::size_t t = 0; t < trials; ++t) {
    auto g = substream(seed, t);
    draw_correlated_errors(g, noise.dist, noise.sigma_eta, noise.delta, noise.biases_i, eps_i);
    draw_correlated_errors(g, noise.dist, noise.sigma_eta, noise.delta, noise.biases_j, eps_j);
    double ci = fuse_values(eps_i, combiner);
    double cj = fuse_values(eps_j, combiner);
    if (!explicit_model) {
      out.b.push_back((ci - cj) / s);
      continue;
    }
    // Noisy boundary: p_j(x) + cj = p_i(x) + ci, i.e. gap(x) = ci - cj.
    double shift = ci - cj;
    double lo = explicit_model->x_star - window, hi = explicit_model->x_star + window;
    double flo = posterior_gap(*explicit_model, lo) - shift;
    double fhi = posterior_gap(*explicit_model, hi) - shift;
    if ((flo < 0.0) == (fhi < 0.0)) {
      ++out.rejected;
      continue;
    }
    double root = bisect(*explicit_model, shift, lo, hi, flo);
    out.b.push_back(root - explicit_model->x_star);
  }
  out.reject_warning = out.rejected * 100 > out.trials_requested;
  return out;
}

MomentPair empirical_moments(const OffsetSamples& s) {
  if (s.b.size() < 2) throw std::invalid_argument("moments need at least 2 samples");
  KahanSum s1, s2;
  for (double b : s.b) {
    s1.add(b);
    s2.add(b * b);
  }
  double cnt = static_cast<double>(s.b.size());
  return {s1.value() / cnt, s2.value() / cnt};
}

double empirical_added_error(const OffsetSamples& s, const PosteriorModel& model) {
  if (s.b.empty()) throw std::invalid_argument("no accepted samples");
  double slope = slope_difference(model);
  const auto* em = std::get_if<TwoClassExplicitModel>(&model);
  KahanSum sum;
  for (double b : s.b) sum.add(em ? exact_added_area(*em, b) : 0.5 * slope * b * b);
  return sum.value() / static_cast<double>(s.b.size());
}

ErrorReport compare_to_theory(const PosteriorModel& model, const NoiseSpec& noise,
                              const CombinerKind& combiner, std::size_t trials,
                              std::uint64_t seed) {
  if (trials < 2) throw std::invalid_argument("comparison needs at least 2 trials");
  OffsetSamples samples = simulate_offsets(model, noise, combiner, trials, seed);
  if (samples.b.size() < 2)
    throw std::runtime_error("fewer than 2 trials produced a boundary inside the window");

  double s = slope_difference(model);
  BoundaryScenario scn = noise.scenario(s);

  ErrorReport r;
  r.seed = seed;
  r.trials = trials;
  r.rejected_trials = samples.rejected;

  // Closed-form side.
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Average>) {
          r.predicted = predict_average(scn);
        } else if constexpr (std::is_same_v<T, WeightedAverage>) {
          bool uniform = true;
          for (double w : k.weights)
            uniform = uniform && std::abs(w - 1.0 / static_cast<double>(noise.n)) <= 1e-12;
          if (uniform)
            r.predicted = predict_average(scn);
          else
            r.prediction_note = "no closed form for non-uniform weights";
        } else {
          if (scn.delta != 0) {
            r.prediction_note = "no closed form for correlated order statistic ensembles";
            return;
          }
          auto [lo, hi] = k.rank.positions(noise.n);
          double alpha;
          if (lo == hi) {
            alpha = os_moments_quadrature(lo + 1, noise.n, noise.dist, 1e-10).alpha;
          } else {
            MomentOptions opt;
            opt.samples = kAlphaSamples;
            opt.seed = substream_seed(seed, kAlphaStreamIndex);
            alpha = median_moments(noise.n, noise.dist, MomentMethod::MonteCarlo, opt).alpha;
          }
          r.predicted = predict_os(scn, alpha);
        }
      },
      combiner);

  // Empirical side.
  r.empirical = empirical_moments(samples);
  double cnt = static_cast<double>(samples.b.size());
  r.empirical_variance = (r.empirical.m2 - r.empirical.m1 * r.empirical.m1) * cnt / (cnt - 1.0);
  r.variance_ratio = r.empirical_variance / offset_variance_single(s, noise.sigma_eta);

  const auto* em = std::get_if<TwoClassExplicitModel>(&model);
  TrialStats stats;
  for (double b : samples.b)
    stats.add(em ? exact_added_area(*em, b) : 0.5 * s * b * b);
  r.empirical_e_add = stats.sum_a.value() / cnt;
  double var_a = (stats.sum_a2.value() - cnt * r.empirical_e_add * r.empirical_e_add) / (cnt - 1.0);
  r.e_add_se = std::sqrt(std::max(0.0, var_a) / cnt);
  r.ratio = r.predicted ? r.empirical_e_add / r.predicted->e_add
                        : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::string to_json(const ErrorReport& r) {
  nlohmann::ordered_json j;
  j["predicted"] = r.predicted ? nlohmann::ordered_json::parse(to_json(*r.predicted))
                               : nlohmann::ordered_json(nullptr);
  if (!r.prediction_note.empty()) j["prediction_note"] = r.prediction_note;
  j["empirical"] = {{"m1", r.empirical.m1},
                    {"m2", r.empirical.m2},
                    {"variance", r.empirical_variance},
                    {"e_add", r.empirical_e_add},
                    {"variance_ratio", r.variance_ratio}};
  j["ratio"] = std::isfinite(r.ratio) ? nlohmann::ordered_json(r.ratio)
                                      : nlohmann::ordered_json(nullptr);
  j["stderr"] = r.e_add_se;
  j["trials"] = r.trials;
  j["rejected_trials"] = r.rejected_trials;
  j["seed"] = r.seed;
  return j.dump(2);
}

std::string to_table(const ErrorReport& r) {
  char buf[160];
  std::string out;
  auto row = [&](const char* k, const char* fmt, auto... v) {
    std::snprintf(buf, sizeof buf, "%-22s ", k);
    out += buf;
    std::snprintf(buf, sizeof buf, fmt, v...);
    out += buf;
    out += '\n';
  };
  row("trials", "%zu (rejected %zu)", r.trials, r.rejected_trials);
  row("seed", "%llu", static_cast<unsigned long long>(r.seed));
  if (r.predicted) {
    row("predicted e_add", "%.6g", r.predicted->e_add);
    row("predicted reduction", "%.6g", r.predicted->reduction_factor);
  } else {
    row("predicted e_add", "n/a (%s)", r.prediction_note.c_str());
  }
  row("empirical m1", "%.6g", r.empirical.m1);
  row("empirical m2", "%.6g", r.empirical.m2);
  row("empirical variance", "%.6g", r.empirical_variance);
  row("empirical e_add", "%.6g", r.empirical_e_add);
  row("e_add stderr", "%.3g", r.e_add_se);
  if (std::isfinite(r.ratio)) row("empirical/predicted", "%.4f", r.ratio);
  row("variance ratio", "%.4f", r.variance_ratio);
  return out;
}

std::string offsets_csv(const OffsetSamples& s) {
  std::string out = "b\n";
  char line[40];
  for (double b : s.b) {
    std::snprintf(line, sizeof line, "%.17g\n", b);
    out += line;
  }
  return out;
}

}  // namespace oscombine
