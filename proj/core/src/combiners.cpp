#include "oscombine/combiners.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oscombine {
namespace {

constexpr double kWeightSumTol = 1e-12;

void check_matrix(const ScoreMatrix& m) {
  // ScoreMatrix's constructor already validated; nothing further per call.
  (void)m;
}

double os_of_sorted(std::span<const double> sorted, const RankSpec& rank) {
  auto [lo, hi] = rank.positions(sorted.size());
  return lo == hi ? sorted[lo] : 0.5 * (sorted[lo] + sorted[hi]);
}

}  // namespace

ScoreMatrix::ScoreMatrix(std::size_t classifiers, std::size_t classes, std::vector<double> data)
    : n_(classifiers), l_(classes), data_(std::move(data)) {
  if (n_ < 1) throw std::invalid_argument("score matrix needs at least one classifier");
  if (l_ < 2) throw std::invalid_argument("score matrix needs at least two classes");
  if (data_.size() != n_ * l_)
    throw std::invalid_argument("score matrix data size does not match dimensions");
  for (double v : data_)
    if (!std::isfinite(v)) throw std::invalid_argument("score matrix contains a non-finite value");
}

RankSpec RankSpec::exact(std::size_t rank) {
  if (rank < 1) throw std::invalid_argument("order statistic ranks are 1-based");
  return RankSpec{Kind::Exact, rank};
}

std::pair<std::size_t, std::size_t> RankSpec::positions(std::size_t n) const {
  if (n < 1) throw std::invalid_argument("order statistic of an empty sample");
  switch (kind_) {
    case Kind::Min:
      return {0, 0};
    case Kind::Max:
      return {n - 1, n - 1};
    case Kind::Median:
      if (n % 2 == 1) return {n / 2, n / 2};
      return {n / 2 - 1, n / 2};
    case Kind::Exact:
      if (rank_ > n)
        throw std::invalid_argument("rank " + std::to_string(rank_) +
                                    " exceeds ensemble size " + std::to_string(n));
      return {rank_ - 1, rank_ - 1};
  }
  throw std::logic_error("unreachable");
}

std::string RankSpec::name() const {
  switch (kind_) {
    case Kind::Min:
      return "min";
    case Kind::Max:
      return "max";
    case Kind::Median:
      return "median";
    case Kind::Exact:
      return "rank(" + std::to_string(rank_) + ")";
  }
  return {};
}

CombinerKind make_weighted_average(std::vector<double> weights) {
  if (weights.empty()) throw std::invalid_argument("weighted average needs weights");
  double sum = 0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0)
      throw std::invalid_argument("weights must be finite and nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTol)
    throw std::invalid_argument("weights must sum to one");
  return WeightedAverage{std::move(weights)};
}

std::string combiner_name(const CombinerKind& kind) {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Average>) return "average";
        else if constexpr (std::is_same_v<T, WeightedAverage>) return "weighted average";
        else return k.rank.name();
      },
      kind);
}

std::size_t decide(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("cannot decide on an empty score vector");
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  return best;
}

double fuse_values(std::span<const double> values, const CombinerKind& kind) {
  if (values.empty()) throw std::invalid_argument("cannot fuse an empty value vector");
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Average>) {
          double s = 0;
          for (double v : values) s += v;
          return s / static_cast<double>(values.size());
        } else if constexpr (std::is_same_v<T, WeightedAverage>) {
          if (k.weights.size() != values.size())
            throw std::invalid_argument("weight count does not match ensemble size");
          double s = 0;
          for (std::size_t i = 0; i < values.size(); ++i) s += k.weights[i] * values[i];
          return s;
        } else {
          std::vector<double> sorted(values.begin(), values.end());
          std::sort(sorted.begin(), sorted.end());
          return os_of_sorted(sorted, k.rank);
        }
      },
      kind);
}

FusedScores combine_average(const ScoreMatrix& m, std::span<const double> weights) {
  check_matrix(m);
  if (!weights.empty()) {
    std::vector<double> w(weights.begin(), weights.end());
    return combine(m, make_weighted_average(std::move(w)));
  }
  return combine(m, Average{});
}

FusedScores combine_os(const ScoreMatrix& m, const RankSpec& rank) {
  return combine(m, OrderStat{rank});
}

FusedScores combine(const ScoreMatrix& m, const CombinerKind& kind) {
  check_matrix(m);
  if (const auto* w = std::get_if<WeightedAverage>(&kind);
      w && w->weights.size() != m.classifiers())
    throw std::invalid_argument("weight count does not match ensemble size");
  FusedScores out;
  out.values.resize(m.classes());
  std::vector<double> column(m.classifiers());
  for (std::size_t c = 0; c < m.classes(); ++c) {
    for (std::size_t i = 0; i < m.classifiers(); ++i) column[i] = m(i, c);
    out.values[c] = fuse_values(column, kind);
  }
  out.decided_class = decide(out.values);
  return out;
}

}  // namespace oscombine
