#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "oscombine/score_matrix.hpp"

namespace oscombine {

// Selects an order statistic from a sample of size n; ranks are 1-based.
// Median with even n is the mean of the two central order statistics.
class RankSpec {
 public:
  enum class Kind { Min, Max, Median, Exact };

  static RankSpec min() noexcept { return RankSpec{Kind::Min, 0}; }
  static RankSpec max() noexcept { return RankSpec{Kind::Max, 0}; }
  static RankSpec median() noexcept { return RankSpec{Kind::Median, 0}; }
  static RankSpec exact(std::size_t rank);

  Kind kind() const noexcept { return kind_; }
  std::size_t exact_rank() const noexcept { return rank_; }

  // 0-based positions within a sorted sample of size n; lo == hi except for
  // the even-n median, whose two positions are averaged.
  // Throws std::invalid_argument if an exact rank exceeds n.
  std::pair<std::size_t, std::size_t> positions(std::size_t n) const;

  std::string name() const;

 private:
  RankSpec(Kind k, std::size_t r) : kind_(k), rank_(r) {}
  Kind kind_;
  std::size_t rank_;
};

struct Average {};
struct WeightedAverage {
  std::vector<double> weights;  // nonnegative, summing to one
};
struct OrderStat {
  RankSpec rank;
};
using CombinerKind = std::variant<Average, WeightedAverage, OrderStat>;

// Validates weights (finite, nonnegative, sum within 1e-12 of one).
CombinerKind make_weighted_average(std::vector<double> weights);
std::string combiner_name(const CombinerKind& kind);

struct FusedScores {
  std::vector<double> values;   // one fused score per class
  std::size_t decided_class;    // argmax; ties go to the lowest index
};

std::size_t decide(std::span<const double> scores);

// Applies a combiner to one class's n scores.
double fuse_values(std::span<const double> values, const CombinerKind& kind);

FusedScores combine_average(const ScoreMatrix& m, std::span<const double> weights = {});
FusedScores combine_os(const ScoreMatrix& m, const RankSpec& rank);
FusedScores combine(const ScoreMatrix& m, const CombinerKind& kind);

}  // namespace oscombine
