#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace oscombine {

// One pattern's classifier outputs: n classifiers by l classes, row major.
// Scores must be finite; rows are approximations of the class posteriors and
// need not sum to one.
class ScoreMatrix {
 public:
  ScoreMatrix(std::size_t classifiers, std::size_t classes, std::vector<double> data);

  std::size_t classifiers() const noexcept { return n_; }
  std::size_t classes() const noexcept { return l_; }

  double operator()(std::size_t m, std::size_t c) const noexcept { return data_[m * l_ + c]; }
  std::span<const double> row(std::size_t m) const noexcept {
    return {data_.data() + m * l_, l_};
  }
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t n_;
  std::size_t l_;
  std::vector<double> data_;
};

}  // namespace oscombine
