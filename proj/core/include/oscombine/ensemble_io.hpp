#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "oscombine/combiners.hpp"

namespace oscombine {

// Scores for every (pattern, classifier) pair, densely stored in sorted
// (pattern_id, classifier_id) order.
struct ScoreDataset {
  std::vector<std::string> classifier_ids;  // sorted, unique
  std::vector<std::string> pattern_ids;     // sorted, unique
  std::vector<std::size_t> true_labels;     // per pattern
  std::size_t classes = 0;
  std::vector<double> scores;  // [pattern][classifier][class]

  std::size_t classifiers() const noexcept { return classifier_ids.size(); }
  std::size_t patterns() const noexcept { return pattern_ids.size(); }
  std::span<const double> scores_of(std::size_t pattern, std::size_t classifier) const;
  std::size_t classifier_index(const std::string& id) const;  // throws if unknown

  // Score matrix for one pattern; subset entries are classifier indices and
  // may repeat (replicating a classifier's output inside the ensemble).
  ScoreMatrix matrix_for(std::size_t pattern, std::span<const std::size_t> subset = {}) const;
};

// Strict reader for the score CSV grammar
//   pattern_id,true_label,classifier_id,score_0,...,score_{L-1}
// Rejects non-finite scores, duplicate (pattern, classifier) rows, label
// disagreement within a pattern, and patterns missing any classifier; error
// messages carry the 1-based row number or the offending ids.
ScoreDataset load_scores(const std::string& path);
ScoreDataset load_scores(std::istream& in, const std::string& name);
std::string scores_csv(const ScoreDataset& ds);

struct CorrelationReport {
  std::vector<std::string> classifier_ids;
  std::size_t classes = 0;
  std::size_t patterns = 0;
  // Per class: n x n Pearson correlations of error proxies score - target;
  // NaN marks pairs left undefined by a zero-variance classifier.
  std::vector<std::vector<double>> pairwise;
  std::vector<double> class_delta;  // mean off-diagonal correlation per class
  std::vector<double> priors;      // empirical class frequencies
  double overall = 0;              // prior-weighted mean of the defined class deltas
  std::vector<std::string> warnings;
};

// Requires at least 2 classifiers and 3 patterns.
CorrelationReport estimate_correlation(const ScoreDataset& ds);

struct EnsembleEvaluation {
  std::vector<std::string> classifier_ids;  // as evaluated; may repeat
  std::vector<double> individual_error;     // fraction in [0, 1]
  double combined_error = 0;
  std::size_t patterns = 0;
  std::string combiner;
};

// subset: classifier ids, duplicates allowed; empty = all classifiers once.
EnsembleEvaluation evaluate_ensemble(const ScoreDataset& ds, const CombinerKind& kind,
                                     std::span<const std::string> subset = {});

struct GroupEvaluation {
  std::vector<EnsembleEvaluation> groups;
  double combined_mean = 0;
  double combined_std = 0;  // population std across groups; 0 for a single group
};
GroupEvaluation evaluate_groups(std::span<const ScoreDataset> groups, const CombinerKind& kind,
                                std::span<const std::string> subset = {});

// Builds an odd-n ensemble from two families of runs: the family with the
// lower mean individual error contributes ceil(n/2) runs, the other floor(n/2),
// each taken in the given order. Mean-error ties keep family_a first.
std::vector<std::string> odd_n_mixed_subset(const ScoreDataset& ds,
                                            std::span<const std::string> family_a,
                                            std::span<const std::string> family_b, std::size_t n);

std::string to_json(const CorrelationReport& r);
std::string to_table(const CorrelationReport& r);
std::string to_json(const GroupEvaluation& g);
std::string to_table(const GroupEvaluation& g);

}  // namespace oscombine
