#pragma once

#include <cstddef>
#include <vector>

namespace codekg {

// Maximum-weight one-to-one assignment on a rectangular weight matrix
// (Hungarian algorithm, O(n^3)). Returns, for every row, the matched column or
// -1. Weights should be non-negative; zero-weight pairs may be left unmatched.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights);

double assignment_weight(const std::vector<std::vector<double>>& weights,
                         const std::vector<int>& assignment);

struct ScoredPair {
  std::size_t row = 0;
  std::size_t col = 0;
  double score = 0;
};

// One-to-one selection from candidate pairs, highest score first. The result's
// scores, sorted descending, are lexicographically maximal over all one-to-one
// selections: without ties this is plain greedy with (row, col) order, with
// ties an exact assignment over score levels decides. Returned sorted by
// score, then (row, col).
std::vector<ScoredPair> greedy_match(std::vector<ScoredPair> candidates);

}  // namespace codekg
