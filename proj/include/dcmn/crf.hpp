#pragma once

// Linear-chain CRF over per-timestep room scores.
//
// A label path y_1..y_T scores
//   start[y_1] + sum_t e[t][y_t] + sum_{t>=2} transitions[y_{t-1}][y_t]
// and the model's negative log-likelihood is log Z - score(gold). There is no
// end score: windows are arbitrary crops of a longer recording.

#include <span>
#include <vector>

#include "dcmn/autodiff.hpp"
#include "dcmn/types.hpp"

namespace dcmn::crf {

/// Score used in place of -infinity for forbidden transitions.
inline constexpr double kForbiddenScore = -1e4;

using Emissions = Matrix;  // T x n

struct TransitionMatrix {
  Matrix scores;  // n x n, from-room x to-room
  Vector start;   // n
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> forbidden;  // n x n, may be empty

  static TransitionMatrix zeros(int n);
  int size() const { return static_cast<int>(scores.rows()); }
  /// Scores with forbidden entries replaced by kForbiddenScore.
  Matrix effective_scores() const;
};

double path_score(const Emissions& e, std::span<const int> labels, const TransitionMatrix& tm);
double log_partition(const Emissions& e, const TransitionMatrix& tm);
double nll(const Emissions& e, std::span<const int> labels, const TransitionMatrix& tm);

struct Decoded {
  std::vector<int> labels;
  double score = 0.0;
};

/// Max-score path. Ties resolve toward the lower label id, first at the final
/// timestep and then at each backtracking step.
Decoded viterbi(const Emissions& e, const TransitionMatrix& tm);

struct Marginals {
  Matrix unary;     // T x n, P(y_t = j)
  Matrix pairwise;  // n x n, sum_t P(y_{t-1} = i, y_t = j)
  double log_z = 0.0;
};

/// Forward-backward posteriors; these are the gradients of log Z.
Marginals marginals(const Emissions& e, const TransitionMatrix& tm);

/// Batched NLL as a differentiable op. `emissions` holds B*T rows, sample-major;
/// `labels` holds B*T ids. Returns the sum of per-sample NLLs (1x1).
/// `forbidden` (optional) is applied to the transition scores.
ad::Var nll_op(const ad::Var& emissions, const ad::Var& transitions, const ad::Var& start,
               std::span<const int> labels, int steps,
               const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& forbidden = {});

}  // namespace dcmn::crf
