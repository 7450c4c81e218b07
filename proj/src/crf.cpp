#include "dcmn/crf.hpp"

#include <cmath>
#include <limits>

namespace dcmn::crf {

namespace {

void check(const Emissions& e, const TransitionMatrix& tm) {
  const int n = tm.size();
  require_dims(tm.scores.cols() == n && tm.start.size() == n, "crf: transition shape mismatch");
  require_dims(e.cols() == n, "crf: emissions have " + std::to_string(e.cols()) +
                                  " columns, transitions expect " + std::to_string(n));
  require_dims(e.rows() >= 1, "crf: need at least one timestep");
  require_dims(tm.forbidden.size() == 0 || (tm.forbidden.rows() == n && tm.forbidden.cols() == n),
               "crf: forbidden mask shape mismatch");
}

void check_labels(std::span<const int> labels, Eigen::Index steps, int n) {
  require_dims(static_cast<Eigen::Index>(labels.size()) == steps,
               "crf: label sequence length differs from emissions");
  for (int y : labels)
    if (y < 0 || y >= n) throw DomainError("crf: label id " + std::to_string(y) + " out of range");
}

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

// alpha(t, j) = log sum over prefixes ending in j at t.
Matrix forward_table(const Emissions& e, const Vector& start, const Matrix& trans) {
  const Eigen::Index steps = e.rows();
  const Eigen::Index n = e.cols();
  Matrix alpha(steps, n);
  alpha.row(0) = start.transpose() + e.row(0);
  Eigen::RowVectorXd col(n);
  for (Eigen::Index t = 1; t < steps; ++t)
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) col(i) = alpha(t - 1, i) + trans(i, j);
      alpha(t, j) = log_sum_exp(col) + e(t, j);
    }
  return alpha;
}

Matrix backward_table(const Emissions& e, const Matrix& trans) {
  const Eigen::Index steps = e.rows();
  const Eigen::Index n = e.cols();
  Matrix beta = Matrix::Zero(steps, n);
  Eigen::RowVectorXd col(n);
  for (Eigen::Index t = steps - 2; t >= 0; --t)
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) col(j) = trans(i, j) + e(t + 1, j) + beta(t + 1, j);
      beta(t, i) = log_sum_exp(col);
    }
  return beta;
}

Marginals marginals_impl(const Emissions& e, const Vector& start, const Matrix& trans) {
  const Eigen::Index steps = e.rows();
  const Eigen::Index n = e.cols();
  const Matrix alpha = forward_table(e, start, trans);
  const Matrix beta = backward_table(e, trans);
  Marginals m;
  m.log_z = log_sum_exp(alpha.row(steps - 1));
  m.unary = ((alpha + beta).array() - m.log_z).exp().matrix();
  m.pairwise = Matrix::Zero(n, n);
  for (Eigen::Index t = 1; t < steps; ++t)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        m.pairwise(i, j) +=
            std::exp(alpha(t - 1, i) + trans(i, j) + e(t, j) + beta(t, j) - m.log_z);
  return m;
}

}  // namespace

TransitionMatrix TransitionMatrix::zeros(int n) {
  return {Matrix::Zero(n, n), Vector::Zero(n), {}};
}

Matrix TransitionMatrix::effective_scores() const {
  if (forbidden.size() == 0) return scores;
  Matrix s = scores;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      if (forbidden(i, j)) s(i, j) = kForbiddenScore;
  return s;
}

double path_score(const Emissions& e, std::span<const int> labels, const TransitionMatrix& tm) {
  check(e, tm);
  check_labels(labels, e.rows(), tm.size());
  const Matrix trans = tm.effective_scores();
  double s = tm.start[labels[0]] + e(0, labels[0]);
  for (std::size_t t = 1; t < labels.size(); ++t)
    s += trans(labels[t - 1], labels[t]) + e(static_cast<Eigen::Index>(t), labels[t]);
  return s;
}

double log_partition(const Emissions& e, const TransitionMatrix& tm) {
  check(e, tm);
  const Matrix alpha = forward_table(e, tm.start, tm.effective_scores());
  return log_sum_exp(alpha.row(e.rows() - 1));
}

double nll(const Emissions& e, std::span<const int> labels, const TransitionMatrix& tm) {
  // Rounding can leave a tiny negative value when the gold path owns all mass.
  return std::max(0.0, log_partition(e, tm) - path_score(e, labels, tm));
}

Decoded viterbi(const Emissions& e, const TransitionMatrix& tm) {
  check(e, tm);
  const Eigen::Index steps = e.rows();
  const Eigen::Index n = e.cols();
  const Matrix trans = tm.effective_scores();
  Matrix best(steps, n);
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> back(steps, n);
  best.row(0) = tm.start.transpose() + e.row(0);
  for (Eigen::Index t = 1; t < steps; ++t)
    for (Eigen::Index j = 0; j < n; ++j) {
      int arg = 0;
      double top = best(t - 1, 0) + trans(0, j);
      for (Eigen::Index i = 1; i < n; ++i) {
        const double cand = best(t - 1, i) + trans(i, j);
        if (cand > top) {
          top = cand;
          arg = static_cast<int>(i);
        }
      }
      best(t, j) = top + e(t, j);
      back(t, j) = arg;
    }
  Decoded out;
  out.labels.assign(static_cast<std::size_t>(steps), 0);
  int last = 0;
  for (Eigen::Index j = 1; j < n; ++j)
    if (best(steps - 1, j) > best(steps - 1, last)) last = static_cast<int>(j);
  out.labels.back() = last;
  for (Eigen::Index t = steps - 1; t > 0; --t)
    out.labels[static_cast<std::size_t>(t - 1)] = back(t, out.labels[static_cast<std::size_t>(t)]);
  out.score = path_score(e, out.labels, tm);
  return out;
}

Marginals marginals(const Emissions& e, const TransitionMatrix& tm) {
  check(e, tm);
  return marginals_impl(e, tm.start, tm.effective_scores());
}

ad::Var nll_op(const ad::Var& emissions, const ad::Var& transitions, const ad::Var& start,
               std::span<const int> labels, int steps,
               const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& forbidden) {
  const Eigen::Index n = emissions.cols();
  require_dims(steps >= 1 && emissions.rows() % steps == 0, "crf::nll_op: rows not a multiple of T");
  require_dims(transitions.rows() == n && transitions.cols() == n, "crf::nll_op: transitions shape");
  require_dims(start.rows() == 1 && start.cols() == n, "crf::nll_op: start must be 1 x n");
  require_dims(static_cast<Eigen::Index>(labels.size()) == emissions.rows(),
               "crf::nll_op: one label per row required");
  TransitionMatrix tm{transitions.value(), start.value().row(0).transpose(), forbidden};
  const Matrix trans = tm.effective_scores();
  const Eigen::Index batch = emissions.rows() / steps;

  Matrix d_emissions = Matrix::Zero(emissions.rows(), n);
  Matrix d_trans = Matrix::Zero(n, n);
  Matrix d_start = Matrix::Zero(1, n);
  double total = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Matrix e = emissions.value().middleRows(b * steps, steps);
    const auto y = labels.subspan(static_cast<std::size_t>(b * steps), static_cast<std::size_t>(steps));
    const Marginals m = marginals_impl(e, tm.start, trans);
    total += m.log_z - path_score(e, y, tm);
    d_emissions.middleRows(b * steps, steps) = m.unary;
    d_trans += m.pairwise;
    d_start.row(0) += m.unary.row(0);
    for (Eigen::Index t = 0; t < steps; ++t) {
      d_emissions(b * steps + t, y[static_cast<std::size_t>(t)]) -= 1.0;
      if (t > 0) d_trans(y[static_cast<std::size_t>(t - 1)], y[static_cast<std::size_t>(t)]) -= 1.0;
    }
    d_start(0, y[0]) -= 1.0;
  }
  // Masked entries are constants, not functions of the parameter.
  if (forbidden.size() != 0)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (forbidden(i, j)) d_trans(i, j) = 0.0;

  Matrix v(1, 1);
  v(0, 0) = total;
  return ad::make_op(std::move(v), {emissions, transitions, start},
                     [d_emissions = std::move(d_emissions), d_trans = std::move(d_trans),
                      d_start = std::move(d_start)](ad::Node& out) {
                       const double g = out.grad(0, 0);
                       out.inputs[0]->accumulate(d_emissions * g);
                       out.inputs[1]->accumulate(d_trans * g);
                       out.inputs[2]->accumulate(d_start * g);
                     });
}

}  // namespace dcmn::crf
