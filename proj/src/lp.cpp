#include "mwfair/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mwfair::lp {

Problem::Problem(std::size_t num_vars)
    : num_vars_(num_vars), free_(num_vars, false), objective_(num_vars, 0.0) {}

void Problem::set_free(std::size_t var) { free_.at(var) = true; }

void Problem::set_objective(std::vector<double> coeffs, bool maximize) {
  if (coeffs.size() != num_vars_) throw std::invalid_argument("objective size mismatch");
  objective_ = std::move(coeffs);
  maximize_ = maximize;
}

void Problem::add_row(std::vector<double> coeffs, Sense sense, double rhs) {
  if (coeffs.size() != num_vars_) throw std::invalid_argument("row size mismatch");
  rows_.push_back(Row{std::move(coeffs), sense, rhs});
}

namespace {

// Tableau in the usual layout: rows 0..m-1 are constraints, row m is the
// reduced-cost row of a maximization; the last column is the rhs.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), a_((rows + 1) * (cols + 1), 0.0) {}

  double& at(std::size_t r, std::size_t c) { return a_[r * (n_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return a_[r * (n_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, n_); }
  double& cost(std::size_t c) { return at(m_, c); }

  void pivot(std::size_t pr, std::size_t pc) {
    const double p = at(pr, pc);
    for (std::size_t c = 0; c <= n_; ++c) at(pr, c) /= p;
    at(pr, pc) = 1.0;
    for (std::size_t r = 0; r <= m_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= n_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
  }

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

 private:
  std::size_t m_, n_;
  std::vector<double> a_;
};

// Runs simplex iterations on the cost row; columns with allowed[c] == false never enter.
Status iterate(Tableau& t, std::vector<std::size_t>& basis, const std::vector<bool>& allowed, double tol) {
  const std::size_t max_iter = 50000;
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::size_t enter = t.cols();
    for (std::size_t c = 0; c < t.cols(); ++c) {
      if (allowed[c] && t.cost(c) < -tol) {
        enter = c;
        break;
      }
    }
    if (enter == t.cols()) return Status::optimal;

    std::size_t leave = t.rows();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const double a = t.at(r, enter);
      if (a <= tol) continue;
      const double ratio = t.rhs(r) / a;
      if (ratio < best - 1e-14 || (std::abs(ratio - best) <= 1e-14 && leave < t.rows() && basis[r] < basis[leave])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave == t.rows()) return Status::unbounded;
    t.pivot(leave, enter);
    basis[leave] = enter;
  }
  return Status::iteration_limit;
}

}  // namespace

Result Problem::solve(double tol) const {
  // Column layout: structural (free vars get +,- pair), then slack/surplus, then artificials.
  std::vector<std::size_t> plus_col(num_vars_), minus_col(num_vars_, SIZE_MAX);
  std::size_t ncol = 0;
  for (std::size_t j = 0; j < num_vars_; ++j) {
    plus_col[j] = ncol++;
    if (free_[j]) minus_col[j] = ncol++;
  }
  const std::size_t n_struct = ncol;
  const std::size_t m = rows_.size();

  struct Norm {
    std::vector<double> a;
    Sense sense;
    double b;
  };
  std::vector<Norm> rows;
  rows.reserve(m);
  std::size_t n_slack = 0, n_art = 0;
  for (const auto& row : rows_) {
    Norm nr{std::vector<double>(n_struct, 0.0), row.sense, row.rhs};
    for (std::size_t j = 0; j < num_vars_; ++j) {
      nr.a[plus_col[j]] = row.coeffs[j];
      if (free_[j]) nr.a[minus_col[j]] = -row.coeffs[j];
    }
    if (nr.b < 0.0) {
      for (double& v : nr.a) v = -v;
      nr.b = -nr.b;
      if (nr.sense == Sense::less_equal)
        nr.sense = Sense::greater_equal;
      else if (nr.sense == Sense::greater_equal)
        nr.sense = Sense::less_equal;
    }
    if (nr.sense != Sense::equal) ++n_slack;
    if (nr.sense != Sense::less_equal) ++n_art;
    rows.push_back(std::move(nr));
  }

  const std::size_t total = n_struct + n_slack + n_art;
  Tableau t(m, total);
  std::vector<std::size_t> basis(m);
  std::vector<bool> is_art(total, false);
  std::size_t slack = n_struct, art = n_struct + n_slack;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n_struct; ++c) t.at(r, c) = rows[r].a[c];
    t.rhs(r) = rows[r].b;
    switch (rows[r].sense) {
      case Sense::less_equal:
        t.at(r, slack) = 1.0;
        basis[r] = slack++;
        break;
      case Sense::greater_equal:
        t.at(r, slack++) = -1.0;
        t.at(r, art) = 1.0;
        is_art[art] = true;
        basis[r] = art++;
        break;
      case Sense::equal:
        t.at(r, art) = 1.0;
        is_art[art] = true;
        basis[r] = art++;
        break;
    }
  }

  double scale = 1.0;
  for (const auto& r : rows) scale = std::max(scale, std::abs(r.b));

  Result result;
  result.x.assign(num_vars_, 0.0);

  // Phase 1: maximize -sum(artificials).
  std::vector<bool> allowed(total, true);
  if (n_art > 0) {
    for (std::size_t c = 0; c <= total; ++c) t.cost(c) = 0.0;
    for (std::size_t c = 0; c < total; ++c)
      if (is_art[c]) t.cost(c) = 1.0;
    for (std::size_t r = 0; r < m; ++r) {
      if (!is_art[basis[r]]) continue;
      for (std::size_t c = 0; c <= total; ++c) t.cost(c) -= t.at(r, c);
    }
    const Status s1 = iterate(t, basis, allowed, tol);
    if (s1 == Status::iteration_limit) {
      result.status = s1;
      return result;
    }
    if (-t.cost(total) > 1e-9 * scale) {
      result.status = Status::infeasible;
      return result;
    }
    // Drive zero-valued artificials out of the basis where possible.
    for (std::size_t r = 0; r < m; ++r) {
      if (!is_art[basis[r]]) continue;
      std::size_t pc = total;
      double best = tol;
      for (std::size_t c = 0; c < total; ++c) {
        if (is_art[c]) continue;
        if (std::abs(t.at(r, c)) > best) {
          best = std::abs(t.at(r, c));
          pc = c;
        }
      }
      if (pc != total) {
        t.pivot(r, pc);
        basis[r] = pc;
      }
      // Otherwise the row is redundant; its artificial stays basic at zero.
    }
    for (std::size_t c = 0; c < total; ++c)
      if (is_art[c]) allowed[c] = false;
  }

  // Phase 2: reduced costs for the real objective (internally maximize).
  std::vector<double> cost(total + 1, 0.0);
  const double sign = maximize_ ? 1.0 : -1.0;
  for (std::size_t j = 0; j < num_vars_; ++j) {
    cost[plus_col[j]] = -sign * objective_[j];
    if (free_[j]) cost[minus_col[j]] = sign * objective_[j];
  }
  for (std::size_t c = 0; c <= total; ++c) t.cost(c) = cost[c];
  for (std::size_t r = 0; r < m; ++r) {
    const double f = t.cost(basis[r]);
    if (f == 0.0) continue;
    for (std::size_t c = 0; c <= total; ++c) t.cost(c) -= f * t.at(r, c);
  }
  const Status s2 = iterate(t, basis, allowed, tol);
  result.status = s2;
  if (s2 != Status::optimal) return result;

  std::vector<double> col_value(total, 0.0);
  for (std::size_t r = 0; r < m; ++r) col_value[basis[r]] = t.rhs(r);
  for (std::size_t j = 0; j < num_vars_; ++j) {
    result.x[j] = col_value[plus_col[j]];
    if (free_[j]) result.x[j] -= col_value[minus_col[j]];
  }
  result.objective = 0.0;
  for (std::size_t j = 0; j < num_vars_; ++j) result.objective += objective_[j] * result.x[j];
  return result;
}

}  // namespace mwfair::lp
