#pragma once

// Dense two-phase simplex for the small linear programs used by the
// geometry, eta and control modules (tens of variables and rows).

#include <cstddef>
#include <vector>

namespace mwfair::lp {

enum class Sense { less_equal, equal, greater_equal };
enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Result {
  Status status = Status::infeasible;
  std::vector<double> x;  // one value per declared variable
  double objective = 0.0;

  [[nodiscard]] bool optimal() const noexcept { return status == Status::optimal; }
};

/// Variables are non-negative unless marked free. Bland's rule is used
/// throughout, so degenerate problems terminate.
class Problem {
 public:
  explicit Problem(std::size_t num_vars);

  void set_free(std::size_t var);
  void set_objective(std::vector<double> coeffs, bool maximize);
  void add_row(std::vector<double> coeffs, Sense sense, double rhs);

  [[nodiscard]] std::size_t num_vars() const noexcept { return num_vars_; }
  [[nodiscard]] std::size_t num_rows() const noexcept { return rows_.size(); }

  [[nodiscard]] Result solve(double tol = 1e-10) const;

 private:
  struct Row {
    std::vector<double> coeffs;
    Sense sense;
    double rhs;
  };

  std::size_t num_vars_;
  std::vector<bool> free_;
  std::vector<double> objective_;
  bool maximize_ = true;
  std::vector<Row> rows_;
};

}  // namespace mwfair::lp
