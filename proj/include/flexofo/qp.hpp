#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexofo::qp {

/// Two-sided general row: lo <= a.w <= hi. Use +-infinity for one-sided rows.
struct IneqRow {
  Eigen::VectorXd a;
  double lo;
  double hi;
};

/// Equality row: a.w = rhs.
struct EqRow {
  Eigen::VectorXd a;
  double rhs;
};

/// Strictly convex QP
///
///   min_w  w'Gw + 2 g'w
///   s.t.   box_lo <= w <= box_hi        (per-variable bounds)
///          lo_k <= a_k'w <= hi_k        (general rows)
///          a_j'w = rhs_j                (equality rows)
///
/// G must be symmetric positive definite. The objective equals
/// ||w + G^-1 g||_G^2 up to a constant, so the unconstrained minimizer is
/// w = -G^-1 g.
struct QpProblem {
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
  Eigen::VectorXd box_lo;
  Eigen::VectorXd box_hi;
  std::vector<IneqRow> ineqs;
  std::vector<EqRow> eqs;

  int vars() const { return static_cast<int>(g.size()); }

  /// Throws std::invalid_argument on dimension mismatch, non-SPD G
  /// (minimum eigenvalue <= 1e-12 relative), non-finite rows, or lo > hi.
  void validate() const;
};

enum class QpStatus { optimal, infeasible };

/// Identifies one flattened one-sided constraint of a QpProblem. Flattened
/// order: equalities first, then [lo, hi] per box variable, then [lo, hi]
/// per general row. Rows with infinite bound keep their slot but can never
/// become active.
struct RowRef {
  enum Kind { equality, box_lo, box_hi, ineq_lo, ineq_hi } kind;
  int index;  // equality/row index, or variable index for box rows
};

int flattened_rows(const QpProblem& p);
RowRef describe_row(const QpProblem& p, int flat_index);

struct QpResult {
  QpStatus status = QpStatus::infeasible;
  Eigen::VectorXd w;
  /// Flat indices of the binding constraints at the solution (equality rows
  /// are always listed).
  std::vector<int> active_set;
  /// One multiplier per flattened row, zero for inactive rows. Sign
  /// convention: stationarity reads 2Gw + 2g + sum_i lambda_i a_i = 0 with
  /// a_i the <=-normalized row and lambda_i >= 0 on inequalities.
  Eigen::VectorXd multipliers;
  double kkt_residual = 0.0;
  double objective = 0.0;
  /// Phase-1 optimal value (minimal achievable max constraint violation);
  /// > feasibility tolerance exactly when status == infeasible.
  double infeasibility = 0.0;
};

/// Raised when the active-set iteration exceeds its cycling guard of
/// 10 * (variables + flattened rows) iterations. Distinct from infeasible.
class QpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic primal active-set solve with a phase-1 feasibility stage.
/// Ties between equally blocking constraints are broken toward the lowest
/// flattened row index.
QpResult solve(const QpProblem& problem);

/// Max over stationarity residual, primal violation, dual violation and
/// complementary slackness for the given point and multipliers (flattened
/// layout as in QpResult::multipliers).
double verify_kkt(const QpProblem& problem, const Eigen::VectorXd& w,
                  const Eigen::VectorXd& multipliers);

constexpr double kFeasibilityTol = 1e-9;

}  // namespace flexofo::qp
