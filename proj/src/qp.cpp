#include "flexofo/qp.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace flexofo::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One-sided row a.w <= b with a back-reference into the problem.
struct FlatRow {
  Eigen::VectorXd a;
  double b;
  bool is_equality;
  bool never_active;  // infinite bound
};

std::vector<FlatRow> flatten(const QpProblem& p) {
  const int n = p.vars();
  std::vector<FlatRow> rows;
  rows.reserve(flattened_rows(p));
  for (const auto& eq : p.eqs) rows.push_back({eq.a, eq.rhs, true, false});
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd lo = Eigen::VectorXd::Zero(n);
    lo(j) = -1.0;
    rows.push_back({lo, p.box_lo.size() ? -p.box_lo(j) : kInf, false,
                    !p.box_lo.size() || !std::isfinite(p.box_lo(j))});
    Eigen::VectorXd hi = Eigen::VectorXd::Zero(n);
    hi(j) = 1.0;
    rows.push_back({hi, p.box_hi.size() ? p.box_hi(j) : kInf, false,
                    !p.box_hi.size() || !std::isfinite(p.box_hi(j))});
  }
  for (const auto& r : p.ineqs) {
    rows.push_back({-r.a, -r.lo, false, !std::isfinite(r.lo)});
    rows.push_back({r.a, r.hi, false, !std::isfinite(r.hi)});
  }
  return rows;
}

struct ActiveSetOutcome {
  Eigen::VectorXd w;
  std::vector<int> working;       // flat indices
  Eigen::VectorXd working_lambda; // aligned with `working`
};

// Equality-constrained step: minimize (w+d)'G(w+d) + 2g'(w+d) subject to
// A_W (w+d) = b_W. Returns d and the multipliers of the working rows.
void kkt_step(const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
              const std::vector<FlatRow>& rows, const std::vector<int>& working,
              const Eigen::VectorXd& w, Eigen::VectorXd& d,
              Eigen::VectorXd& lambda) {
  const int n = static_cast<int>(w.size());
  const int m = static_cast<int>(working.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = 2.0 * G;
  Eigen::VectorXd rhs(n + m);
  rhs.head(n) = -(2.0 * G * w + 2.0 * g);
  for (int i = 0; i < m; ++i) {
    const FlatRow& r = rows[working[i]];
    kkt.block(0, n + i, n, 1) = r.a;
    kkt.block(n + i, 0, 1, n) = r.a.transpose();
    rhs(n + i) = r.b - r.a.dot(w);  // keep held rows pinned against drift
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  Eigen::VectorXd sol = lu.solve(rhs);
  d = sol.head(n);
  lambda = sol.tail(m);
}

// true if `candidate` is linearly independent of the working rows
bool independent_of(const std::vector<FlatRow>& rows,
                    const std::vector<int>& working, int candidate) {
  if (working.empty()) return true;
  const int n = static_cast<int>(rows[candidate].a.size());
  Eigen::MatrixXd A(static_cast<int>(working.size()) + 1, n);
  for (int i = 0; i < static_cast<int>(working.size()); ++i)
    A.row(i) = rows[working[i]].a.transpose();
  A.row(static_cast<int>(working.size())) = rows[candidate].a.transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A.transpose());
  return qr.rank() == A.rows();
}

// Primal active-set iteration from a feasible start. `fixed_working` rows
// (equalities) never leave the working set.
ActiveSetOutcome active_set_minimize(const Eigen::MatrixXd& G,
                                     const Eigen::VectorXd& g,
                                     const std::vector<FlatRow>& rows,
                                     Eigen::VectorXd w,
                                     std::vector<int> working,
                                     int fixed_working, int guard) {
  const int n = static_cast<int>(w.size());
  Eigen::VectorXd d, lambda;
  for (int iter = 0; iter < guard; ++iter) {
    kkt_step(G, g, rows, working, w, d, lambda);
    const double step_norm = d.size() ? d.lpNorm<Eigen::Infinity>() : 0.0;
    if (step_norm <= 1e-11 * std::max(1.0, w.lpNorm<Eigen::Infinity>())) {
      // stationary on the working set; check inequality multipliers
      int drop = -1;
      double most_negative = -1e-9;
      for (int i = fixed_working; i < static_cast<int>(working.size()); ++i) {
        if (lambda(i) < most_negative) {
          most_negative = lambda(i);
          drop = i;
        }
      }
      if (drop < 0) return {w, working, lambda};
      working.erase(working.begin() + drop);
      continue;
    }
    // largest alpha in [0,1] keeping all inactive rows satisfied
    double alpha = 1.0;
    int blocker = -1;
    for (int idx = 0; idx < static_cast<int>(rows.size()); ++idx) {
      const FlatRow& r = rows[idx];
      if (r.never_active || r.is_equality) continue;
      if (std::find(working.begin(), working.end(), idx) != working.end())
        continue;
      const double adot = r.a.dot(d);
      if (adot <= 1e-13) continue;
      const double slack = r.b - r.a.dot(w);
      const double a_i = std::max(0.0, slack) / adot;
      if (a_i < alpha - 1e-12) {
        alpha = a_i;
        blocker = idx;
      } else if (blocker >= 0 && a_i <= alpha + 1e-12 && idx < blocker) {
        blocker = idx;  // lowest row index enters on ties
      }
    }
    w += alpha * d;
    if (blocker >= 0) {
      if (independent_of(rows, working, blocker))
        working.push_back(blocker);
      // dependent blockers are kept out; the guard catches pathological loops
    }
  }
  throw QpError("active-set cycling guard tripped after " +
                std::to_string(guard) + " iterations");
}

double max_violation(const std::vector<FlatRow>& rows,
                     const Eigen::VectorXd& w) {
  double v = 0.0;
  for (const auto& r : rows) {
    if (r.never_active) continue;
    const double resid = r.a.dot(w) - r.b;
    v = std::max(v, r.is_equality ? std::abs(resid) : resid);
  }
  return v;
}

}  // namespace

void QpProblem::validate() const {
  const int n = vars();
  if (G.rows() != n || G.cols() != n)
    throw std::invalid_argument("QpProblem: G dimensions do not match g");
  if (!G.allFinite() || !g.allFinite())
    throw std::invalid_argument("QpProblem: G/g must be finite");
  if ((G - G.transpose()).lpNorm<Eigen::Infinity>() >
      1e-12 * std::max(1.0, G.lpNorm<Eigen::Infinity>()))
    throw std::invalid_argument("QpProblem: G must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  if (es.eigenvalues().minCoeff() <= 1e-12)
    throw std::invalid_argument("QpProblem: G must be positive definite");
  if (box_lo.size() != box_hi.size())
    throw std::invalid_argument("QpProblem: box bounds length mismatch");
  if (box_lo.size() && box_lo.size() != n)
    throw std::invalid_argument("QpProblem: box bounds length != vars");
  for (int j = 0; j < box_lo.size(); ++j)
    if (box_lo(j) > box_hi(j))
      throw std::invalid_argument("QpProblem: box lo > hi");
  for (const auto& r : ineqs) {
    if (r.a.size() != n || !r.a.allFinite())
      throw std::invalid_argument("QpProblem: inequality row malformed");
    if (r.lo > r.hi) throw std::invalid_argument("QpProblem: row lo > hi");
  }
  for (const auto& e : eqs)
    if (e.a.size() != n || !e.a.allFinite() || !std::isfinite(e.rhs))
      throw std::invalid_argument("QpProblem: equality row malformed");
}

int flattened_rows(const QpProblem& p) {
  return static_cast<int>(p.eqs.size()) + 2 * p.vars() +
         2 * static_cast<int>(p.ineqs.size());
}

RowRef describe_row(const QpProblem& p, int flat_index) {
  const int n_eq = static_cast<int>(p.eqs.size());
  const int n = p.vars();
  if (flat_index < n_eq) return {RowRef::equality, flat_index};
  flat_index -= n_eq;
  if (flat_index < 2 * n)
    return {flat_index % 2 == 0 ? RowRef::box_lo : RowRef::box_hi,
            flat_index / 2};
  flat_index -= 2 * n;
  return {flat_index % 2 == 0 ? RowRef::ineq_lo : RowRef::ineq_hi,
          flat_index / 2};
}

QpResult solve(const QpProblem& problem) {
  problem.validate();
  const int n = problem.vars();
  const std::vector<FlatRow> rows = flatten(problem);
  const int m = static_cast<int>(rows.size());
  const int guard = 10 * (n + m);

  // find a feasible starting point
  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(n);
  bool have_start = max_violation(rows, w0) <= kFeasibilityTol;
  double phase1_value = 0.0;
  if (!have_start) {
    // phase 1 over z = (w, s): minimize s^2 + eps ||w||^2 subject to
    // a_i'w - s <= b_i (equalities contribute both directions), s >= 0.
    const double eps = 1e-8;
    Eigen::MatrixXd G1 = Eigen::MatrixXd::Identity(n + 1, n + 1) * eps;
    G1(n, n) = 1.0;
    std::vector<FlatRow> rows1;
    rows1.reserve(2 * m + 1);
    for (const auto& r : rows) {
      if (r.never_active) continue;
      Eigen::VectorXd a1(n + 1);
      a1.head(n) = r.a;
      a1(n) = -1.0;
      rows1.push_back({a1, r.b, false, false});
      if (r.is_equality) {
        Eigen::VectorXd a2(n + 1);
        a2.head(n) = -r.a;
        a2(n) = -1.0;
        rows1.push_back({a2, -r.b, false, false});
      }
    }
    Eigen::VectorXd smin = Eigen::VectorXd::Zero(n + 1);
    smin(n) = -1.0;
    rows1.push_back({smin, 0.0, false, false});  // s >= 0

    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(n + 1);
    z0(n) = max_violation(rows, w0) + 1.0;
    ActiveSetOutcome ph1 = active_set_minimize(
        G1, Eigen::VectorXd::Zero(n + 1), rows1, z0, {}, 0,
        10 * (n + 1 + static_cast<int>(rows1.size())));
    phase1_value = ph1.w(n);
    if (phase1_value > kFeasibilityTol) {
      QpResult res;
      res.status = QpStatus::infeasible;
      res.infeasibility = phase1_value;
      res.w = Eigen::VectorXd::Zero(n);
      res.multipliers = Eigen::VectorXd::Zero(m);
      return res;
    }
    w0 = ph1.w.head(n);
    // clip residual tolerance-level violations on the box
    if (problem.box_lo.size())
      for (int j = 0; j < n; ++j)
        w0(j) = std::min(std::max(w0(j), problem.box_lo(j)), problem.box_hi(j));
  }

  // initial working set: all equality rows
  std::vector<int> working;
  for (int i = 0; i < static_cast<int>(problem.eqs.size()); ++i)
    working.push_back(i);

  ActiveSetOutcome out =
      active_set_minimize(problem.G, problem.g, rows, w0, working,
                          static_cast<int>(problem.eqs.size()), guard);

  QpResult res;
  res.status = QpStatus::optimal;
  res.w = out.w;
  res.active_set = out.working;
  std::sort(res.active_set.begin(), res.active_set.end());
  res.multipliers = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < static_cast<int>(out.working.size()); ++i) {
    double l = out.working_lambda(i);
    if (!rows[out.working[i]].is_equality) l = std::max(l, 0.0);
    res.multipliers(out.working[i]) = l;
  }
  res.objective = out.w.dot(problem.G * out.w) + 2.0 * problem.g.dot(out.w);
  res.kkt_residual = verify_kkt(problem, res.w, res.multipliers);
  res.infeasibility = phase1_value;
  return res;
}

double verify_kkt(const QpProblem& problem, const Eigen::VectorXd& w,
                  const Eigen::VectorXd& multipliers) {
  const std::vector<FlatRow> rows = flatten(problem);
  if (multipliers.size() != static_cast<int>(rows.size()))
    throw std::invalid_argument("verify_kkt: multiplier length mismatch");
  Eigen::VectorXd stat = 2.0 * problem.G * w + 2.0 * problem.g;
  double primal = 0.0, dual = 0.0, comp = 0.0;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    const FlatRow& r = rows[i];
    if (r.never_active) continue;
    stat += multipliers(i) * r.a;
    const double resid = r.a.dot(w) - r.b;
    if (r.is_equality) {
      primal = std::max(primal, std::abs(resid));
    } else {
      primal = std::max(primal, resid);
      dual = std::max(dual, -multipliers(i));
      comp = std::max(comp, std::abs(multipliers(i) * resid));
    }
  }
  return std::max({stat.lpNorm<Eigen::Infinity>(), primal, dual, comp});
}

}  // namespace flexofo::qp
