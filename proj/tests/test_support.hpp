#pragma once

// Shared helpers for the test suites: a portable deterministic RNG, random
// QP generation, and the brute-force grid-search oracle used to cross-check
// the active-set solver.

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <utility>

#include "flexofo/qp.hpp"

namespace testutil {

// mt19937_64 with an explicit uniform mapping so streams are identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    const double u = (engine_() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  int uniform_int(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::mt19937_64 engine_;
};

// Random SPD matrix with eigenvalues in [eig_lo, eig_hi].
inline Eigen::MatrixXd random_spd(Rng& rng, int n, double eig_lo,
                                  double eig_hi) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd eig(n);
  for (int i = 0; i < n; ++i) eig(i) = rng.uniform(eig_lo, eig_hi);
  return q * eig.asDiagonal() * q.transpose();
}

// Random box-and-rows QP with n in {1,2,3}. Box widths shrink with n so the
// 1e-3-resolution oracle stays fast. Roughly half the generated problems get
// extra inequality rows anchored at an interior point.
inline flexofo::qp::QpProblem random_qp(Rng& rng, int n) {
  flexofo::qp::QpProblem p;
  p.G = random_spd(rng, n, 0.2, 8.0);
  p.g = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) p.g(i) = rng.uniform(-1.5, 1.5);
  const double half_width = (n == 1) ? 1.0 : (n == 2) ? 0.15 : 0.03;
  p.box_lo = Eigen::VectorXd(n);
  p.box_hi = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) {
    p.box_lo(i) = rng.uniform(-half_width, -0.2 * half_width);
    p.box_hi(i) = rng.uniform(0.2 * half_width, half_width);
  }
  const int extra = rng.uniform_int(0, 2);
  Eigen::VectorXd anchor(n);
  for (int i = 0; i < n; ++i)
    anchor(i) = rng.uniform(p.box_lo(i), p.box_hi(i));
  for (int k = 0; k < extra; ++k) {
    flexofo::qp::IneqRow row;
    row.a = Eigen::VectorXd(n);
    for (int i = 0; i < n; ++i) row.a(i) = rng.uniform(-1.0, 1.0);
    const double at = row.a.dot(anchor);
    row.lo = -std::numeric_limits<double>::infinity();
    row.hi = at + rng.uniform(0.0, 0.5 * half_width);
    p.ineqs.push_back(row);
  }
  return p;
}

inline double qp_objective(const flexofo::qp::QpProblem& p,
                           const Eigen::VectorXd& w) {
  return w.dot(p.G * w) + 2.0 * p.g.dot(w);
}

// Dense grid scan over the box at the given resolution, feasibility
// filtered. Independent of the active-set path by construction.
inline std::optional<std::pair<Eigen::VectorXd, double>> grid_search_oracle(
    const flexofo::qp::QpProblem& p, double resolution) {
  const int n = p.vars();
  std::vector<int> steps(n);
  for (int i = 0; i < n; ++i) {
    steps[i] =
        static_cast<int>(std::floor((p.box_hi(i) - p.box_lo(i)) / resolution)) +
        1;
  }
  Eigen::VectorXd w(n);
  std::vector<int> idx(n, 0);
  bool found = false;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_w;
  while (true) {
    for (int i = 0; i < n; ++i)
      w(i) = std::min(p.box_lo(i) + idx[i] * resolution, p.box_hi(i));
    bool feasible = true;
    for (const auto& r : p.ineqs) {
      const double v = r.a.dot(w);
      if (v < r.lo || v > r.hi) {
        feasible = false;
        break;
      }
    }
    if (feasible) {
      const double obj = qp_objective(p, w);
      if (obj < best) {
        best = obj;
        best_w = w;
        found = true;
      }
    }
    int carry = 0;
    while (carry < n && ++idx[carry] >= steps[carry]) idx[carry++] = 0;
    if (carry == n) break;
  }
  if (!found) return std::nullopt;
  return std::make_pair(best_w, best);
}

}  // namespace testutil
