#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace flexofo {

/// Stacked control input u = [p; q] for the controlled units, in kW / kVAr.
/// Entry i is active power of unit i, entry units()+i its reactive power.
struct ControlVector {
  Eigen::VectorXd stacked;

  ControlVector() = default;
  explicit ControlVector(Eigen::VectorXd values) : stacked(std::move(values)) {
    if (stacked.size() % 2 != 0)
      throw std::invalid_argument("ControlVector: stacked length must be even");
  }

  static ControlVector zero(int units) {
    return ControlVector(Eigen::VectorXd::Zero(2 * units));
  }

  int units() const { return static_cast<int>(stacked.size()) / 2; }
  double p(int i) const { return stacked(i); }
  double q(int i) const { return stacked(units() + i); }
  void set_p(int i, double v) { stacked(i) = v; }
  void set_q(int i, double v) { stacked(units() + i) = v; }

  bool all_finite() const { return stacked.allFinite(); }
};

/// Plant outputs the controller sees: voltage magnitudes at every non-slack
/// bus (grid bus order, index = bus - 1) and the active power flow over the
/// point of common coupling. p_pcc is signed positive for import from the
/// upper-level grid.
struct Measurement {
  Eigen::VectorXd v_pu;
  double p_pcc_kw = 0.0;
};

/// Constant input/output sensitivities around an operating point.
/// h_p(j)    = d p_pcc / d u_j   (dimensionless, kW per kW / kW per kVAr)
/// h_v(i, j) = d v_i   / d u_j   (p.u. per kW / p.u. per kVAr), one row per
/// non-slack bus in grid order.
struct Sensitivities {
  Eigen::VectorXd h_p;
  Eigen::MatrixXd h_v;
};

}  // namespace flexofo
