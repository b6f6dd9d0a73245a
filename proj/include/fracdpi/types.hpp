#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace fracdpi {

struct SpaceTimePoint {
  double t = 0.0;
  Eigen::VectorXd x;
};

// Orders of the space-time fractional operators: alpha for the integral
// fractional Laplacian (-Delta)^{alpha/2}, beta for the Caputo derivative.
struct FracOrders {
  double alpha = 1.5;
  double beta = 0.6;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 2.0))
      throw std::invalid_argument("FracOrders: alpha must be in (0,2)");
    if (!(beta > 0.0 && beta < 1.0))
      throw std::invalid_argument("FracOrders: beta must be in (0,1)");
  }
};

}  // namespace fracdpi
