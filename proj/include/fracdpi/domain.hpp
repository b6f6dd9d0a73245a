#pragma once

// Benchmark domains: the open unit ball B_1(0) in R^d and open axis-aligned
// boxes.  Membership is strict-interior so that boundary hits count as exits.

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

namespace fracdpi {

struct DomainSpec {
  enum class Kind { unit_ball, box };

  Kind kind = Kind::unit_ball;
  int d = 0;
  Eigen::VectorXd lo, hi;  // box only

  static DomainSpec unit_ball(int d) {
    if (d < 1) throw std::invalid_argument("unit_ball: d must be >= 1");
    DomainSpec s;
    s.kind = Kind::unit_ball;
    s.d = d;
    return s;
  }

  static DomainSpec box(Eigen::VectorXd lo_, Eigen::VectorXd hi_) {
    if (lo_.size() == 0 || lo_.size() != hi_.size())
      throw std::invalid_argument("box: lo/hi must be nonempty and same size");
    if (!((lo_.array() < hi_.array()).all()))
      throw std::invalid_argument("box: need lo < hi componentwise");
    DomainSpec s;
    s.kind = Kind::box;
    s.d = static_cast<int>(lo_.size());
    s.lo = std::move(lo_);
    s.hi = std::move(hi_);
    return s;
  }

  bool contains(const Eigen::VectorXd& x) const {
    if (kind == Kind::unit_ball) return x.squaredNorm() < 1.0;
    return (x.array() > lo.array()).all() && (x.array() < hi.array()).all();
  }
};

}  // namespace fracdpi
