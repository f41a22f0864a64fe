#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace ilv {

// Wraps an angle to the half-open interval (-pi, pi].
// The result is congruent to t modulo 2*pi; -pi maps to +pi.
template <typename Scalar>
inline Scalar normalize_angle(Scalar t) {
  if (!std::isfinite(t)) {
    throw std::invalid_argument("normalize_angle: non-finite angle");
  }
  const Scalar pi = static_cast<Scalar>(M_PI);
  Scalar r = std::remainder(t, Scalar(2) * pi);
  if (r <= -pi) {
    r = pi;
  }
  return r;
}

// Planar rigid pose (x, y, theta). theta is kept in (-pi, pi] at every
// construction point, so the invariant holds for any value produced by
// the algebra below.
template <typename Scalar>
struct Pose2 {
  Scalar x{0};
  Scalar y{0};
  Scalar theta{0};

  Pose2() = default;
  Pose2(Scalar x_, Scalar y_, Scalar theta_)
      : x(x_), y(y_), theta(normalize_angle(theta_)) {}

  static Pose2 identity() { return Pose2(); }

  Eigen::Matrix<Scalar, 2, 1> position() const {
    return Eigen::Matrix<Scalar, 2, 1>(x, y);
  }
  Eigen::Matrix<Scalar, 3, 1> vec() const {
    return Eigen::Matrix<Scalar, 3, 1>(x, y, theta);
  }
};

using Pose2d = Pose2<double>;
using Pose2f = Pose2<float>;

// Group composition a (+) b: b expressed in a's frame, mapped to the
// global frame.
template <typename Scalar>
inline Pose2<Scalar> compose(const Pose2<Scalar>& a, const Pose2<Scalar>& b) {
  const Scalar c = std::cos(a.theta);
  const Scalar s = std::sin(a.theta);
  return Pose2<Scalar>(a.x + c * b.x - s * b.y,
                       a.y + s * b.x + c * b.y,
                       a.theta + b.theta);
}

template <typename Scalar>
inline Pose2<Scalar> inverse(const Pose2<Scalar>& a) {
  const Scalar c = std::cos(a.theta);
  const Scalar s = std::sin(a.theta);
  return Pose2<Scalar>(-c * a.x - s * a.y,
                       s * a.x - c * a.y,
                       -a.theta);
}

// Relative pose inverse(a) (+) b; satisfies compose(a, between(a, b)) == b.
template <typename Scalar>
inline Pose2<Scalar> between(const Pose2<Scalar>& a, const Pose2<Scalar>& b) {
  const Scalar c = std::cos(a.theta);
  const Scalar s = std::sin(a.theta);
  const Scalar dx = b.x - a.x;
  const Scalar dy = b.y - a.y;
  return Pose2<Scalar>(c * dx + s * dy,
                       -s * dx + c * dy,
                       b.theta - a.theta);
}

}  // namespace ilv
