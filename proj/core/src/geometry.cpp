#include "coop/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace coop {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::string_view to_string(FrameId f) {
  switch (f) {
    case FrameId::W: return "W";
    case FrameId::L: return "L";
    case FrameId::V: return "V";
    case FrameId::P: return "P";
    case FrameId::S: return "S";
  }
  return "?";
}

FrameId frame_from_string(std::string_view s) {
  if (s == "W") return FrameId::W;
  if (s == "L") return FrameId::L;
  if (s == "V") return FrameId::V;
  if (s == "P") return FrameId::P;
  if (s == "S") return FrameId::S;
  throw Error("unknown frame '" + std::string(s) + "'");
}

double wrap_heading(double angle) {
  if (!std::isfinite(angle)) {
    throw Error("wrap_heading: non-finite angle");
  }
  // remainder() lands in [-pi, pi]; fold the closed end so the range is (-pi, pi].
  double r = std::remainder(angle, kTwoPi);
  if (r <= -std::numbers::pi) {
    r += kTwoPi;
  }
  return r;
}

Mat3 yaw_rotation(double heading) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  Mat3 R;
  R << c, -s, 0.0,
       s,  c, 0.0,
       0.0, 0.0, 1.0;
  return R;
}

Mat3 yaw_rotation_derivative(double heading) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  Mat3 dR;
  dR << -s, -c, 0.0,
         c, -s, 0.0,
         0.0, 0.0, 0.0;
  return dR;
}

RelativeTransform RelativeTransform::identity(FrameId source, FrameId target) {
  RelativeTransform T;
  T.source = source;
  T.target = target;
  return T;
}

RelativeTransform RelativeTransform::from(FrameId source, FrameId target,
                                          const Vec3& translation, double heading,
                                          double stamp) {
  RelativeTransform T;
  T.source = source;
  T.target = target;
  T.translation = translation;
  T.heading = wrap_heading(heading);
  T.stamp = stamp;
  return T;
}

RelativeTransform RelativeTransform::inverse() const {
  RelativeTransform inv = *this;
  inv.source = target;
  inv.target = source;
  inv.heading = wrap_heading(-heading);
  inv.translation = -(yaw_rotation(-heading) * translation);
  return inv;
}

Vec3 apply_transform(const RelativeTransform& T, const Vec3& x) {
  if (!T.valid) {
    throw Error("apply_transform: transform is not valid");
  }
  return T.rotation() * x + T.translation;
}

Vec3 rotate_vector(const RelativeTransform& T, const Vec3& v) {
  if (!T.valid) {
    throw Error("rotate_vector: transform is not valid");
  }
  return T.rotation() * v;
}

RelativeTransform compose(const RelativeTransform& outer, const RelativeTransform& inner) {
  if (inner.target != outer.source) {
    throw Error("compose: frame mismatch " + std::string(to_string(inner.target)) + " vs " +
                std::string(to_string(outer.source)));
  }
  RelativeTransform out;
  out.source = inner.source;
  out.target = outer.target;
  out.heading = wrap_heading(outer.heading + inner.heading);
  out.translation = outer.rotation() * inner.translation + outer.translation;
  out.stamp = std::max(outer.stamp, inner.stamp);
  out.valid = outer.valid && inner.valid;
  return out;
}

TimedPose transform_pose(const RelativeTransform& T, const TimedPose& pose) {
  if (pose.frame != T.source) {
    throw Error("transform_pose: pose in frame " + std::string(to_string(pose.frame)) +
                ", transform expects " + std::string(to_string(T.source)));
  }
  TimedPose out = pose;
  out.frame = T.target;
  out.position = apply_transform(T, pose.position);
  out.velocity = rotate_vector(T, pose.velocity);
  out.heading = wrap_heading(pose.heading + T.heading);
  return out;
}

namespace {

TimedPose blend(const TimedPose& a, const TimedPose& b, double t) {
  const double span = b.stamp - a.stamp;
  const double s = (t - a.stamp) / span;
  TimedPose out;
  out.stamp = t;
  out.frame = a.frame;
  out.position = a.position + s * (b.position - a.position);
  out.velocity = a.velocity + s * (b.velocity - a.velocity);
  out.heading_rate = a.heading_rate + s * (b.heading_rate - a.heading_rate);
  out.heading = wrap_heading(a.heading + s * heading_diff(b.heading, a.heading));
  return out;
}

}  // namespace

TimedPose interpolate(std::span<const TimedPose> buffer, double t, double tolerance) {
  if (buffer.empty()) {
    throw Error("interpolate: empty buffer");
  }
  const double first = buffer.front().stamp;
  const double last = buffer.back().stamp;
  if (t < first - tolerance || t > last + tolerance) {
    throw Error("stale query");
  }
  const FrameId frame = buffer.front().frame;
  if (buffer.back().frame != frame) {
    throw Error("interpolate: mixed frames in buffer");
  }

  auto it = std::lower_bound(buffer.begin(), buffer.end(), t,
                             [](const TimedPose& p, double v) { return p.stamp < v; });
  if (it != buffer.end() && it->stamp == t) {
    return *it;
  }
  if (buffer.size() == 1) {
    TimedPose out = buffer.front();
    out.stamp = t;
    return out;
  }
  if (it == buffer.begin()) {
    return blend(buffer[0], buffer[1], t);
  }
  if (it == buffer.end()) {
    return blend(buffer[buffer.size() - 2], buffer.back(), t);
  }
  return blend(*(it - 1), *it, t);
}

}  // namespace coop
