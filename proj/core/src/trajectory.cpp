#include "coop/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace coop {

void validate(const Trajectory& traj) {
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    const auto& p = traj.points[i];
    if (!std::isfinite(p.stamp) || !p.position.allFinite() || !std::isfinite(p.heading)) {
      throw Error("trajectory: non-finite point at index " + std::to_string(i));
    }
    if (i > 0 && !(p.stamp > traj.points[i - 1].stamp)) {
      throw Error("trajectory: stamps not strictly increasing at index " + std::to_string(i));
    }
  }
}

namespace {

TrajectoryPoint lerp(const TrajectoryPoint& a, const TrajectoryPoint& b, double t) {
  const double s = (t - a.stamp) / (b.stamp - a.stamp);
  TrajectoryPoint out;
  out.stamp = t;
  out.position = a.position + s * (b.position - a.position);
  out.heading = wrap_heading(a.heading + s * heading_diff(b.heading, a.heading));
  return out;
}

auto first_at_or_after(const std::vector<TrajectoryPoint>& pts, double t) {
  return std::lower_bound(pts.begin(), pts.end(), t,
                          [](const TrajectoryPoint& p, double v) { return p.stamp < v; });
}

}  // namespace

TrajectoryPoint sample(const Trajectory& traj, double t) {
  if (traj.empty()) {
    throw Error("sample: empty trajectory");
  }
  const auto& pts = traj.points;
  if (t <= pts.front().stamp) {
    return pts.front();
  }
  if (t >= pts.back().stamp) {
    return pts.back();
  }
  const auto it = first_at_or_after(pts, t);
  if (it->stamp == t) {
    return *it;
  }
  return lerp(*(it - 1), *it, t);
}

Trajectory remaining(const Trajectory& traj, double t) {
  Trajectory out;
  out.frame = traj.frame;
  const auto& pts = traj.points;
  const auto it = first_at_or_after(pts, t);
  if (it != pts.begin() && it != pts.end() && it->stamp != t) {
    out.points.push_back(lerp(*(it - 1), *it, t));
  }
  out.points.insert(out.points.end(), it, pts.end());
  return out;
}

Trajectory transform_trajectory(const Trajectory& traj, const RelativeTransform& T) {
  if (traj.frame != T.source) {
    throw Error("transform_trajectory: trajectory in frame " + std::string(to_string(traj.frame)) +
                ", transform expects " + std::string(to_string(T.source)));
  }
  if (!T.valid) {
    throw Error("transform_trajectory: transform is not valid");
  }
  const Mat3 R = T.rotation();
  Trajectory out;
  out.frame = T.target;
  out.points.reserve(traj.points.size());
  for (const auto& p : traj.points) {
    out.points.push_back({p.stamp, R * p.position + T.translation, wrap_heading(p.heading + T.heading)});
  }
  return out;
}

namespace {

double segment_distance(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (a + s * ab - p).norm();
}

}  // namespace

double distance_to_path(const ReferencePath& path, const Vec3& p) {
  if (const auto* c = std::get_if<CirclePath>(&path)) {
    const double radial = std::hypot(p.x() - c->center.x(), p.y() - c->center.y()) - c->radius;
    const double vertical = p.z() - c->center.z();
    return std::hypot(radial, vertical);
  }
  const auto& poly = std::get<PolylinePath>(path);
  if (poly.vertices.empty()) {
    throw Error("distance_to_path: empty polyline");
  }
  if (poly.vertices.size() == 1) {
    return (poly.vertices.front() - p).norm();
  }
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.vertices.size();
  const std::size_t segments = poly.closed ? n : n - 1;
  for (std::size_t i = 0; i < segments; ++i) {
    best = std::min(best, segment_distance(poly.vertices[i], poly.vertices[(i + 1) % n], p));
  }
  return best;
}

Trajectory make_circle(const Vec3& center, double radius, double speed, double laps,
                       double start_time, double sample_period, double start_angle) {
  if (!(radius > 0.0 && speed > 0.0 && laps > 0.0 && sample_period > 0.0)) {
    throw Error("make_circle: radius, speed, laps and sample_period must be positive");
  }
  const double omega = speed / radius;
  const double duration = laps * 2.0 * std::numbers::pi / omega;
  const auto n = static_cast<std::size_t>(std::ceil(duration / sample_period - 1e-9));
  Trajectory traj;
  traj.frame = FrameId::L;
  traj.points.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double dt = std::min(static_cast<double>(k) * sample_period, duration);
    const double a = start_angle + omega * dt;
    traj.points.push_back({start_time + dt,
                           center + Vec3(radius * std::cos(a), radius * std::sin(a), 0.0),
                           wrap_heading(a + std::numbers::pi / 2.0)});
  }
  return traj;
}

namespace {

// Gerono lemniscate: x = a·sin(u), y = a·sin(u)·cos(u).
Vec3 eight_point(const Vec3& center, double a, double u) {
  return center + Vec3(a * std::sin(u), a * std::sin(u) * std::cos(u), 0.0);
}

}  // namespace

PolylinePath figure_eight_path(const Vec3& center, double size) {
  PolylinePath path;
  path.closed = true;
  constexpr int kSegments = 720;
  for (int i = 0; i < kSegments; ++i) {
    path.vertices.push_back(eight_point(center, size, 2.0 * std::numbers::pi * i / kSegments));
  }
  return path;
}

Trajectory make_figure_eight(const Vec3& center, double size, double speed, double laps,
                             double start_time, double sample_period) {
  const PolylinePath path = figure_eight_path(center, size);
  Trajectory traj = make_polyline_loop(path.vertices, speed, laps, start_time, sample_period);
  return traj;
}

Trajectory make_polyline_loop(std::span<const Vec3> vertices, double speed, double laps,
                              double start_time, double sample_period) {
  if (vertices.size() < 2) {
    throw Error("make_polyline_loop: need at least two vertices");
  }
  if (!(speed > 0.0 && laps > 0.0 && sample_period > 0.0)) {
    throw Error("make_polyline_loop: speed, laps and sample_period must be positive");
  }
  const std::size_t n = vertices.size();
  std::vector<double> cumulative(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    cumulative[i + 1] = cumulative[i] + (vertices[(i + 1) % n] - vertices[i]).norm();
  }
  const double perimeter = cumulative.back();
  if (!(perimeter > 0.0)) {
    throw Error("make_polyline_loop: degenerate loop");
  }
  const double duration = laps * perimeter / speed;
  const auto count = static_cast<std::size_t>(std::ceil(duration / sample_period - 1e-9));

  Trajectory traj;
  traj.frame = FrameId::L;
  traj.points.reserve(count + 1);
  for (std::size_t k = 0; k <= count; ++k) {
    const double dt = std::min(static_cast<double>(k) * sample_period, duration);
    const double s = std::fmod(dt * speed, perimeter);
    const auto seg_it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    const std::size_t seg =
        std::min<std::size_t>(static_cast<std::size_t>(seg_it - cumulative.begin()) - 1, n - 1);
    const Vec3& a = vertices[seg];
    const Vec3& b = vertices[(seg + 1) % n];
    const double len = cumulative[seg + 1] - cumulative[seg];
    const double f = len > 0.0 ? (s - cumulative[seg]) / len : 0.0;
    const Vec3 dir = b - a;
    traj.points.push_back(
        {start_time + dt, a + f * dir, std::atan2(dir.y(), dir.x())});
  }
  return traj;
}

}  // namespace coop
