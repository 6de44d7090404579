#include "coop/evaluation.hpp"

#include "coop/alignment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace coop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool covers(const Trajectory& gt, double t) { return t >= gt.start() && t <= gt.end(); }

std::string metric(double v) { return fmt::format("{}", v); }

std::string metric(const std::optional<double>& v) { return v ? metric(*v) : "absent"; }

std::optional<double> rmse_or_absent(const std::vector<SampleError>& s) {
  if (s.empty()) return std::nullopt;
  return rmse_3d(s);
}

}  // namespace

RelativeTransform align_first_window(const Trajectory& traj, const Trajectory& gt, double window) {
  if (traj.empty() || gt.empty()) {
    throw Error("align_first_window: empty trajectory");
  }
  const double start = std::max(traj.start(), gt.start());
  const double end = std::min(traj.end(), gt.end());
  if (end - start < window - 1e-9) {
    throw Error(fmt::format("align_first_window: overlap {} s shorter than window {} s",
                            std::max(0.0, end - start), window));
  }
  std::vector<Vec3> from;
  std::vector<Vec3> to;
  for (const auto& p : traj.points) {
    if (p.stamp < start || p.stamp > start + window) continue;
    from.push_back(p.position);
    to.push_back(sample(gt, p.stamp).position);
  }
  if (from.size() < 2) {
    throw Error("align_first_window: fewer than two samples in the window");
  }
  return closed_form_yaw_alignment(from, to, traj.frame, gt.frame);
}

Trajectory apply_alignment(const Trajectory& traj, const RelativeTransform& T) {
  Trajectory out;
  out.frame = T.target;
  out.points.reserve(traj.size());
  for (const auto& p : traj.points) {
    out.points.push_back({p.stamp, apply_transform(T, p.position), wrap_heading(p.heading + T.heading)});
  }
  return out;
}

AteResult absolute_trajectory_error(const Trajectory& aligned, const Trajectory& gt) {
  AteResult r;
  if (gt.empty()) {
    throw Error("absolute_trajectory_error: empty ground truth");
  }
  double s2 = 0.0;
  double s3 = 0.0;
  for (const auto& p : aligned.points) {
    if (!covers(gt, p.stamp)) continue;
    const Vec3 e = p.position - sample(gt, p.stamp).position;
    s2 += e.head<2>().squaredNorm();
    s3 += e.squaredNorm();
    ++r.samples;
  }
  if (r.samples == 0) {
    throw Error("absolute_trajectory_error: no overlapping samples");
  }
  r.ate_2d = std::sqrt(s2 / static_cast<double>(r.samples));
  r.ate_3d = std::sqrt(s3 / static_cast<double>(r.samples));
  return r;
}

double mean_path_deviation(std::span<const Vec3> actual, const ReferencePath& path) {
  if (actual.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : actual) sum += distance_to_path(path, p);
  return sum / static_cast<double>(actual.size());
}

double evaluation_start(const EventLog& log) {
  for (const auto& r : log.records) {
    if (const auto* p = std::get_if<PhaseRecord>(&r); p && p->name == "guided") {
      return p->t + log.header.settle_time;
    }
  }
  return -kInf;
}

std::vector<SampleError> relative_errors(const EventLog& log, double from) {
  std::map<double, TruthRecord> truth;
  for (const auto& r : log.records) {
    if (const auto* p = std::get_if<TruthRecord>(&r); p && p->t >= from) truth.emplace(p->t, *p);
  }
  std::vector<SampleError> out;
  for (const auto& r : log.records) {
    const auto* e = std::get_if<EstimateRecord>(&r);
    if (!e || e->t < from) continue;
    const auto it = truth.find(e->t);
    if (it == truth.end()) continue;
    const Vec3 d = e->position - it->second.secondary;
    out.push_back({e->t, d.head<2>().norm(), d.norm(), it->second.visible});
  }
  return out;
}

double rmse_3d(std::span<const SampleError> samples) {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : samples) s += e.error_3d * e.error_3d;
  return std::sqrt(s / static_cast<double>(samples.size()));
}

TrackedSplit split_tracked_rmse(const EventLog& log) {
  std::vector<SampleError> tracked;
  std::vector<SampleError> untracked;
  for (const auto& e : relative_errors(log, evaluation_start(log))) {
    (e.visible ? tracked : untracked).push_back(e);
  }
  return {rmse_or_absent(tracked), rmse_or_absent(untracked)};
}

std::vector<double> recovery_times(std::span<const SampleError> samples, double threshold) {
  std::vector<double> out;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i - 1].visible || !samples[i].visible) continue;
    double rec = kInf;
    for (std::size_t j = i; j < samples.size(); ++j) {
      if (samples[j].error_3d < threshold) {
        rec = samples[j].t - samples[i].t;
        break;
      }
    }
    out.push_back(rec);
  }
  return out;
}

Trajectory estimate_trajectory(const EventLog& log) {
  Trajectory out;
  out.frame = FrameId::L;
  for (const auto& r : log.records) {
    if (const auto* e = std::get_if<EstimateRecord>(&r)) {
      if (out.empty() || e->t > out.end()) out.points.push_back({e->t, e->position, e->heading});
    }
  }
  return out;
}

Trajectory truth_trajectory(const EventLog& log) {
  Trajectory out;
  out.frame = FrameId::L;
  for (const auto& r : log.records) {
    if (const auto* e = std::get_if<TruthRecord>(&r)) {
      if (out.empty() || e->t > out.end()) {
        out.points.push_back({e->t, e->secondary, e->secondary_heading});
      }
    }
  }
  return out;
}

ErrorReport evaluate(const EventLog& log) {
  ErrorReport rep;
  rep.evaluation_start = evaluation_start(log);
  for (const auto& r : log.records) {
    if (std::holds_alternative<FailRecord>(r)) rep.failure = true;
  }

  const Trajectory est = estimate_trajectory(log);
  const Trajectory gt = truth_trajectory(log);
  if (!est.empty() && !gt.empty()) {
    const double overlap = std::min(est.end(), gt.end()) - std::max(est.start(), gt.start());
    const double window = std::min(kAteAlignmentWindow, overlap);
    if (window > 0.0) {
      const auto ate = absolute_trajectory_error(
          apply_alignment(est, align_first_window(est, gt, window)), gt);
      rep.ate_2d = ate.ate_2d;
      rep.ate_3d = ate.ate_3d;
    }
  }

  std::vector<Vec3> actual;
  for (const auto& r : log.records) {
    if (const auto* p = std::get_if<TruthRecord>(&r); p && p->t >= rep.evaluation_start) {
      actual.push_back(p->secondary);
    }
  }
  rep.mean_path_deviation = mean_path_deviation(actual, log.header.path);

  rep.per_sample_errors = relative_errors(log, rep.evaluation_start);
  rep.rel_loc_rmse = rmse_3d(rep.per_sample_errors);
  std::vector<SampleError> tracked;
  std::vector<SampleError> untracked;
  for (const auto& e : rep.per_sample_errors) (e.visible ? tracked : untracked).push_back(e);
  rep.tracked_rmse = rmse_or_absent(tracked);
  rep.untracked_rmse = rmse_or_absent(untracked);
  return rep;
}

std::string format_report(const ErrorReport& r) {
  std::string out;
  out += "ate_2d=" + metric(r.ate_2d) + "\n";
  out += "ate_3d=" + metric(r.ate_3d) + "\n";
  out += "mean_path_deviation=" + metric(r.mean_path_deviation) + "\n";
  out += "rel_loc_rmse=" + metric(r.rel_loc_rmse) + "\n";
  out += "tracked_rmse=" + metric(r.tracked_rmse) + "\n";
  out += "untracked_rmse=" + metric(r.untracked_rmse) + "\n";
  out += fmt::format("samples={}\n", r.per_sample_errors.size());
  out += fmt::format("failure={}\n", r.failure ? 1 : 0);
  return out;
}

std::string format_sample_csv(std::span<const SampleError> samples) {
  std::string out = "t,error_2d,error_3d,visible_flag\n";
  for (const auto& e : samples) {
    out += fmt::format("{},{},{},{}\n", e.t, e.error_2d, e.error_3d, e.visible ? 1 : 0);
  }
  return out;
}

Trajectory load_trajectory_csv(const std::string& path, FrameId frame) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open trajectory '" + path + "'");
  }
  Trajectory out;
  out.frame = frame;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      const std::string_view tok = b == std::string::npos ? std::string_view{}
                                                          : std::string_view(cell).substr(b, e - b + 1);
      double x = 0.0;
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc() || p != tok.data() + tok.size()) {
        numeric = false;
        break;
      }
      v.push_back(x);
    }
    if (!numeric) {
      if (out.empty() && n == 1) continue;
      throw Error(fmt::format("{} line {}: non-numeric field", path, n));
    }
    if (v.size() != 4 && v.size() != 5) {
      throw Error(fmt::format("{} line {}: expected t,x,y,z[,yaw]", path, n));
    }
    out.points.push_back({v[0], Vec3(v[1], v[2], v[3]), v.size() == 5 ? v[4] : 0.0});
  }
  validate(out);
  return out;
}

}  // namespace coop
