#pragma once

#include "coop/detection.hpp"
#include "coop/geometry.hpp"
#include "coop/guider.hpp"
#include "coop/trajectory.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace coop {

// Records of a simulated run. Every record leads with the simulation time `t`
// at which it was produced; the log is ordered by t.

/// Ground truth of both agents in L, plus line-of-sight visibility of the secondary.
struct TruthRecord {
  double t = 0.0;
  Vec3 secondary = Vec3::Zero();
  double secondary_heading = 0.0;
  Vec3 primary = Vec3::Zero();
  bool visible = true;
};

/// A VIO sample as emitted by the secondary, with the true L→V transform at its stamp.
struct VioRecord {
  double t = 0.0;
  double deliver = 0.0;
  TimedPose pose;                 ///< frame V, as reported
  Vec3 truth_position = Vec3::Zero();  ///< frame L, at pose.stamp
  double truth_heading = 0.0;
  RelativeTransform true_L_to_V;  ///< drift state at pose.stamp
};

struct DetectionRecord {
  double t = 0.0;
  double deliver = 0.0;
  Detection detection;
};

struct AssociationRecord {
  double t = 0.0;
  TrackId track = -1;
  double mahalanobis_sq = 0.0;
  bool accepted = false;
};

struct InitRecord {
  double t = 0.0;
  TrackId track = -1;
  double final_cost = 0.0;
  bool reinit = false;
};

/// One streamed reference message (frame V): its size and the leading point.
struct ReferenceRecord {
  double t = 0.0;
  double deliver = 0.0;
  std::size_t count = 0;
  TrajectoryPoint first;
};

struct EstimateRecord {
  double t = 0.0;
  GuiderStatus status = GuiderStatus::Uninitialized;
  Vec3 position = Vec3::Zero();
  double heading = 0.0;
};

struct PhaseRecord {
  double t = 0.0;
  std::string name;  ///< "guided" when the first reference is streamed
};

struct FailRecord {
  double t = 0.0;
  double deviation = 0.0;
};

struct EndRecord {
  double t = 0.0;
};

using LogRecord = std::variant<TruthRecord, VioRecord, DetectionRecord, AssociationRecord,
                               InitRecord, ReferenceRecord, EstimateRecord, PhaseRecord,
                               FailRecord, EndRecord>;

struct LogHeader {
  std::uint64_t seed = 0;
  double settle_time = 0.0;
  ReferencePath path = CirclePath{};
  std::map<TrackId, std::string> target_roles;  ///< "secondary" or "false"
};

struct EventLog {
  LogHeader header;
  std::vector<LogRecord> records;

  template <class R>
  std::vector<R> collect() const {
    std::vector<R> out;
    for (const auto& r : records) {
      if (const auto* p = std::get_if<R>(&r)) out.push_back(*p);
    }
    return out;
  }
};

/// Line-delimited text: one record per line, a type tag then whitespace
/// separated fields. Doubles use the shortest round-trip representation.
void write_event_log(std::ostream& out, const EventLog& log);
std::string serialize_event_log(const EventLog& log);

/// Throws Error with the offending line number on malformed or truncated input.
EventLog read_event_log(std::istream& in);
EventLog parse_event_log(const std::string& text);
EventLog load_event_log(const std::string& path);

}  // namespace coop
