#include "coop/event_log.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace coop {

namespace {

std::string vec(const Vec3& v) { return fmt::format("{} {} {}", v.x(), v.y(), v.z()); }

struct RecordWriter {
  std::string& out;

  void operator()(const TruthRecord& r) const {
    out += fmt::format("truth {} {} {} {} {}\n", r.t, vec(r.secondary), r.secondary_heading,
                       vec(r.primary), r.visible ? 1 : 0);
  }
  void operator()(const VioRecord& r) const {
    const auto& p = r.pose;
    const auto& T = r.true_L_to_V;
    out += fmt::format("vio {} {} {} {} {} {} {} {} {} {} {} {}\n", r.t, r.deliver, p.stamp,
                       vec(p.position), p.heading, vec(p.velocity), p.heading_rate,
                       vec(r.truth_position), r.truth_heading, vec(T.translation), T.heading,
                       T.stamp);
  }
  void operator()(const DetectionRecord& r) const {
    const auto& d = r.detection;
    out += fmt::format("det {} {} {} {} {} {} {} {}\n", r.t, r.deliver, d.stamp, d.track_id,
                       vec(d.position), d.covariance(0, 0), d.covariance(1, 1), d.covariance(2, 2));
  }
  void operator()(const AssociationRecord& r) const {
    out += fmt::format("assoc {} {} {} {}\n", r.t, r.track, r.mahalanobis_sq, r.accepted ? 1 : 0);
  }
  void operator()(const InitRecord& r) const {
    out += fmt::format("init {} {} {} {}\n", r.t, r.track, r.final_cost, r.reinit ? 1 : 0);
  }
  void operator()(const ReferenceRecord& r) const {
    out += fmt::format("ref {} {} {} {} {} {}\n", r.t, r.deliver, r.count, r.first.stamp,
                       vec(r.first.position), r.first.heading);
  }
  void operator()(const EstimateRecord& r) const {
    out += fmt::format("est {} {} {} {}\n", r.t, to_string(r.status), vec(r.position), r.heading);
  }
  void operator()(const PhaseRecord& r) const { out += fmt::format("phase {} {}\n", r.t, r.name); }
  void operator()(const FailRecord& r) const { out += fmt::format("fail {} {}\n", r.t, r.deviation); }
  void operator()(const EndRecord& r) const { out += fmt::format("end {}\n", r.t); }
};

class Fields {
 public:
  Fields(std::vector<std::string_view> tokens, std::size_t line)
      : tokens_(std::move(tokens)), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(fmt::format("event log line {}: {}", line_, what));
  }

  void expect(std::size_t n) const {
    if (tokens_.size() != n) {
      fail(fmt::format("'{}' record needs {} fields, found {}", tokens_.front(), n - 1,
                       tokens_.size() - 1));
    }
  }

  std::string_view text() { return next(); }

  double real() {
    const auto tok = next();
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      if (tok == "inf") return std::numeric_limits<double>::infinity();
      if (tok == "-inf") return -std::numeric_limits<double>::infinity();
      if (tok == "nan") return std::numeric_limits<double>::quiet_NaN();
      fail(fmt::format("bad number '{}'", tok));
    }
    return v;
  }

  template <class I>
  I integer() {
    const auto tok = next();
    I v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      fail(fmt::format("bad integer '{}'", tok));
    }
    return v;
  }

  bool flag() {
    const auto v = integer<int>();
    if (v != 0 && v != 1) fail("flag must be 0 or 1");
    return v == 1;
  }

  Vec3 vec3() {
    const double x = real();
    const double y = real();
    const double z = real();
    return {x, y, z};
  }

  std::size_t size() const { return tokens_.size(); }

 private:
  std::string_view next() {
    if (pos_ >= tokens_.size()) fail("missing field");
    return tokens_[pos_++];
  }

  std::vector<std::string_view> tokens_;
  std::size_t line_;
  std::size_t pos_ = 1;
};

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

}  // namespace

void write_event_log(std::ostream& out, const EventLog& log) { out << serialize_event_log(log); }

std::string serialize_event_log(const EventLog& log) {
  std::string out;
  out += fmt::format("seed {}\n", log.header.seed);
  out += fmt::format("settle {}\n", log.header.settle_time);
  if (const auto* c = std::get_if<CirclePath>(&log.header.path)) {
    out += fmt::format("path circle {} {}\n", vec(c->center), c->radius);
  } else {
    const auto& p = std::get<PolylinePath>(log.header.path);
    out += fmt::format("path polyline {} {}", p.closed ? 1 : 0, p.vertices.size());
    for (const auto& v : p.vertices) out += " " + vec(v);
    out += '\n';
  }
  for (const auto& [id, role] : log.header.target_roles) {
    out += fmt::format("target {} {}\n", id, role);
  }
  const RecordWriter w{out};
  for (const auto& r : log.records) std::visit(w, r);
  return out;
}

EventLog read_event_log(std::istream& in) {
  EventLog log;
  std::string line;
  std::size_t n = 0;
  bool ended = false;
  while (std::getline(in, line)) {
    ++n;
    auto tokens = split(line);
    if (tokens.empty()) continue;
    const std::string tag(tokens.front());
    Fields f(std::move(tokens), n);
    if (ended) f.fail("record after end");

    if (tag == "seed") {
      f.expect(2);
      log.header.seed = f.integer<std::uint64_t>();
    } else if (tag == "settle") {
      f.expect(2);
      log.header.settle_time = f.real();
    } else if (tag == "path") {
      const auto kind = f.text();
      if (kind == "circle") {
        f.expect(6);
        CirclePath c;
        c.center = f.vec3();
        c.radius = f.real();
        log.header.path = c;
      } else if (kind == "polyline") {
        if (f.size() < 4) f.fail("truncated polyline");
        PolylinePath p;
        p.closed = f.flag();
        const auto count = f.integer<std::size_t>();
        f.expect(4 + 3 * count);
        for (std::size_t i = 0; i < count; ++i) p.vertices.push_back(f.vec3());
        log.header.path = p;
      } else {
        f.fail(fmt::format("unknown path kind '{}'", kind));
      }
    } else if (tag == "target") {
      f.expect(3);
      const auto id = f.integer<TrackId>();
      log.header.target_roles[id] = std::string(f.text());
    } else if (tag == "truth") {
      f.expect(10);
      TruthRecord r;
      r.t = f.real();
      r.secondary = f.vec3();
      r.secondary_heading = f.real();
      r.primary = f.vec3();
      r.visible = f.flag();
      log.records.emplace_back(r);
    } else if (tag == "vio") {
      f.expect(21);
      VioRecord r;
      r.t = f.real();
      r.deliver = f.real();
      r.pose.frame = FrameId::V;
      r.pose.stamp = f.real();
      r.pose.position = f.vec3();
      r.pose.heading = f.real();
      r.pose.velocity = f.vec3();
      r.pose.heading_rate = f.real();
      r.truth_position = f.vec3();
      r.truth_heading = f.real();
      const Vec3 tr = f.vec3();
      const double th = f.real();
      const double ts = f.real();
      r.true_L_to_V = RelativeTransform::from(FrameId::L, FrameId::V, tr, th, ts);
      log.records.emplace_back(r);
    } else if (tag == "det") {
      f.expect(11);
      DetectionRecord r;
      r.t = f.real();
      r.deliver = f.real();
      r.detection.stamp = f.real();
      r.detection.track_id = f.integer<TrackId>();
      r.detection.position = f.vec3();
      r.detection.covariance = f.vec3().asDiagonal();
      log.records.emplace_back(r);
    } else if (tag == "assoc") {
      f.expect(5);
      AssociationRecord r;
      r.t = f.real();
      r.track = f.integer<TrackId>();
      r.mahalanobis_sq = f.real();
      r.accepted = f.flag();
      log.records.emplace_back(r);
    } else if (tag == "init") {
      f.expect(5);
      InitRecord r;
      r.t = f.real();
      r.track = f.integer<TrackId>();
      r.final_cost = f.real();
      r.reinit = f.flag();
      log.records.emplace_back(r);
    } else if (tag == "ref") {
      f.expect(9);
      ReferenceRecord r;
      r.t = f.real();
      r.deliver = f.real();
      r.count = f.integer<std::size_t>();
      r.first.stamp = f.real();
      r.first.position = f.vec3();
      r.first.heading = f.real();
      log.records.emplace_back(r);
    } else if (tag == "est") {
      f.expect(7);
      EstimateRecord r;
      r.t = f.real();
      try {
        r.status = guider_status_from_string(f.text());
      } catch (const Error& e) {
        f.fail(e.what());
      }
      r.position = f.vec3();
      r.heading = f.real();
      log.records.emplace_back(r);
    } else if (tag == "phase") {
      f.expect(3);
      PhaseRecord r;
      r.t = f.real();
      r.name = std::string(f.text());
      log.records.emplace_back(r);
    } else if (tag == "fail") {
      f.expect(3);
      FailRecord r;
      r.t = f.real();
      r.deviation = f.real();
      log.records.emplace_back(r);
    } else if (tag == "end") {
      f.expect(2);
      log.records.emplace_back(EndRecord{f.real()});
      ended = true;
    } else {
      f.fail(fmt::format("unknown record '{}'", tag));
    }
  }
  if (!ended) {
    throw Error(fmt::format("event log line {}: truncated, missing end record", n + 1));
  }
  return log;
}

EventLog parse_event_log(const std::string& text) {
  std::istringstream in(text);
  return read_event_log(in);
}

EventLog load_event_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open event log '" + path + "'");
  }
  return read_event_log(in);
}

}  // namespace coop
