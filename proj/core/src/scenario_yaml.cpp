#include "coop/scenario.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace coop {

namespace {

// ---------------------------------------------------------------------------
// Enum tokens

template <class E>
struct EnumTokens;

template <>
struct EnumTokens<PrimaryPattern> {
  static constexpr std::pair<PrimaryPattern, const char*> values[] = {
      {PrimaryPattern::Square, "square"},
      {PrimaryPattern::Line, "line"},
      {PrimaryPattern::Static, "static"}};
};
template <>
struct EnumTokens<DesiredPattern> {
  static constexpr std::pair<DesiredPattern, const char*> values[] = {
      {DesiredPattern::Circle, "circle"},
      {DesiredPattern::FigureEight, "figure_eight"},
      {DesiredPattern::Waypoints, "waypoints"}};
};
template <>
struct EnumTokens<DriftModel> {
  static constexpr std::pair<DriftModel, const char*> values[] = {
      {DriftModel::None, "none"},
      {DriftModel::ConstantVelocity, "constant_velocity"},
      {DriftModel::RandomWalk, "random_walk"}};
};

template <class E>
const char* enum_token(E e) {
  for (const auto& [v, s] : EnumTokens<E>::values) {
    if (v == e) return s;
  }
  return "?";
}

template <class E>
E enum_from_token(const std::string& token, const std::string& field) {
  std::string allowed;
  for (const auto& [v, s] : EnumTokens<E>::values) {
    if (token == s) return v;
    allowed += allowed.empty() ? s : std::string("|") + s;
  }
  throw Error("config field '" + field + "': unknown value '" + token + "' (expected " + allowed +
              ")");
}

static_assert(std::is_same_v<std::size_t, std::uint64_t>,
              "size_t config fields are read through the uint64_t overload");

template <class T>
concept ConfigEnum = requires { EnumTokens<T>::values; };

// ---------------------------------------------------------------------------
// Single field list shared by reader and writer.

template <class V>
void visit_delay(V& v, DelayConfig& d) {
  v.field("mean", d.mean);
  v.field("jitter", d.jitter);
}

template <class V>
void visit_config(V& v, ScenarioConfig& c) {
  v.field("seed", c.seed);
  v.field("duration", c.duration);
  v.field("step", c.step);
  v.field("tail", c.tail);
  v.field("log_period", c.log_period);
  v.field("settle_time", c.settle_time);
  v.field("abort_radius", c.abort_radius);

  v.section("primary", [&] {
    auto& p = c.primary;
    v.field("pattern", p.pattern, true);
    v.field("center", p.center);
    v.field("size", p.size);
    v.field("speed", p.speed);
    v.field("line_from", p.line_from);
    v.field("line_to", p.line_to);
  });
  v.section("desired", [&] {
    auto& d = c.desired;
    v.field("pattern", d.pattern, true);
    v.field("center", d.center);
    v.field("radius", d.radius);
    v.field("speed", d.speed);
    v.field("laps", d.laps);
    v.field("waypoints", d.waypoints);
    v.field("sample_period", d.sample_period);
    v.field("start_time", d.start_time);
  });
  v.section("vio", [&] {
    auto& o = c.vio;
    v.field("rate", o.rate);
    v.field("origin_translation", o.origin_translation);
    v.field("origin_heading", o.origin_heading);
    v.field("noise", o.noise);
    v.section("drift", [&] {
      v.field("model", o.drift.model);
      v.field("velocity", o.drift.velocity);
      v.field("sigma", o.drift.sigma);
      v.field("heading_rate", o.drift.heading_rate);
      v.field("heading_sigma", o.drift.heading_sigma);
    });
  });
  v.section("detection", [&] {
    auto& d = c.detection;
    v.field("rate", d.rate);
    v.field("noise", d.noise);
    v.section("delay", [&] { visit_delay(v, d.delay); });
    v.field("false_targets", d.false_targets);
    v.field("nlos_windows", d.nlos_windows);
    v.field("occluders", d.occluders);
  });
  v.section("comm", [&] { visit_delay(v, c.comm); });
  v.section("plant", [&] {
    v.field("tau", c.plant.tau);
    v.field("max_speed", c.plant.max_speed);
    v.field("max_yaw_rate", c.plant.max_yaw_rate);
  });
  v.section("guider", [&] {
    auto& g = c.guider;
    v.field("alignment_period", g.alignment_period);
    v.field("detection_staleness", g.detection_staleness);
    v.field("vio_staleness", g.vio_staleness);
    v.field("reinit_after_rejections", g.reinit_after_rejections);
    v.field("stream_period", g.stream_period);
    v.field("stream_horizon", g.stream_horizon);
    v.section("alignment", [&] {
      auto& a = g.alignment;
      v.field("window", a.window);
      v.field("min_correspondences", a.min_correspondences);
      v.field("min_path_length", a.min_path_length);
      v.field("max_final_cost", a.max_final_cost);
      v.field("loss_scale", a.loss_scale);
      v.field("min_eigenvalue", a.min_eigenvalue);
      v.field("interpolation_tolerance", a.interpolation_tolerance);
      v.field("max_detection_gap", a.max_detection_gap);
      v.field("estimate_drift_rate", a.estimate_drift_rate);
      v.field("initial_damping", a.initial_damping);
      v.field("damping_up", a.damping_up);
      v.field("damping_down", a.damping_down);
      v.field("max_iterations", a.max_iterations);
      v.field("gradient_tolerance", a.gradient_tolerance);
      v.field("step_tolerance", a.step_tolerance);
    });
    v.section("tracker", [&] {
      auto& t = g.tracker;
      v.field("acceleration_sigma", t.process.acceleration_sigma);
      v.field("yaw_acceleration_sigma", t.process.yaw_acceleration_sigma);
      v.field("lidar_sigma", t.lidar_sigma);
      v.field("vio_delta_sigma", t.vio_delta_sigma);
      v.field("vio_delta_rate_sigma", t.vio_delta_rate_sigma);
      v.field("vio_velocity_sigma", t.vio_velocity_sigma);
      v.field("heading_sigma", t.heading_sigma);
      v.field("heading_rate_sigma", t.heading_rate_sigma);
      v.field("euclidean_gate", t.euclidean_gate);
      v.field("gate_confidence", t.gate_confidence);
      v.field("history_span", t.history_span);
      v.field("prior_position_sigma", t.prior_position_sigma);
      v.field("prior_velocity_sigma", t.prior_velocity_sigma);
      v.field("prior_heading_sigma", t.prior_heading_sigma);
      v.field("prior_heading_rate_sigma", t.prior_heading_rate_sigma);
    });
  });
}

// ---------------------------------------------------------------------------
// Reader

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

class Reader {
 public:
  explicit Reader(YAML::Node root) { push(std::move(root), ""); }

  template <class T>
  void field(const char* key, T& out, bool required = false) {
    Frame& f = frames_.back();
    const std::string path = join(f.path, key);
    f.seen.insert(key);
    const YAML::Node n = f.node ? f.node[key] : YAML::Node();
    if (!n || n.IsNull()) {
      if (required) {
        throw Error("config field '" + path + "' is required");
      }
      return;
    }
    try {
      convert(n, out, path);
    } catch (const YAML::Exception& e) {
      throw Error("config field '" + path + "': " + e.msg);
    }
  }

  template <class Fn>
  void section(const char* key, Fn&& body) {
    Frame& f = frames_.back();
    f.seen.insert(key);
    YAML::Node n = f.node ? f.node[key] : YAML::Node();
    const std::string path = join(f.path, key);
    if (n && !n.IsNull() && !n.IsMap()) {
      throw Error("config field '" + path + "' must be a mapping");
    }
    push(n && n.IsMap() ? n : YAML::Node(), path);
    body();
    pop();
  }

  void finish() { pop(); }

 private:
  struct Frame {
    YAML::Node node;
    std::string path;
    std::set<std::string> seen;
  };

  void push(YAML::Node node, std::string path) {
    frames_.push_back({std::move(node), std::move(path), {}});
  }

  void pop() {
    const Frame& f = frames_.back();
    if (f.node && f.node.IsMap()) {
      for (const auto& kv : f.node) {
        const auto key = kv.first.as<std::string>();
        if (!f.seen.count(key)) {
          throw Error("unknown config key '" + join(f.path, key) + "'");
        }
      }
    }
    frames_.pop_back();
  }

  static void convert(const YAML::Node& n, double& out, const std::string&) { out = n.as<double>(); }
  static void convert(const YAML::Node& n, int& out, const std::string&) { out = n.as<int>(); }
  static void convert(const YAML::Node& n, bool& out, const std::string&) { out = n.as<bool>(); }
  static void convert(const YAML::Node& n, std::uint64_t& out, const std::string&) {
    out = n.as<std::uint64_t>();
  }
  static void convert(const YAML::Node& n, Vec3& out, const std::string& path) {
    if (!n.IsSequence() || n.size() != 3) {
      throw Error("config field '" + path + "' must be a 3-element list");
    }
    out = Vec3(n[0].as<double>(), n[1].as<double>(), n[2].as<double>());
  }
  static void convert(const YAML::Node& n, Eigen::Vector2d& out, const std::string& path) {
    if (!n.IsSequence() || n.size() != 2) {
      throw Error("config field '" + path + "' must be a 2-element list");
    }
    out = Eigen::Vector2d(n[0].as<double>(), n[1].as<double>());
  }
  static void convert(const YAML::Node& n, std::vector<Vec3>& out, const std::string& path) {
    if (!n.IsSequence()) {
      throw Error("config field '" + path + "' must be a list");
    }
    out.clear();
    for (std::size_t i = 0; i < n.size(); ++i) {
      Vec3 v;
      convert(n[i], v, path + "[" + std::to_string(i) + "]");
      out.push_back(v);
    }
  }
  static void convert(const YAML::Node& n, std::vector<std::pair<double, double>>& out,
                      const std::string& path) {
    if (!n.IsSequence()) {
      throw Error("config field '" + path + "' must be a list");
    }
    out.clear();
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (!n[i].IsSequence() || n[i].size() != 2) {
        throw Error("config field '" + path + "[" + std::to_string(i) + "]' must be [start, end]");
      }
      out.emplace_back(n[i][0].as<double>(), n[i][1].as<double>());
    }
  }
  static void convert(const YAML::Node& n, std::vector<Wall>& out, const std::string& path) {
    if (!n.IsSequence()) {
      throw Error("config field '" + path + "' must be a list");
    }
    out.clear();
    for (std::size_t i = 0; i < n.size(); ++i) {
      const std::string item = path + "[" + std::to_string(i) + "]";
      Reader r(n[i]);
      Wall w;
      r.field("from", w.from, true);
      r.field("to", w.to, true);
      r.field("z_min", w.z_min);
      r.field("z_max", w.z_max);
      try {
        r.finish();
      } catch (const Error& e) {
        throw Error(std::string(e.what()) + " in " + item);
      }
      out.push_back(w);
    }
  }
  template <ConfigEnum E>
  static void convert(const YAML::Node& n, E& out, const std::string& path) {
    out = enum_from_token<E>(n.as<std::string>(), path);
  }

  std::vector<Frame> frames_;
};

// ---------------------------------------------------------------------------
// Writer

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  if (std::isnan(v)) return ".nan";
  std::string s = fmt::format("{}", v);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

class Writer {
 public:
  template <class T>
  void field(const char* key, const T& value, bool = false) {
    line(std::string(key) + ": " + render(value));
  }

  template <class Fn>
  void section(const char* key, Fn&& body) {
    line(std::string(key) + ":");
    indent_ += 2;
    body();
    indent_ -= 2;
  }

  std::string str() const { return out_.str(); }

 private:
  void line(const std::string& s) { out_ << std::string(static_cast<std::size_t>(indent_), ' ') << s << '\n'; }

  static std::string render(double v) { return number(v); }
  static std::string render(int v) { return std::to_string(v); }
  static std::string render(bool v) { return v ? "true" : "false"; }
  static std::string render(std::uint64_t v) { return std::to_string(v); }
  static std::string render(const Vec3& v) {
    return "[" + number(v.x()) + ", " + number(v.y()) + ", " + number(v.z()) + "]";
  }
  static std::string render(const Eigen::Vector2d& v) {
    return "[" + number(v.x()) + ", " + number(v.y()) + "]";
  }
  static std::string render(const std::vector<Vec3>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + render(v[i]);
    return s + "]";
  }
  static std::string render(const std::vector<std::pair<double, double>>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? ", [" : "[") + number(v[i].first) + ", " + number(v[i].second) + "]";
    return s + "]";
  }
  static std::string render(const std::vector<Wall>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      s += (i ? ", " : "") + std::string("{from: ") + render(v[i].from) + ", to: " +
           render(v[i].to) + ", z_min: " + number(v[i].z_min) + ", z_max: " + number(v[i].z_max) +
           "}";
    }
    return s + "]";
  }
  template <ConfigEnum E>
  static std::string render(E e) {
    return enum_token(e);
  }

  std::ostringstream out_;
  int indent_ = 0;
};

// ---------------------------------------------------------------------------
// Dotted-path overrides

void apply_override(YAML::Node root, const ConfigOverride& o) {
  std::vector<std::string> parts;
  std::stringstream ss(o.path);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) {
      throw Error("override '" + o.path + "': empty path component");
    }
    parts.push_back(p);
  }
  if (parts.empty()) {
    throw Error("override: empty path");
  }
  YAML::Node value;
  try {
    value = YAML::Load(o.value);
  } catch (const YAML::Exception& e) {
    throw Error("override '" + o.path + "': cannot parse value '" + o.value + "'");
  }

  // Trailing x/y/z addresses a vector component; an absent vector starts from its default.
  const std::string& last = parts.back();
  int component = -1;
  if (last == "x") component = 0;
  if (last == "y") component = 1;
  if (last == "z") component = 2;

  std::vector<YAML::Node> chain{root};
  const std::size_t map_depth = component >= 0 ? parts.size() - 1 : parts.size();
  for (std::size_t i = 0; i + 1 < map_depth; ++i) {
    YAML::Node next = chain.back()[parts[i]];
    if (!next || next.IsNull()) {
      chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
      next = chain.back()[parts[i]];
    }
    chain.push_back(next);
  }
  YAML::Node parent = chain.back();
  const std::string& key = parts[map_depth - 1];
  if (component < 0) {
    parent[key] = value;
    return;
  }
  YAML::Node vec = parent[key];
  if (!vec || !vec.IsSequence()) {
    YAML::Node defaults = YAML::Load(dump_scenario(ScenarioConfig{}));
    for (std::size_t i = 0; i < map_depth && defaults; ++i) {
      defaults = defaults[parts[i]];
    }
    if (!defaults || !defaults.IsSequence()) {
      throw Error("override '" + o.path + "': no vector field at '" + parts[map_depth - 1] + "'");
    }
    parent[key] = YAML::Clone(defaults);
    vec = parent[key];
  }
  if (vec.size() != 3) {
    throw Error("override '" + o.path + "': target is not a 3-vector");
  }
  vec[static_cast<std::size_t>(component)] = value;
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view yaml_text, std::span<const ConfigOverride> overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw Error(std::string("config parse error: ") + e.what());
  }
  if (!root || root.IsNull()) {
    root = YAML::Node(YAML::NodeType::Map);
  }
  if (!root.IsMap()) {
    throw Error("config root must be a mapping");
  }
  for (const auto& o : overrides) {
    apply_override(root, o);
  }
  ScenarioConfig config;
  Reader reader(root);
  visit_config(reader, config);
  reader.finish();
  validate(config);
  return config;
}

ScenarioConfig load_scenario(const std::string& path, std::span<const ConfigOverride> overrides) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open config '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), overrides);
}

std::string dump_scenario(const ScenarioConfig& config) {
  ScenarioConfig copy = config;
  Writer writer;
  visit_config(writer, copy);
  return writer.str();
}

}  // namespace coop
