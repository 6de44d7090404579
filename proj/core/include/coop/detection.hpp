#pragma once

#include "coop/geometry.hpp"

#include <cstdint>

namespace coop {

using TrackId = std::int64_t;

/// A LiDAR detection of a flying object, expressed in the SLAM frame L.
struct Detection {
  double stamp = 0.0;
  TrackId track_id = 0;
  Vec3 position = Vec3::Zero();
  Mat3 covariance = Mat3::Identity() * 0.0225;
  FrameId frame = FrameId::L;
};

}  // namespace coop
