#include "coop/tracker.hpp"

#include <algorithm>

namespace coop {

HistoryBuffer::HistoryBuffer(TrackerState anchor, ProcessNoise noise, double span)
    : anchor_(std::move(anchor)), noise_(noise), span_(span) {
  if (!(span_ > 0.0)) {
    throw Error("HistoryBuffer: span must be positive");
  }
}

double HistoryBuffer::newest_stamp() const {
  return entries_.empty() ? anchor_.stamp : entries_.back().z.stamp;
}

std::vector<Measurement> HistoryBuffer::measurements() const {
  std::vector<Measurement> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) {
    out.push_back(e.z);
  }
  return out;
}

TrackerState HistoryBuffer::insert_and_replay(const Measurement& z) {
  if (z.stamp < anchor_.stamp) {
    throw Error("too stale");
  }
  // Equal stamps keep arrival order.
  const auto pos = std::upper_bound(entries_.begin(), entries_.end(), z.stamp,
                                    [](double t, const Entry& e) { return t < e.z.stamp; });
  const auto first = static_cast<std::size_t>(pos - entries_.begin());

  // Re-filter the suffix into a scratch copy so a failed update leaves the buffer intact.
  std::vector<Entry> tail;
  tail.reserve(entries_.size() - first + 1);
  tail.push_back({z, {}});
  for (auto it = pos; it != entries_.end(); ++it) {
    tail.push_back({it->z, {}});
  }
  TrackerState prev = first == 0 ? anchor_ : entries_[first - 1].posterior;
  for (auto& e : tail) {
    prev = update(predict(prev, e.z.stamp - prev.stamp, noise_), e.z);
    e.posterior = prev;
  }
  entries_.erase(pos, entries_.end());
  entries_.insert(entries_.end(), std::make_move_iterator(tail.begin()),
                  std::make_move_iterator(tail.end()));
  prune();
  return entries_.back().posterior;
}

void HistoryBuffer::prune() {
  const double horizon = entries_.back().z.stamp - span_;
  std::size_t n = 0;
  while (n + 1 < entries_.size() && entries_[n].z.stamp < horizon) {
    ++n;
  }
  if (n == 0) {
    return;
  }
  anchor_ = entries_[n - 1].posterior;
  entries_.erase(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(n));
}

TrackerState HistoryBuffer::estimate_at(double t) const {
  if (t < anchor_.stamp) {
    throw Error("estimate_at: time precedes the buffer anchor");
  }
  const auto pos = std::upper_bound(entries_.begin(), entries_.end(), t,
                                    [](double v, const Entry& e) { return v < e.z.stamp; });
  const TrackerState& base = pos == entries_.begin() ? anchor_ : (pos - 1)->posterior;
  return predict(base, t - base.stamp, noise_);
}

}  // namespace coop
