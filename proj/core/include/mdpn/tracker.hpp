#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mdpn/pose.hpp"
#include "mdpn/suppression.hpp"

namespace mdpn {

struct Track {
  int id = 0;
  // frame index -> instance (with track_id set to id).
  std::map<int, PersonInstance> history;

  int last_active() const { return history.rbegin()->first; }
  const PersonInstance& last() const { return history.rbegin()->second; }
  std::size_t length() const noexcept { return history.size(); }
};

// Predicts where a track's pose will be at a later frame. Stands in for
// optical-flow propagation.
class Propagator {
 public:
  virtual ~Propagator() = default;
  // Pose of `track` at `frame` (>= last_active). frame == last_active
  // returns the last instance unchanged.
  virtual PersonInstance predict(const Track& track, int frame) const = 0;
};

// Last observation, unmoved.
class IdentityPropagator final : public Propagator {
 public:
  PersonInstance predict(const Track& track, int frame) const override;
};

// Per-joint constant velocity estimated from the last two observations.
// Joints not annotated in both stay where they were last seen.
class VelocityPropagator final : public Propagator {
 public:
  PersonInstance predict(const Track& track, int frame) const override;
};

enum class Matcher { kHungarian, kGreedy };
enum class PropagatorKind { kIdentity, kVelocity };

std::unique_ptr<Propagator> make_propagator(PropagatorKind kind);

struct TrackerConfig {
  double similarity_threshold = 0.3;
  int lookback = 8;
  Matcher matcher = Matcher::kHungarian;
  PropagatorKind propagator = PropagatorKind::kVelocity;
  OksConstants oks;
};

struct TrackerState {
  TrackerConfig config;
  std::vector<Track> active;
  std::vector<Track> finished;
  int next_id = 0;
  std::optional<int> last_frame;
  // Track id given to each detection of the most recent step.
  std::vector<int> frame_ids;
};

// OKS between the propagated track pose and the candidate, 0 when the gap
// frame - last_active exceeds `lookback`. Throws mdpn::Error if frame is not
// after the track's last frame.
double similarity(const Track& track, const PersonInstance& candidate, int frame,
                  const Propagator& propagator, std::span<const double> k, int lookback);

// Associates one frame of detections. Tracks idle for more than `lookback`
// frames are finished first; matched pairs need similarity >= threshold;
// leftovers open new tracks in detection order. Throws mdpn::Error if frame
// does not increase.
TrackerState step(TrackerState state, int frame, std::span<const PersonInstance> detections,
                  const JointSetRegistry& registry = default_registry());

// All tracks (active and finished) with at least min_len frames, by id.
std::vector<Track> finalize(const TrackerState& state, std::size_t min_len = 2);

}  // namespace mdpn
