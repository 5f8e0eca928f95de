#include "mdpn/tracker.hpp"

#include <algorithm>
#include <iterator>

#include "mdpn/assignment.hpp"
#include "mdpn/error.hpp"

namespace mdpn {

PersonInstance IdentityPropagator::predict(const Track& track, int /*frame*/) const {
  return track.last();
}

PersonInstance VelocityPropagator::predict(const Track& track, int frame) const {
  const int last_frame = track.last_active();
  PersonInstance out = track.last();
  if (frame == last_frame || track.length() < 2) return out;
  const auto newest = track.history.rbegin();
  const auto previous = std::next(newest);
  const double dt = static_cast<double>(newest->first - previous->first);
  const double gap = static_cast<double>(frame - last_frame);
  const auto& now = newest->second.keypoints;
  const auto& before = previous->second.keypoints;
  for (std::size_t i = 0; i < out.keypoints.size() && i < before.size(); ++i) {
    if (!now[i].annotated || !before[i].annotated) continue;
    out.keypoints[i].x = now[i].x + (now[i].x - before[i].x) / dt * gap;
    out.keypoints[i].y = now[i].y + (now[i].y - before[i].y) / dt * gap;
  }
  return out;
}

std::unique_ptr<Propagator> make_propagator(PropagatorKind kind) {
  if (kind == PropagatorKind::kIdentity) return std::make_unique<IdentityPropagator>();
  return std::make_unique<VelocityPropagator>();
}

double similarity(const Track& track, const PersonInstance& candidate, int frame,
                  const Propagator& propagator, std::span<const double> k, int lookback) {
  const int gap = frame - track.last_active();
  if (gap <= 0) throw Error("similarity: frame must follow the track's last frame");
  if (gap > lookback) return 0.0;
  return oks(propagator.predict(track, frame), candidate, k);
}

TrackerState step(TrackerState state, int frame, std::span<const PersonInstance> detections,
                  const JointSetRegistry& registry) {
  if (state.last_frame && frame <= *state.last_frame) {
    throw Error("tracker frames must strictly increase (got " + std::to_string(frame) +
                " after " + std::to_string(*state.last_frame) + ")");
  }
  state.last_frame = frame;
  const int lookback = state.config.lookback;

  auto expired = std::stable_partition(state.active.begin(), state.active.end(), [&](const Track& t) {
    return frame - t.last_active() <= lookback;
  });
  std::move(expired, state.active.end(), std::back_inserter(state.finished));
  state.active.erase(expired, state.active.end());

  state.frame_ids.assign(detections.size(), -1);
  if (!detections.empty() && !state.active.empty()) {
    const auto propagator = make_propagator(state.config.propagator);
    const auto k = state.config.oks.for_set(registry.get(detections.front().joint_set));
    CostMatrix sim(state.active.size(), detections.size());
    CostMatrix cost(state.active.size(), detections.size());
    for (std::size_t t = 0; t < state.active.size(); ++t) {
      const PersonInstance predicted = propagator->predict(state.active[t], frame);
      for (std::size_t d = 0; d < detections.size(); ++d) {
        const double s = frame - state.active[t].last_active() > lookback
                             ? 0.0
                             : oks(predicted, detections[d], k);
        sim(t, d) = s;
        cost(t, d) = 1.0 - s;
      }
    }
    const Assignment a = state.config.matcher == Matcher::kHungarian ? solve_hungarian(cost)
                                                                      : solve_greedy(cost);
    for (std::size_t t = 0; t < a.row_to_col.size(); ++t) {
      if (a.row_to_col[t] == Assignment::kUnassigned) continue;
      const auto d = static_cast<std::size_t>(a.row_to_col[t]);
      if (sim(t, d) < state.config.similarity_threshold) continue;
      Track& track = state.active[t];
      PersonInstance inst = detections[d];
      inst.track_id = track.id;
      track.history.emplace(frame, std::move(inst));
      state.frame_ids[d] = track.id;
    }
  }
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (state.frame_ids[d] != -1) continue;
    Track track;
    track.id = state.next_id++;
    PersonInstance inst = detections[d];
    inst.track_id = track.id;
    track.history.emplace(frame, std::move(inst));
    state.frame_ids[d] = track.id;
    state.active.push_back(std::move(track));
  }
  return state;
}

std::vector<Track> finalize(const TrackerState& state, std::size_t min_len) {
  if (min_len < 1) throw Error("finalize: min_len must be at least 1");
  std::vector<Track> out;
  for (const auto* group : {&state.active, &state.finished}) {
    for (const auto& t : *group) {
      if (t.length() >= min_len) out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
  return out;
}

}  // namespace mdpn
