#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mdpn/pose.hpp"
#include "mdpn/skeleton.hpp"

namespace mdpn {

struct GroundTruthPerson {
  PersonInstance pose;
  int person_id = 0;
  // PCKh reference length, > 0.
  double head_size = 1.0;
};

struct GroundTruthFrame {
  int frame_index = 0;
  std::vector<GroundTruthPerson> people;
};

struct PredictionFrame {
  int frame_index = 0;
  std::vector<PersonInstance> instances;
  friend bool operator==(const PredictionFrame&, const PredictionFrame&) = default;
};

struct EvalConfig {
  // A joint is correct when distance / head_size <= pckh_threshold.
  double pckh_threshold = 0.5;
  // head_size = head_size_factor * head-box diagonal.
  double head_size_factor = 0.6;
};

double head_size_from_box(const Box& head_box, double factor = 0.6) noexcept;

// Euclidean distance normalised by head size.
double pckh_distance(const Keypoint& pred, const Keypoint& gt, double head_size);

struct JointCounts {
  std::size_t gt = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t id_switches = 0;
  double distance_sum = 0.0;  // normalised distances of TP joints

  JointCounts& operator+=(const JointCounts& o);
};

// Per-joint and total results, in percent. Undefined entries (no ground
// truth for the joint) are empty and excluded from the totals.
struct EvalReport {
  std::string joint_set;
  std::vector<std::string> joints;

  std::vector<std::optional<double>> ap;
  std::optional<double> total_ap;

  std::vector<JointCounts> counts;
  std::vector<std::optional<double>> mota;
  std::vector<std::optional<double>> motp;
  std::vector<std::optional<double>> precision;
  std::vector<std::optional<double>> recall;
  std::optional<double> total_mota;
  std::optional<double> total_motp;
  std::optional<double> total_precision;
  std::optional<double> total_recall;

  JointCounts total_counts() const;
};

// Frame-level greedy pose assignment: pairs ranked by number of PCKh-correct
// joints (descending), then mean normalised distance; pairs without a single
// correct joint are never matched. Returns the GT index per prediction, -1
// when unmatched.
std::vector<int> match_poses(std::span<const PersonInstance> predictions,
                             std::span<const GroundTruthPerson> ground_truth,
                             const EvalConfig& config = {});

// Per-joint AP (VOC-style area under the interpolated precision/recall
// curve, keypoints ranked by score over the whole sequence). Frames are
// paired by frame_index; prediction frames without ground truth are ignored.
EvalReport compute_map(std::span<const PredictionFrame> predictions,
                       std::span<const GroundTruthFrame> ground_truth, const EvalConfig& config = {});

// Per-joint CLEAR-MOT counts. MOTA = 100 (1 - (FN + FP + IDSW) / GT);
// MOTP = 100 (1 - mean TP distance / threshold); an identity switch is a GT
// joint matched to a different track id than at its previous match.
// Throws mdpn::Error if a prediction has no track id.
EvalReport compute_mota(std::span<const PredictionFrame> predictions,
                        std::span<const GroundTruthFrame> ground_truth,
                        const EvalConfig& config = {});

// Both halves in one report.
EvalReport evaluate(std::span<const PredictionFrame> predictions,
                    std::span<const GroundTruthFrame> ground_truth, const EvalConfig& config = {});

struct JointGroup {
  std::string name;
  std::vector<std::size_t> joints;
};

// Head / Shoulder / Elbow / Wrist / Hip / Knee / Ankle column groups. Head
// collects head_top, upper_neck, nose, eyes and ears.
std::vector<JointGroup> table_groups(const JointSet& set);

enum class TableKind { kAp, kMota };

// Aligned text table with Head .. Ankle and Total columns (plus MOTP, Prec,
// Rec for kMota).
std::string format_table(const EvalReport& report, TableKind kind,
                         const JointSetRegistry& registry = default_registry());

void to_json(nlohmann::json& j, const EvalReport& report);

}  // namespace mdpn
