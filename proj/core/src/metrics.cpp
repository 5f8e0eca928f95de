#include "mdpn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

#include <nlohmann/json.hpp>

#include "mdpn/error.hpp"

namespace mdpn {
namespace {

struct FramePair {
  const PredictionFrame* pred = nullptr;
  const GroundTruthFrame* gt = nullptr;
};

// Ground-truth frames in frame order, each with its prediction frame (if any).
std::vector<FramePair> pair_frames(std::span<const PredictionFrame> predictions,
                                   std::span<const GroundTruthFrame> ground_truth) {
  std::map<int, const PredictionFrame*> by_index;
  for (const auto& f : predictions) {
    if (!by_index.emplace(f.frame_index, &f).second) {
      throw Error("duplicate prediction frame " + std::to_string(f.frame_index));
    }
  }
  std::map<int, const GroundTruthFrame*> gt_by_index;
  for (const auto& f : ground_truth) {
    if (!gt_by_index.emplace(f.frame_index, &f).second) {
      throw Error("duplicate ground-truth frame " + std::to_string(f.frame_index));
    }
  }
  std::vector<FramePair> out;
  for (const auto& [index, gt] : gt_by_index) {
    auto it = by_index.find(index);
    out.push_back({it == by_index.end() ? nullptr : it->second, gt});
  }
  return out;
}

struct Layout {
  std::string joint_set;
  std::size_t joints = 0;
};

Layout common_layout(std::span<const PredictionFrame> predictions,
                     std::span<const GroundTruthFrame> ground_truth) {
  Layout layout;
  auto visit = [&](const PersonInstance& p) {
    if (layout.joint_set.empty()) {
      layout.joint_set = p.joint_set;
      layout.joints = p.keypoints.size();
    } else if (p.joint_set != layout.joint_set || p.keypoints.size() != layout.joints) {
      throw Error("evaluation inputs mix joint sets ('" + layout.joint_set + "' and '" +
                  p.joint_set + "')");
    }
  };
  for (const auto& f : ground_truth) {
    for (const auto& g : f.people) {
      if (!(g.head_size > 0.0)) throw Error("ground-truth head size must be positive");
      visit(g.pose);
    }
  }
  for (const auto& f : predictions) {
    for (const auto& p : f.instances) visit(p);
  }
  return layout;
}

std::optional<double> mean_defined(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (!v) continue;
    sum += *v;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

bool joint_correct(const Keypoint& p, const Keypoint& g, double head_size, double threshold,
                   double* distance) {
  if (!p.annotated || !g.annotated) return false;
  const double d = pckh_distance(p, g, head_size);
  if (distance) *distance = d;
  return d <= threshold;
}

double voc_ap(std::vector<std::pair<double, bool>> entries, std::size_t positives) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<double> mrec{0.0};
  std::vector<double> mpre{0.0};
  std::size_t tp = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].second) ++tp;
    mrec.push_back(static_cast<double>(tp) / static_cast<double>(positives));
    mpre.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
  }
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i) {
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  }
  return 100.0 * ap;
}

EvalReport empty_report(const Layout& layout) {
  EvalReport r;
  r.joint_set = layout.joint_set;
  if (default_registry().contains(layout.joint_set)) {
    r.joints = default_registry().get(layout.joint_set).joints;
  }
  if (r.joints.size() != layout.joints) {
    r.joints.clear();
    for (std::size_t j = 0; j < layout.joints; ++j) r.joints.push_back("joint_" + std::to_string(j));
  }
  return r;
}

void fill_ap(EvalReport& report, std::span<const PredictionFrame> predictions,
             std::span<const GroundTruthFrame> ground_truth, const EvalConfig& config,
             std::size_t joints) {
  std::vector<std::vector<std::pair<double, bool>>> entries(joints);
  std::vector<std::size_t> positives(joints, 0);
  for (const auto& [pf, gf] : pair_frames(predictions, ground_truth)) {
    for (const auto& g : gf->people) {
      for (std::size_t j = 0; j < joints; ++j) positives[j] += g.pose.keypoints[j].annotated;
    }
    if (!pf) continue;
    const auto match = match_poses(pf->instances, gf->people, config);
    for (std::size_t p = 0; p < pf->instances.size(); ++p) {
      const PersonInstance& pred = pf->instances[p];
      for (std::size_t j = 0; j < joints; ++j) {
        const Keypoint& k = pred.keypoints[j];
        if (!k.annotated) continue;
        bool tp = false;
        if (match[p] >= 0) {
          const auto& g = gf->people[static_cast<std::size_t>(match[p])];
          tp = joint_correct(k, g.pose.keypoints[j], g.head_size, config.pckh_threshold, nullptr);
        }
        entries[j].emplace_back(k.score, tp);
      }
    }
  }
  report.ap.assign(joints, std::nullopt);
  for (std::size_t j = 0; j < joints; ++j) {
    if (positives[j] > 0) report.ap[j] = voc_ap(std::move(entries[j]), positives[j]);
  }
  report.total_ap = mean_defined(report.ap);
}

void fill_mota(EvalReport& report, std::span<const PredictionFrame> predictions,
               std::span<const GroundTruthFrame> ground_truth, const EvalConfig& config,
               std::size_t joints) {
  report.counts.assign(joints, JointCounts{});
  // (person id, joint) -> track id at the previous match.
  std::map<std::pair<int, std::size_t>, int> last_track;
  for (const auto& [pf, gf] : pair_frames(predictions, ground_truth)) {
    static const std::vector<PersonInstance> kNone;
    const auto& preds = pf ? pf->instances : kNone;
    for (const auto& p : preds) {
      if (!p.track_id) throw Error("MOTA evaluation needs a track id on every prediction");
    }
    const auto match = match_poses(preds, gf->people, config);
    std::vector<int> gt_to_pred(gf->people.size(), -1);
    for (std::size_t p = 0; p < match.size(); ++p) {
      if (match[p] >= 0) gt_to_pred[static_cast<std::size_t>(match[p])] = static_cast<int>(p);
    }
    for (std::size_t j = 0; j < joints; ++j) {
      JointCounts& c = report.counts[j];
      std::vector<char> pred_used(preds.size(), 0);
      for (std::size_t g = 0; g < gf->people.size(); ++g) {
        const GroundTruthPerson& person = gf->people[g];
        if (!person.pose.keypoints[j].annotated) continue;
        ++c.gt;
        double d = 0.0;
        const int p = gt_to_pred[g];
        if (p >= 0 && joint_correct(preds[static_cast<std::size_t>(p)].keypoints[j],
                                    person.pose.keypoints[j], person.head_size,
                                    config.pckh_threshold, &d)) {
          ++c.tp;
          c.distance_sum += d;
          pred_used[static_cast<std::size_t>(p)] = 1;
          const int tid = *preds[static_cast<std::size_t>(p)].track_id;
          auto [it, inserted] = last_track.try_emplace({person.person_id, j}, tid);
          if (!inserted && it->second != tid) {
            ++c.id_switches;
            it->second = tid;
          }
        } else {
          ++c.fn;
        }
      }
      for (std::size_t p = 0; p < preds.size(); ++p) {
        if (preds[p].keypoints[j].annotated && !pred_used[p]) ++c.fp;
      }
    }
  }
  report.mota.assign(joints, std::nullopt);
  report.motp.assign(joints, std::nullopt);
  report.precision.assign(joints, std::nullopt);
  report.recall.assign(joints, std::nullopt);
  for (std::size_t j = 0; j < joints; ++j) {
    const JointCounts& c = report.counts[j];
    if (c.gt == 0) continue;
    const double gt = static_cast<double>(c.gt);
    report.mota[j] = 100.0 * (1.0 - static_cast<double>(c.fn + c.fp + c.id_switches) / gt);
    if (c.tp > 0) {
      report.motp[j] =
          100.0 * (1.0 - c.distance_sum / static_cast<double>(c.tp) / config.pckh_threshold);
    }
    report.precision[j] =
        c.tp + c.fp == 0 ? 0.0 : 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    report.recall[j] = 100.0 * static_cast<double>(c.tp) / gt;
  }
  report.total_mota = mean_defined(report.mota);
  report.total_motp = mean_defined(report.motp);
  report.total_precision = mean_defined(report.precision);
  report.total_recall = mean_defined(report.recall);
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", *v);
  return buf;
}

std::optional<double> group_mean(const std::vector<std::optional<double>>& values,
                                 const JointGroup& group) {
  std::vector<std::optional<double>> picked;
  for (std::size_t j : group.joints) {
    if (j < values.size()) picked.push_back(values[j]);
  }
  return mean_defined(picked);
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

double head_size_from_box(const Box& head_box, double factor) noexcept {
  return factor * std::hypot(head_box.w, head_box.h);
}

double pckh_distance(const Keypoint& pred, const Keypoint& gt, double head_size) {
  if (!(head_size > 0.0)) throw Error("head size must be positive");
  return std::hypot(pred.x - gt.x, pred.y - gt.y) / head_size;
}

JointCounts& JointCounts::operator+=(const JointCounts& o) {
  gt += o.gt;
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  id_switches += o.id_switches;
  distance_sum += o.distance_sum;
  return *this;
}

JointCounts EvalReport::total_counts() const {
  JointCounts total;
  for (const auto& c : counts) total += c;
  return total;
}

std::vector<int> match_poses(std::span<const PersonInstance> predictions,
                             std::span<const GroundTruthPerson> ground_truth,
                             const EvalConfig& config) {
  struct Candidate {
    std::size_t correct;
    double mean_distance;
    std::size_t pred;
    std::size_t gt;
  };
  std::vector<Candidate> candidates;
  for (std::size_t p = 0; p < predictions.size(); ++p) {
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      const auto& pk = predictions[p].keypoints;
      const auto& gk = ground_truth[g].pose.keypoints;
      if (pk.size() != gk.size()) throw Error("prediction and ground truth joint counts differ");
      std::size_t correct = 0;
      std::size_t shared = 0;
      double dist = 0.0;
      for (std::size_t j = 0; j < pk.size(); ++j) {
        if (!pk[j].annotated || !gk[j].annotated) continue;
        const double d = pckh_distance(pk[j], gk[j], ground_truth[g].head_size);
        dist += d;
        ++shared;
        if (d <= config.pckh_threshold) ++correct;
      }
      if (correct == 0) continue;
      candidates.push_back({correct, dist / static_cast<double>(shared), p, g});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tuple(b.correct, a.mean_distance, a.pred, a.gt) <
           std::tuple(a.correct, b.mean_distance, b.pred, b.gt);
  });
  std::vector<int> match(predictions.size(), -1);
  std::vector<char> gt_used(ground_truth.size(), 0);
  for (const auto& c : candidates) {
    if (match[c.pred] >= 0 || gt_used[c.gt]) continue;
    match[c.pred] = static_cast<int>(c.gt);
    gt_used[c.gt] = 1;
  }
  return match;
}

EvalReport compute_map(std::span<const PredictionFrame> predictions,
                       std::span<const GroundTruthFrame> ground_truth, const EvalConfig& config) {
  const Layout layout = common_layout(predictions, ground_truth);
  EvalReport report = empty_report(layout);
  fill_ap(report, predictions, ground_truth, config, layout.joints);
  return report;
}

EvalReport compute_mota(std::span<const PredictionFrame> predictions,
                        std::span<const GroundTruthFrame> ground_truth, const EvalConfig& config) {
  const Layout layout = common_layout(predictions, ground_truth);
  EvalReport report = empty_report(layout);
  fill_mota(report, predictions, ground_truth, config, layout.joints);
  return report;
}

EvalReport evaluate(std::span<const PredictionFrame> predictions,
                    std::span<const GroundTruthFrame> ground_truth, const EvalConfig& config) {
  const Layout layout = common_layout(predictions, ground_truth);
  EvalReport report = empty_report(layout);
  fill_ap(report, predictions, ground_truth, config, layout.joints);
  fill_mota(report, predictions, ground_truth, config, layout.joints);
  return report;
}

std::vector<JointGroup> table_groups(const JointSet& set) {
  const std::pair<const char*, std::vector<std::string_view>> spec[] = {
      {"Head", {"head_top", "upper_neck", "nose", "left_eye", "right_eye", "left_ear", "right_ear"}},
      {"Shoulder", {"left_shoulder", "right_shoulder"}},
      {"Elbow", {"left_elbow", "right_elbow"}},
      {"Wrist", {"left_wrist", "right_wrist"}},
      {"Hip", {"left_hip", "right_hip"}},
      {"Knee", {"left_knee", "right_knee"}},
      {"Ankle", {"left_ankle", "right_ankle"}},
  };
  std::vector<JointGroup> groups;
  for (const auto& [name, members] : spec) {
    JointGroup g{name, {}};
    for (auto m : members) {
      if (auto i = set.index_of(m)) g.joints.push_back(*i);
    }
    std::sort(g.joints.begin(), g.joints.end());
    groups.push_back(std::move(g));
  }
  return groups;
}

std::string format_table(const EvalReport& report, TableKind kind,
                         const JointSetRegistry& registry) {
  std::vector<JointGroup> groups;
  if (registry.contains(report.joint_set)) groups = table_groups(registry.get(report.joint_set));
  const auto& values = kind == TableKind::kAp ? report.ap : report.mota;
  const std::string metric = kind == TableKind::kAp ? "mAP" : "MOTA";

  std::vector<std::string> header;
  std::vector<std::string> row;
  for (const auto& g : groups) {
    header.push_back(g.name + " " + metric);
    row.push_back(cell(group_mean(values, g)));
  }
  header.push_back("Total " + metric);
  row.push_back(cell(kind == TableKind::kAp ? report.total_ap : report.total_mota));
  if (kind == TableKind::kMota) {
    header.insert(header.end(), {"Total MOTP", "Total Prec", "Total Rec"});
    row.insert(row.end(), {cell(report.total_motp), cell(report.total_precision),
                           cell(report.total_recall)});
  }
  std::string out;
  for (int line = 0; line < 2; ++line) {
    const auto& cells = line == 0 ? header : row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::size_t width = std::max(header[i].size(), row[i].size());
      if (i > 0) out += " | ";
      out += std::string(width - cells[i].size(), ' ') + cells[i];
    }
    out += '\n';
  }
  return out;
}

void to_json(nlohmann::json& j, const EvalReport& report) {
  j = nlohmann::json::object();
  j["joint_set"] = report.joint_set;
  auto per_joint = [&](const std::vector<std::optional<double>>& v) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < v.size() && i < report.joints.size(); ++i) {
      obj[report.joints[i]] = optional_json(v[i]);
    }
    return obj;
  };
  std::vector<JointGroup> groups;
  if (default_registry().contains(report.joint_set)) {
    groups = table_groups(default_registry().get(report.joint_set));
  }
  auto grouped = [&](const std::vector<std::optional<double>>& v) {
    nlohmann::json obj = nlohmann::json::object();
    for (const auto& g : groups) obj[g.name] = optional_json(group_mean(v, g));
    return obj;
  };
  if (!report.ap.empty()) {
    j["ap"] = {{"per_joint", per_joint(report.ap)},
               {"groups", grouped(report.ap)},
               {"total", optional_json(report.total_ap)}};
  }
  if (!report.mota.empty()) {
    nlohmann::json counts = nlohmann::json::object();
    for (std::size_t i = 0; i < report.counts.size() && i < report.joints.size(); ++i) {
      const auto& c = report.counts[i];
      counts[report.joints[i]] = {{"gt", c.gt}, {"tp", c.tp}, {"fp", c.fp},
                                  {"fn", c.fn}, {"id_switches", c.id_switches}};
    }
    j["mot"] = {{"mota", per_joint(report.mota)},
                {"mota_groups", grouped(report.mota)},
                {"counts", counts},
                {"total_mota", optional_json(report.total_mota)},
                {"total_motp", optional_json(report.total_motp)},
                {"total_precision", optional_json(report.total_precision)},
                {"total_recall", optional_json(report.total_recall)}};
  }
}

}  // namespace mdpn
