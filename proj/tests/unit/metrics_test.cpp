#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "mdpn/error.hpp"
#include "mdpn/metrics.hpp"
#include "support/builders.hpp"

namespace mdpn {
namespace {

using fixture::figure;
using fixture::gt_person;

struct Suite {
  std::vector<PredictionFrame> pred;
  std::vector<GroundTruthFrame> gt;
};

// Two people walking towards each other for ten frames; predictions equal
// the ground truth and carry the person id as track id.
Suite walking_pair(int frames = 10) {
  Suite s;
  for (int t = 0; t < frames; ++t) {
    const PersonInstance a = figure(10.0 * t, 0);
    const PersonInstance b = figure(400.0 - 10.0 * t, 30);
    s.gt.push_back({t, {gt_person(0, a), gt_person(1, b)}});
    PredictionFrame f{t, {a, b}};
    f.instances[0].track_id = 0;
    f.instances[1].track_id = 1;
    s.pred.push_back(f);
  }
  return s;
}

TEST(Metrics, HeadSizeAndDistance) {
  EXPECT_DOUBLE_EQ(head_size_from_box({0, 0, 30, 40}), 30.0);
  EXPECT_DOUBLE_EQ(pckh_distance({3, 4, 1, true}, {0, 0, 1, true}, 10.0), 0.5);
  EXPECT_THROW(pckh_distance({}, {}, 0.0), Error);
}

TEST(Metrics, PerfectPredictionsScoreHundred) {
  const Suite s = walking_pair();
  const auto r = evaluate(s.pred, s.gt);
  for (std::size_t j = 0; j < 15; ++j) {
    EXPECT_DOUBLE_EQ(*r.ap[j], 100.0);
    EXPECT_DOUBLE_EQ(*r.mota[j], 100.0);
    EXPECT_DOUBLE_EQ(*r.motp[j], 100.0);
  }
  EXPECT_DOUBLE_EQ(*r.total_ap, 100.0);
  EXPECT_DOUBLE_EQ(*r.total_mota, 100.0);
}

TEST(Metrics, IdentitySwapCostsTwoSwitchesPerJoint) {
  Suite s = walking_pair();
  for (int t = 5; t < 10; ++t) {
    s.pred[t].instances[0].track_id = 1;
    s.pred[t].instances[1].track_id = 0;
  }
  const auto r = compute_mota(s.pred, s.gt);
  for (std::size_t j = 0; j < 15; ++j) {
    EXPECT_EQ(r.counts[j].id_switches, 2u);
    EXPECT_DOUBLE_EQ(*r.mota[j], 90.0);
  }
  EXPECT_DOUBLE_EQ(*compute_map(s.pred, s.gt).total_ap, 100.0);
}

TEST(Metrics, PckhBoundaryIsInclusive) {
  Suite s = walking_pair(1);
  for (auto& k : s.pred[0].instances[0].keypoints) k.x += 10.0;  // exactly 0.5 head sizes
  EXPECT_DOUBLE_EQ(*compute_mota(s.pred, s.gt).total_mota, 100.0);
  for (auto& k : s.pred[0].instances[0].keypoints) k.x += 0.01;
  const auto r = compute_mota(s.pred, s.gt);
  EXPECT_EQ(r.counts[0].fn, 1u);
  EXPECT_EQ(r.counts[0].fp, 1u);
}

TEST(Metrics, MissingJointsAreExcludedNotCounted) {
  Suite s = walking_pair(2);
  for (auto& f : s.gt) {
    for (auto& p : f.people) p.pose.keypoints[14].annotated = false;
  }
  for (auto& f : s.pred) {
    for (auto& p : f.instances) p.keypoints[14].annotated = false;
  }
  const auto r = evaluate(s.pred, s.gt);
  EXPECT_FALSE(r.ap[14]);
  EXPECT_FALSE(r.mota[14]);
  EXPECT_DOUBLE_EQ(*r.total_ap, 100.0);
  EXPECT_EQ(r.counts[14].gt, 0u);
}

TEST(Metrics, ApOfHandRankedList) {
  // One GT person per frame over 3 frames, plus a high-scoring false
  // positive in frame 0: ranking F T T T gives AP = 3/4.
  Suite s;
  for (int t = 0; t < 3; ++t) {
    const auto a = figure(0, 0, 0.5);
    s.gt.push_back({t, {gt_person(0, a)}});
    s.pred.push_back({t, {a}});
  }
  s.pred[0].instances.push_back(figure(500, 500, 0.9));
  const auto r = compute_map(s.pred, s.gt);
  EXPECT_NEAR(*r.ap[0], 75.0, 1e-12);
}

TEST(Metrics, PredictionFramesWithoutGroundTruthAreIgnored) {
  Suite s = walking_pair(3);
  PredictionFrame extra{7, {figure(0, 0)}};
  extra.instances[0].track_id = 9;
  s.pred.push_back(extra);
  EXPECT_DOUBLE_EQ(*evaluate(s.pred, s.gt).total_mota, 100.0);
}

TEST(Metrics, RejectsBadInput) {
  Suite s = walking_pair(2);
  s.pred[0].instances[0].track_id.reset();
  EXPECT_THROW(compute_mota(s.pred, s.gt), Error);
  s = walking_pair(2);
  s.gt[0].people[0].head_size = 0.0;
  EXPECT_THROW(compute_map(s.pred, s.gt), Error);
}

// Each injected false positive or false negative must lower both metrics.
TEST(Metrics, InjectedErrorsLowerScoresMonotonically) {
  Suite s = walking_pair();
  double last_ap = *compute_map(s.pred, s.gt).total_ap;
  double last_mota = *compute_mota(s.pred, s.gt).total_mota;
  for (int t = 0; t < 4; ++t) {
    PersonInstance fp = figure(700, 700, 0.99);
    fp.track_id = 100 + t;
    s.pred[t].instances.push_back(fp);
    const double ap = *compute_map(s.pred, s.gt).total_ap;
    const double mota = *compute_mota(s.pred, s.gt).total_mota;
    EXPECT_LT(ap, last_ap);
    EXPECT_LT(mota, last_mota);
    last_ap = ap;
    last_mota = mota;
  }
  for (int t = 5; t < 9; ++t) {
    s.pred[t].instances.erase(s.pred[t].instances.begin());
    const double ap = *compute_map(s.pred, s.gt).total_ap;
    const double mota = *compute_mota(s.pred, s.gt).total_mota;
    EXPECT_LT(ap, last_ap);
    EXPECT_LT(mota, last_mota);
    last_ap = ap;
    last_mota = mota;
  }
}

TEST(Metrics, MatchPosesNeedsACorrectJoint) {
  const auto a = figure(0, 0);
  const std::vector<GroundTruthPerson> gt{gt_person(0, a), gt_person(1, figure(300, 0))};
  const std::vector<PersonInstance> pred{figure(302, 0), figure(900, 900), figure(1, 0)};
  EXPECT_EQ(match_poses(pred, gt), (std::vector<int>{1, -1, 0}));
}

TEST(Metrics, TableAndJson) {
  const Suite s = walking_pair();
  const auto r = evaluate(s.pred, s.gt);
  const std::string ap = format_table(r, TableKind::kAp);
  EXPECT_NE(ap.find("Head mAP"), std::string::npos);
  EXPECT_NE(ap.find("Total mAP"), std::string::npos);
  const std::string mota = format_table(r, TableKind::kMota);
  EXPECT_NE(mota.find("Total MOTP"), std::string::npos);
  const nlohmann::json j = r;
  EXPECT_EQ(j.at("joint_set"), "posetrack");
  const auto groups = table_groups(builtin_joint_set("posetrack"));
  ASSERT_EQ(groups.size(), 7u);
  EXPECT_EQ(groups[0].name, "Head");
  EXPECT_EQ(groups[0].joints.size(), 3u);
}

}  // namespace
}  // namespace mdpn
