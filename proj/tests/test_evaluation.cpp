#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "ilv/driver.hpp"
#include "ilv/evaluation.hpp"
#include "support/oracles.hpp"

using ilv::ConstraintHistory;
using ilv::GroundTruth;
using ilv::Pose2d;
using ilv::PrPoint;
using ilv::Trajectory;
using ilv::VprConstraint;

namespace {

// Ground truth that revisits its start: a long out-and-back corridor.
GroundTruth corridor_gt(int frames) {
  GroundTruth gt;
  const int half = frames / 2;
  for (int t = 0; t < frames; ++t) {
    const double x = t < half ? t : 2 * half - t - 1;
    gt.trajectory.push_back(Pose2d(x, 0.0, 0.0));
  }
  return gt;
}

}  // namespace

TEST_SUITE_BEGIN("evaluation");

TEST_CASE("precision undefined and recall zero for an empty consistent set") {
  const GroundTruth gt = corridor_gt(600);  // revisits: (t, 2*300 - t - 1)
  ConstraintHistory history(200);
  // True pair under gt (same x on the way back), far apart on a straight
  // line trajectory.
  history.append(std::vector<VprConstraint>{{ilv::kUnassignedId, 580, 19, 0.0}});
  Trajectory straight;
  for (int t = 0; t < 600; ++t) straight.push_back(Pose2d(t, 0.0, 0.0));
  const PrPoint point = ilv::precision_recall(straight, history, gt);
  CHECK_FALSE(point.precision.has_value());
  REQUIRE(point.recall.has_value());
  CHECK(*point.recall == 0.0);
  CHECK(point.fn == 1);
}

TEST_CASE("perfect consistent set gives precision 1 recall 1") {
  const GroundTruth gt = corridor_gt(600);
  ConstraintHistory history(200);
  std::vector<VprConstraint> batch;
  for (int k = 0; k < 10; ++k) {
    batch.push_back({ilv::kUnassignedId, 599 - 3 * k, 3 * k + 1, 0.0});
  }
  history.append(batch);
  const PrPoint point = ilv::precision_recall(gt.trajectory, history, gt);
  REQUIRE(point.precision.has_value());
  REQUIRE(point.recall.has_value());
  CHECK(*point.precision == 1.0);
  CHECK(*point.recall == 1.0);
}

TEST_CASE("precision_recall matches a set-arithmetic oracle") {
  std::mt19937_64 rng(109);
  for (int rep = 0; rep < 30; ++rep) {
    GroundTruth gt;
    Trajectory est;
    for (int t = 0; t < 300; ++t) {
      gt.trajectory.push_back(oracle::random_pose(rng, 25.0));
      est.push_back(oracle::random_pose(rng, 25.0));
    }
    ConstraintHistory history(20);
    std::vector<VprConstraint> batch;
    std::uniform_int_distribution<std::int64_t> frame(1, 300);
    for (int i = 0; i < 60; ++i) {
      std::int64_t t = frame(rng), tp = frame(rng);
      if (std::abs(t - tp) <= 20) t = (tp + 21 <= 300) ? tp + 21 : tp - 21;
      batch.push_back({ilv::kUnassignedId, t, tp, 0.0});
    }
    history.append(batch);
    const PrPoint point = ilv::precision_recall(est, history, gt);

    std::set<std::int64_t> s, truth;
    for (const auto& c : history.all()) {
      if ((est[c.t - 1].position() - est[c.t_prime - 1].position()).norm() <
          10.0)
        s.insert(c.id);
      if ((gt.trajectory[c.t - 1].position() -
           gt.trajectory[c.t_prime - 1].position())
              .norm() < 10.0)
        truth.insert(c.id);
    }
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (const auto id : s) (truth.contains(id) ? tp : fp)++;
    for (const auto id : truth)
      if (!s.contains(id)) ++fn;
    CHECK(point.tp == tp);
    CHECK(point.fp == fp);
    CHECK(point.fn == fn);
    if (tp + fp > 0)
      CHECK(*point.precision == doctest::Approx(double(tp) / double(tp + fp)));
    if (tp + fn > 0)
      CHECK(*point.recall == doctest::Approx(double(tp) / double(tp + fn)));
  }
}

TEST_CASE("precision_recall is invariant to history order") {
  std::mt19937_64 rng(113);
  GroundTruth gt;
  Trajectory est;
  for (int t = 0; t < 200; ++t) {
    gt.trajectory.push_back(oracle::random_pose(rng, 20.0));
    est.push_back(oracle::random_pose(rng, 20.0));
  }
  std::vector<VprConstraint> batch;
  std::uniform_int_distribution<std::int64_t> frame(1, 200);
  for (int i = 0; i < 40; ++i) {
    std::int64_t t = frame(rng), tp = frame(rng);
    if (std::abs(t - tp) <= 10) t = (tp + 11 <= 200) ? tp + 11 : tp - 11;
    batch.push_back({ilv::kUnassignedId, t, tp, 0.0});
  }
  ConstraintHistory a(10), b(10);
  a.append(batch);
  std::shuffle(batch.begin(), batch.end(), rng);
  b.append(batch);
  const PrPoint pa = ilv::precision_recall(est, a, gt);
  const PrPoint pb = ilv::precision_recall(est, b, gt);
  CHECK(pa.tp == pb.tp);
  CHECK(pa.fp == pb.fp);
  CHECK(pa.fn == pb.fn);
}

TEST_CASE("adding constraints moves precision and recall the right way") {
  const GroundTruth gt = corridor_gt(600);
  Trajectory est = gt.trajectory;  // consistent set = whatever we plant
  ConstraintHistory history(100);
  history.append(std::vector<VprConstraint>{
      {ilv::kUnassignedId, 599, 2, 0.0},   // true, consistent
      {ilv::kUnassignedId, 590, 11, 0.0},  // true, consistent
  });
  const PrPoint before = ilv::precision_recall(est, history, gt);

  // A constraint that is consistent under est yet false under gt: warp
  // est so frames 150 and 450 coincide while gt keeps them apart.
  GroundTruth far_gt = gt;
  far_gt.trajectory[449] = Pose2d(200.0, 50.0, 0.0);
  ConstraintHistory plus_fp(100);
  plus_fp.append(std::vector<VprConstraint>{
      {ilv::kUnassignedId, 599, 2, 0.0},
      {ilv::kUnassignedId, 590, 11, 0.0},
      {ilv::kUnassignedId, 450, 151, 0.0},  // est-consistent, gt-false
  });
  const PrPoint with_fp = ilv::precision_recall(est, plus_fp, far_gt);
  CHECK(*with_fp.precision <= *before.precision);
  CHECK(*with_fp.recall == *before.recall);

  // A true consistent constraint weakly increases recall.
  ConstraintHistory plus_tp(100);
  plus_tp.append(std::vector<VprConstraint>{
      {ilv::kUnassignedId, 599, 2, 0.0},
      {ilv::kUnassignedId, 590, 11, 0.0},
      {ilv::kUnassignedId, 580, 21, 0.0},  // true, consistent
  });
  const PrPoint with_tp = ilv::precision_recall(est, plus_tp, gt);
  CHECK(*with_tp.recall >= *before.recall);
}

TEST_CASE("trajectory_rmse basics") {
  const GroundTruth gt = corridor_gt(400);
  CHECK(ilv::trajectory_rmse(gt.trajectory, gt.trajectory) == 0.0);

  // Constant 5 m offset beyond the anchor.
  Trajectory offset = gt.trajectory;
  for (std::size_t i = 1; i < offset.size(); ++i) {
    offset[i] = Pose2d(offset[i].x, offset[i].y + 5.0, offset[i].theta);
  }
  const double want = 5.0 * std::sqrt(399.0 / 400.0);
  CHECK(ilv::trajectory_rmse(offset, gt.trajectory) ==
        doctest::Approx(want).epsilon(1e-12));

  Trajectory shorter(gt.trajectory.begin(), gt.trajectory.end() - 1);
  CHECK_THROWS_AS(ilv::trajectory_rmse(shorter, gt.trajectory),
                  std::invalid_argument);
}

TEST_CASE("trajectory_rmse matches a direct-sum oracle") {
  std::mt19937_64 rng(127);
  for (int rep = 0; rep < 20; ++rep) {
    Trajectory a, b;
    for (int t = 0; t < 150; ++t) {
      a.push_back(oracle::random_pose(rng, 15.0));
      b.push_back(oracle::random_pose(rng, 15.0));
    }
    // Anchor-align a onto b through homogeneous matrices, then sum.
    const Eigen::Matrix3d align =
        oracle::homogeneous(b.front()) *
        oracle::homogeneous(a.front()).inverse();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Eigen::Vector3d p =
          align * Eigen::Vector3d(a[i].x, a[i].y, 1.0);
      sum += (p.head<2>() - Eigen::Vector2d(b[i].x, b[i].y)).squaredNorm();
    }
    const double want = std::sqrt(sum / static_cast<double>(a.size()));
    CHECK(ilv::trajectory_rmse(a, b) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("ir baseline produces a defined point on a simulated world") {
  ilv::WorldConfig wc;
  wc.frames = 400;
  wc.step = 0.5;
  wc.delta_t = 50;
  wc.sigma_theta = 0.002;
  wc.descriptor_dim = 32;
  const ilv::World world = ilv::generate(wc);
  ConstraintHistory history(50);
  std::vector<VprConstraint> batch;
  for (std::size_t i = 0; i < world.registry.pairs.size(); i += 5) {
    const auto& p = world.registry.pairs[i];
    batch.push_back({ilv::kUnassignedId, p.second, p.first, 0.0});
  }
  history.append(batch);
  std::mt19937_64 rng(131);
  const PrPoint point = ilv::ir_baseline_point(
      history, world.odometry, 10, rng, world.gt, {}, {});
  REQUIRE(point.precision.has_value());
  CHECK(*point.precision > 0.0);
  REQUIRE(point.recall.has_value());
}

TEST_CASE("summarize_sweep aggregates per method and parameter") {
  std::vector<ilv::SweepEntry> entries;
  auto mk = [](double p, double r) {
    PrPoint point;
    point.precision = p;
    point.recall = r;
    return point;
  };
  entries.push_back({"IR", 10.0, 1, mk(0.5, 0.4)});
  entries.push_back({"IR", 10.0, 2, mk(0.7, 0.6)});
  PrPoint undef;
  undef.recall = 0.0;
  entries.push_back({"IR", 10.0, 3, undef});
  entries.push_back({"ILV", 10.0, 1, mk(1.0, 0.9)});

  const auto summaries = ilv::summarize_sweep(entries);
  REQUIRE(summaries.size() == 2);
  const auto& ilv_row = summaries[0].method == "ILV" ? summaries[0] : summaries[1];
  const auto& ir_row = summaries[0].method == "IR" ? summaries[0] : summaries[1];
  CHECK(ir_row.defined == 2);
  CHECK(ir_row.undefined == 1);
  CHECK(ir_row.precision_mean == doctest::Approx(0.6));
  CHECK(ir_row.precision_sd ==
        doctest::Approx(std::sqrt(0.02)));  // sd of {0.5, 0.7}
  CHECK(ilv_row.defined == 1);
  CHECK(ilv_row.precision_sd == 0.0);
}

TEST_SUITE_END();
