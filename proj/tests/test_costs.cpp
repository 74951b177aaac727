#include <doctest.h>

#include "affordkit/core/rng.hpp"
#include "affordkit/costs/guidance.hpp"

using namespace affordkit;

namespace {

Trajectory straight_line(const Vec3& from, const Vec3& to, int horizon) {
  Trajectory t(horizon, 3);
  for (int h = 0; h < horizon; ++h) {
    const double a = static_cast<double>(h) / (horizon - 1);
    t.row(h) = ((1.0 - a) * from + a * to).transpose();
  }
  return t;
}

tsdf::TsdfVolume uniform_volume(double value) {
  auto vol = tsdf::make_volume(Vec3(-1, -1, -1), Vec3(1, 1, 1), 0.1, 0.1);
  for (auto& v : vol.values) v = value;
  for (auto& w : vol.weights) w = 1.0;
  return vol;
}

}  // namespace

TEST_CASE("goal cost is the squared distance to the nearest goal") {
  const Trajectory traj = straight_line(Vec3::Zero(), Vec3(0, 0, 1), 4);

  SUBCASE("endpoint on a goal") {
    Points3 goals(2, 3);
    goals << 5, 5, 5, 0, 0, 1;
    auto [value, grad] = costs::cost_goal(traj, goals);
    CHECK(value == 0.0);
    CHECK(grad.norm() == 0.0);
  }
  SUBCASE("nearest of two goals, gradient at the endpoint only") {
    Trajectory t = traj;
    t.row(3) = Vec3(1, 0, 0).transpose();
    Points3 goals(2, 3);
    goals << 0, 0, 0, 3, 0, 0;
    auto [value, grad] = costs::cost_goal(t, goals);
    CHECK(value == doctest::Approx(1.0));
    CHECK((grad.row(3).transpose() - Vec3(2, 0, 0)).norm() < 1e-12);
    CHECK(grad.topRows(3).norm() == 0.0);
  }
  SUBCASE("equidistant goals pick the lowest index; value is permutation invariant") {
    Trajectory t = traj;
    t.row(3) = Vec3::Zero().transpose();
    Points3 goals(2, 3);
    goals << 1, 0, 0, -1, 0, 0;
    auto [v1, g1] = costs::cost_goal(t, goals);
    CHECK(v1 == doctest::Approx(1.0));
    CHECK((g1.row(3).transpose() - Vec3(-2, 0, 0)).norm() < 1e-12);  // toward goal 0

    Points3 swapped(2, 3);
    swapped << -1, 0, 0, 1, 0, 0;
    auto [v2, g2] = costs::cost_goal(t, swapped);
    CHECK(v2 == v1);
  }
  SUBCASE("no goals") {
    CHECK_THROWS_AS((void)costs::cost_goal(traj, Points3(0, 3)), Error);
  }
}

TEST_CASE("collision cost accumulates penetration only") {
  const Points3 agent = Points3::Zero(1, 3);

  SUBCASE("free space is free") {
    const auto vol = uniform_volume(0.5);
    const Trajectory traj = straight_line(Vec3(-0.3, 0, 0), Vec3(0.3, 0, 0), 5);
    auto [value, grad] = costs::cost_collide(traj, agent, vol);
    CHECK(value == 0.0);
    CHECK(grad.norm() == 0.0);
  }
  SUBCASE("uniform penetration of -0.1 with one point and two waypoints") {
    const auto vol = uniform_volume(-0.1);
    const Trajectory traj = straight_line(Vec3::Zero(), Vec3(0.2, 0, 0), 2);
    auto [value, grad] = costs::cost_collide(traj, agent, vol);
    CHECK(value == doctest::Approx(0.1).epsilon(1e-9));
  }
  SUBCASE("the first waypoint never carries gradient") {
    auto vol = uniform_volume(0.5);
    Rng rng(5);
    for (auto& v : vol.values) v = rng.uniform(-1.0, 1.0);
    const Trajectory traj = straight_line(Vec3(-0.2, 0.1, 0), Vec3(0.3, -0.2, 0.1), 6);
    auto [value, grad] = costs::cost_collide(traj, costs::gripper_points(costs::AgentPrimitive::Sphere, 8, 0.05, Vec3::Zero()), vol);
    CHECK(grad.row(0).norm() == 0.0);
  }
  SUBCASE("no agent points") {
    const auto vol = uniform_volume(0.5);
    CHECK_THROWS_AS((void)costs::cost_collide(straight_line(Vec3::Zero(), Vec3::UnitX(), 3),
                                              Points3(0, 3), vol),
                    Error);
  }
}

TEST_CASE("normal cost measures direction alignment with sign freedom") {
  const Vec3 n = Vec3::UnitZ();
  SUBCASE("straight along +n") {
    auto [value, grad] = costs::cost_normal(straight_line(Vec3::Zero(), Vec3(0, 0, 1), 5), n);
    CHECK(value == doctest::Approx(0.0));
  }
  SUBCASE("straight along -n") {
    auto [value, grad] = costs::cost_normal(straight_line(Vec3::Zero(), Vec3(0, 0, -1), 5), n);
    CHECK(value == doctest::Approx(0.0));
  }
  SUBCASE("orthogonal directions cost 2") {
    auto [value, grad] = costs::cost_normal(straight_line(Vec3::Zero(), Vec3(1, 0, 0), 5), n);
    CHECK(value == doctest::Approx(2.0));
  }
  SUBCASE("a waypoint on the start point is degenerate") {
    Trajectory t = straight_line(Vec3::Zero(), Vec3(0, 0, 1), 4);
    t.row(2) = t.row(0);
    try {
      (void)costs::cost_normal(t, n);
      FAIL("expected DegenerateSegment");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateSegment);
    }
  }
  SUBCASE("non-unit normal is rejected") {
    CHECK_THROWS_AS(
        (void)costs::cost_normal(straight_line(Vec3::Zero(), Vec3(0, 0, 1), 4), Vec3(0, 0, 2)),
        Error);
  }
}

TEST_CASE("total cost composes the weighted terms") {
  const auto vol = uniform_volume(0.5);
  Points3 goals(1, 3);
  goals << 0.4, 0, 0;
  const Trajectory traj = straight_line(Vec3::Zero(), Vec3(0.2, 0, 0), 4);

  costs::GuidanceConfig cfg;
  cfg.goals = goals;
  cfg.agent_points = costs::gripper_points(costs::AgentPrimitive::Sphere, 4, 0.02, Vec3::Zero());
  cfg.normal = Vec3::UnitX();
  cfg.volume = &vol;

  SUBCASE("all weights zero") {
    cfg.lambda_goal = cfg.lambda_collide = cfg.lambda_normal = 0.0;
    const auto report = costs::cost_total(traj, cfg);
    CHECK(report.total == 0.0);
    CHECK(report.gradient.norm() == 0.0);
  }
  SUBCASE("goal-only equals the goal term") {
    cfg.lambda_goal = 1.0;
    cfg.lambda_collide = cfg.lambda_normal = 0.0;
    const auto report = costs::cost_total(traj, cfg);
    CHECK(report.total == costs::cost_goal(traj, goals).first);
    CHECK(report.collide == 0.0);
    CHECK(report.normal == 0.0);
  }
  SUBCASE("decomposition identity and first-row freeze") {
    const auto report = costs::cost_total(traj, cfg);
    CHECK(report.total == doctest::Approx(cfg.lambda_goal * report.goal +
                                          cfg.lambda_collide * report.collide +
                                          cfg.lambda_normal * report.normal)
                              .epsilon(1e-12));
    CHECK(report.gradient.row(0).norm() == 0.0);
  }
  SUBCASE("uniform weight rescaling scales the report and keeps the ranking") {
    Rng rng(71);
    std::vector<Trajectory> set;
    for (int i = 0; i < 12; ++i) {
      Trajectory t(4, 3);
      for (int h = 0; h < 4; ++h)
        for (int c = 0; c < 3; ++c) t(h, c) = rng.uniform(-0.5, 0.5);
      set.push_back(t);
    }
    auto scaled = cfg;
    const double factor = 3.7;
    scaled.lambda_goal *= factor;
    scaled.lambda_collide *= factor;
    scaled.lambda_normal *= factor;

    std::vector<double> base_total, scaled_total;
    for (const auto& t : set) {
      const auto a = costs::cost_total(t, cfg);
      const auto b = costs::cost_total(t, scaled);
      CHECK(b.total == doctest::Approx(factor * a.total).epsilon(1e-9));
      CHECK((b.gradient - factor * a.gradient).norm() <=
            1e-9 * std::max(1.0, a.gradient.norm()));
      base_total.push_back(a.total);
      scaled_total.push_back(b.total);
    }
    // argmin ranking unchanged
    const auto best_base =
        std::min_element(base_total.begin(), base_total.end()) - base_total.begin();
    const auto best_scaled =
        std::min_element(scaled_total.begin(), scaled_total.end()) - scaled_total.begin();
    CHECK(best_base == best_scaled);
  }
  SUBCASE("config invariants are enforced") {
    cfg.goals = Points3(0, 3);
    CHECK_THROWS_AS((void)costs::cost_total(traj, cfg), Error);
  }
}

TEST_CASE("all costs are non-negative on random inputs") {
  Rng rng(123);
  auto vol = uniform_volume(0.0);
  for (auto& v : vol.values) v = rng.uniform(-1.0, 1.0);
  const auto agent = costs::gripper_points(costs::AgentPrimitive::Box, 9, 0.03, Vec3::Zero());
  for (int n = 0; n < 50; ++n) {
    Trajectory t(5, 3);
    for (int h = 0; h < 5; ++h)
      for (int c = 0; c < 3; ++c) t(h, c) = rng.uniform(-0.8, 0.8);
    Points3 goals(3, 3);
    for (int g = 0; g < 3; ++g)
      for (int c = 0; c < 3; ++c) goals(g, c) = rng.uniform(-1.0, 1.0);
    CHECK(costs::cost_goal(t, goals).first >= 0.0);
    CHECK(costs::cost_collide(t, agent, vol).first >= 0.0);
    Vec3 normal(rng.normal(), rng.normal(), rng.normal());
    normal.normalize();
    CHECK(costs::cost_normal(t, normal).first >= 0.0);
  }
}

TEST_CASE("gripper primitives are deterministic and sized correctly") {
  const auto a = costs::gripper_points(costs::AgentPrimitive::Sphere, 32, 0.04, Vec3(1, 2, 3));
  const auto b = costs::gripper_points(costs::AgentPrimitive::Sphere, 32, 0.04, Vec3(1, 2, 3));
  CHECK(a == b);
  CHECK(a.rows() == 32);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    CHECK(std::abs((a.row(i).transpose() - Vec3(1, 2, 3)).norm() - 0.04) < 1e-12);
  const auto box = costs::gripper_points(costs::AgentPrimitive::Box, 27, 0.05, Vec3::Zero());
  CHECK(box.rows() == 27);
  CHECK(box.cwiseAbs().maxCoeff() <= 0.05 + 1e-12);
}
