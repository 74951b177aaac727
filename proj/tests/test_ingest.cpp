#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "affordkit/geom/camera.hpp"
#include "affordkit/ingest/scene.hpp"
#include "affordkit/ingest/synth.hpp"

using namespace affordkit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("affordkit_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ingest::SynthConfig small_config() {
  ingest::SynthConfig cfg;
  cfg.frames = 4;
  cfg.landmarks = 60;
  cfg.width = 128;
  cfg.height = 96;
  cfg.focal = 70.0;
  return cfg;
}

}  // namespace

TEST_CASE("synth_scene is deterministic for a fixed config and seed") {
  const auto cfg = small_config();
  auto [a, gta] = ingest::synth_scene(cfg, 42);
  auto [b, gtb] = ingest::synth_scene(cfg, 42);

  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    CHECK(a.frames[i].depth == b.frames[i].depth);
    CHECK(a.frames[i].hand_mask == b.frames[i].hand_mask);
    CHECK(a.frames[i].pose_init.rotation().coeffs() == b.frames[i].pose_init.rotation().coeffs());
    CHECK(a.frames[i].pose_init.translation() == b.frames[i].pose_init.translation());
  }
  REQUIRE(a.landmarks.size() == b.landmarks.size());
  for (std::size_t i = 0; i < a.landmarks.size(); ++i)
    CHECK(a.landmarks[i].position == b.landmarks[i].position);
  CHECK(gta.hand_trajectory == gtb.hand_trajectory);

  auto [c, gtc] = ingest::synth_scene(cfg, 43);
  CHECK(c.landmarks[0].position != a.landmarks[0].position);
}

TEST_CASE("noiseless fronto scene renders landmark depths exactly") {
  auto cfg = small_config();
  cfg.geometry = ingest::SynthGeometry::FrontoWall;
  cfg.scale = 2.0;
  auto [scene, gt] = ingest::synth_scene(cfg, 9);

  int checked = 0;
  for (const auto& lm : scene.landmarks) {
    for (const auto& obs : lm.observations) {
      const auto& frame = scene.frames[obs.frame];
      const int c = static_cast<int>(std::lround(obs.pixel.x()));
      const int r = static_cast<int>(std::lround(obs.pixel.y()));
      if (frame.hand_mask(r, c)) continue;  // blob occludes the wall there
      const double expected = gt.s_g * (frame.pose_init.inverse() * lm.position).z();
      CHECK(frame.depth(r, c) == doctest::Approx(expected).epsilon(1e-12));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("static mask is the exact complement of hand and object masks") {
  auto [scene, gt] = ingest::synth_scene(small_config(), 5);
  for (int i = 0; i < scene.frame_count(); ++i) {
    const auto& f = scene.frames[i];
    for (Eigen::Index p = 0; p < f.hand_mask.size(); ++p) {
      const bool masked = f.hand_mask.data()[p] || f.object_mask.data()[p];
      CHECK(scene.static_masks[i].data()[p] == (masked ? 0 : 1));
    }
  }
}

TEST_CASE("scene file round-trip preserves everything") {
  const auto dir = temp_dir("roundtrip");
  auto [scene, gt] = ingest::synth_scene(small_config(), 7);
  ingest::write_scene(scene, dir);
  const auto loaded = ingest::load_scene(dir / "manifest.json");

  REQUIRE(loaded.frames.size() == scene.frames.size());
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    // depth goes through float32 on disk
    for (Eigen::Index p = 0; p < scene.frames[i].depth.size(); ++p) {
      const double orig = scene.frames[i].depth.data()[p];
      const double back = loaded.frames[i].depth.data()[p];
      if (std::isnan(orig)) {
        CHECK(std::isnan(back));
      } else {
        CHECK(back == static_cast<double>(static_cast<float>(orig)));
      }
    }
    CHECK(loaded.frames[i].hand_mask == scene.frames[i].hand_mask);
    CHECK(loaded.frames[i].pose_init.isApprox(scene.frames[i].pose_init, 1e-15));
  }
  REQUIRE(loaded.landmarks.size() == scene.landmarks.size());
  for (std::size_t i = 0; i < scene.landmarks.size(); ++i) {
    CHECK(loaded.landmarks[i].position == scene.landmarks[i].position);
    CHECK(loaded.landmarks[i].observations.size() == scene.landmarks[i].observations.size());
  }

  // a second write/load cycle is bit-stable
  const auto dir2 = temp_dir("roundtrip2");
  ingest::write_scene(loaded, dir2);
  const auto again = ingest::load_scene(dir2 / "manifest.json");
  for (std::size_t i = 0; i < loaded.frames.size(); ++i) {
    for (Eigen::Index p = 0; p < loaded.frames[i].depth.size(); ++p) {
      const double a = loaded.frames[i].depth.data()[p];
      const double b = again.frames[i].depth.data()[p];
      CHECK((std::isnan(a) ? std::isnan(b) : a == b));
    }
  }
}

TEST_CASE("load_scene rejects broken inputs") {
  const auto dir = temp_dir("broken");
  auto [scene, gt] = ingest::synth_scene(small_config(), 3);
  ingest::write_scene(scene, dir);

  SUBCASE("missing depth file") {
    fs::remove(dir / "frame_1_depth.f32");
    CHECK_THROWS_AS((void)ingest::load_scene(dir / "manifest.json"), Error);
  }
  SUBCASE("mask size mismatch") {
    ImageXb wrong = ImageXb::Zero(48, 64);
    std::ofstream out(dir / "frame_0_hand.pgm", std::ios::binary);
    out << "P5\n64 48\n255\n";
    out.write(reinterpret_cast<const char*>(wrong.data()), wrong.size());
    out.close();
    try {
      (void)ingest::load_scene(dir / "manifest.json");
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
  }
  SUBCASE("landmark observation in an unknown frame") {
    std::ofstream out(dir / "landmarks.json");
    out << R"([{"id": 0, "xyz": [0.0, 0.0, 1.0], "obs": [[0, 10.0, 10.0], [99, 11.0, 11.0]]}])";
    out.close();
    try {
      (void)ingest::load_scene(dir / "manifest.json");
      FAIL("expected BadLandmarkObservation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadLandmarkObservation);
    }
  }
  SUBCASE("landmark pixel out of bounds") {
    std::ofstream out(dir / "landmarks.json");
    out << R"([{"id": 0, "xyz": [0.0, 0.0, 1.0], "obs": [[0, 10.0, 10.0], [1, 9999.0, 11.0]]}])";
    out.close();
    try {
      (void)ingest::load_scene(dir / "manifest.json");
      FAIL("expected BadLandmarkObservation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadLandmarkObservation);
    }
  }
  SUBCASE("unparsable manifest") {
    std::ofstream out(dir / "manifest.json");
    out << "{ not json";
    out.close();
    try {
      (void)ingest::load_scene(dir / "manifest.json");
      FAIL("expected ManifestParse");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ManifestParse);
    }
  }
}

TEST_CASE("synth_scene rejects degenerate configs") {
  auto cfg = small_config();
  SUBCASE("too few frames") {
    cfg.frames = 1;
    CHECK_THROWS_AS((void)ingest::synth_scene(cfg, 1), Error);
  }
  SUBCASE("too few landmarks") {
    cfg.landmarks = 4;
    CHECK_THROWS_AS((void)ingest::synth_scene(cfg, 1), Error);
  }
  SUBCASE("coincident cameras") {
    cfg.arc_span = 0.0;
    cfg.arc_bump = 0.0;
    try {
      (void)ingest::synth_scene(cfg, 1);
      FAIL("expected DegenerateConfig");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateConfig);
    }
  }
}

TEST_CASE("bilinear depth lookup handles invalid neighbors and bounds") {
  ImageXd depth = ImageXd::Constant(4, 4, 2.0);
  depth(1, 1) = std::numeric_limits<double>::quiet_NaN();
  geom::Intrinsicsd K;
  K.fx = K.fy = 10.0;
  K.cx = K.cy = 1.5;
  K.width = K.height = 4;

  CHECK(ingest::depth_at(depth, K, Vec2(2.5, 2.5)).value() == doctest::Approx(2.0));
  CHECK_FALSE(ingest::depth_at(depth, K, Vec2(1.2, 1.2)).has_value());  // NaN corner
  CHECK_FALSE(ingest::depth_at(depth, K, Vec2(3.5, 2.0)).has_value());  // outside hull
  // interpolation is exact on a bilinear field
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) depth(r, c) = 1.0 + 0.25 * c + 0.5 * r;
  CHECK(ingest::depth_at(depth, K, Vec2(1.75, 2.25)).value() ==
        doctest::Approx(1.0 + 0.25 * 1.75 + 0.5 * 2.25).epsilon(1e-12));
}
