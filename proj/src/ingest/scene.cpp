#include "affordkit/ingest/scene.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "affordkit/core/io.hpp"

namespace affordkit::ingest {

namespace fs = std::filesystem;
using nlohmann::json;

void compute_static_masks(SceneBundle& bundle) {
  bundle.static_masks.clear();
  bundle.static_masks.reserve(bundle.frames.size());
  for (const auto& frame : bundle.frames) {
    ImageXb m = ImageXb::Zero(frame.depth.rows(), frame.depth.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        m(r, c) = (frame.hand_mask(r, c) || frame.object_mask(r, c)) ? 0 : 1;
    bundle.static_masks.push_back(std::move(m));
  }
}

std::optional<double> depth_at(const ImageXd& depth, const geom::Intrinsicsd& K,
                               const Vec2& pixel) {
  if (!K.interpolable(pixel.x(), pixel.y())) return std::nullopt;
  const int c0 = std::min(static_cast<int>(std::floor(pixel.x())), K.width - 2);
  const int r0 = std::min(static_cast<int>(std::floor(pixel.y())), K.height - 2);
  const double fu = pixel.x() - c0;
  const double fv = pixel.y() - r0;
  const double d00 = depth(r0, c0), d01 = depth(r0, c0 + 1);
  const double d10 = depth(r0 + 1, c0), d11 = depth(r0 + 1, c0 + 1);
  if (!std::isfinite(d00) || !std::isfinite(d01) || !std::isfinite(d10) || !std::isfinite(d11))
    return std::nullopt;
  const double d = (1 - fv) * ((1 - fu) * d00 + fu * d01) + fv * ((1 - fu) * d10 + fu * d11);
  if (!(d > 0.0)) return std::nullopt;
  return d;
}

namespace {

ImageXd read_depth_file(const fs::path& path, int width, int height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  const auto raw = read_f32(in, static_cast<std::size_t>(width) * height);
  char extra;
  if (in.read(&extra, 1))
    throw Error(ErrorCode::DimensionMismatch, "depth file larger than width*height: " + path.string());
  ImageXd depth(height, width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) depth(r, c) = raw[static_cast<std::size_t>(r) * width + c];
  return depth;
}

ImageXb read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw Error(ErrorCode::ManifestParse, "not a binary PGM: " + path.string());
  int width = 0, height = 0, maxval = 0;
  in >> width >> height >> maxval;
  if (!in || width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
    throw Error(ErrorCode::ManifestParse, "bad PGM header: " + path.string());
  in.get();  // single whitespace after header
  ImageXb mask(height, width);
  in.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(width) * height);
  if (in.gcount() != static_cast<std::streamsize>(width) * height)
    throw Error(ErrorCode::IoError, "short PGM payload: " + path.string());
  return mask;
}

void write_pgm(const fs::path& path, const ImageXb& mask) {
  atomic_write(path, [&](std::ofstream& out) {
    out << "P5\n" << mask.cols() << " " << mask.rows() << "\n255\n";
    out.write(reinterpret_cast<const char*>(mask.data()),
              static_cast<std::streamsize>(mask.size()));
  });
}

geom::Posed pose_from_json(const json& j) {
  const auto& q = j.at("q");
  const auto& t = j.at("t");
  if (q.size() != 4 || t.size() != 3)
    throw Error(ErrorCode::ManifestParse, "pose needs q[4] and t[3]");
  // storage order (x, y, z, w)
  Eigen::Quaterniond quat(q[3].get<double>(), q[0].get<double>(), q[1].get<double>(),
                          q[2].get<double>());
  return geom::Posed(quat, Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>()));
}

json pose_to_json(const geom::Posed& pose) {
  const auto& q = pose.rotation();
  const auto& t = pose.translation();
  return json{{"q", {q.x(), q.y(), q.z(), q.w()}}, {"t", {t.x(), t.y(), t.z()}}};
}

}  // namespace

SceneBundle load_scene(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::MissingFile, manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestParse, e.what());
  }

  const fs::path base = manifest_path.has_parent_path() ? manifest_path.parent_path() : ".";
  SceneBundle bundle;
  try {
    const auto& ji = manifest.at("intrinsics");
    geom::Intrinsicsd K;
    K.fx = ji.at("fx").get<double>();
    K.fy = ji.at("fy").get<double>();
    K.cx = ji.at("cx").get<double>();
    K.cy = ji.at("cy").get<double>();
    K.width = ji.at("width").get<int>();
    K.height = ji.at("height").get<int>();
    K.validate();

    for (const auto& jf : manifest.at("frames")) {
      FrameObservation frame;
      frame.index = jf.at("index").get<int>();
      frame.intrinsics = K;
      frame.pose_init = pose_from_json(jf.at("pose_wc"));
      frame.depth = read_depth_file(base / jf.at("depth_path").get<std::string>(), K.width, K.height);
      frame.hand_mask = read_pgm(base / jf.at("hand_mask_path").get<std::string>());
      frame.object_mask = read_pgm(base / jf.at("object_mask_path").get<std::string>());
      if (frame.hand_mask.rows() != K.height || frame.hand_mask.cols() != K.width ||
          frame.object_mask.rows() != K.height || frame.object_mask.cols() != K.width)
        throw Error(ErrorCode::DimensionMismatch,
                    "mask size does not match intrinsics for frame " + std::to_string(frame.index));
      for (Eigen::Index i = 0; i < frame.depth.size(); ++i) {
        const double d = frame.depth.data()[i];
        if (!std::isnan(d) && d < 0.0)
          throw Error(ErrorCode::ManifestParse, "negative depth entry");
      }
      bundle.frames.push_back(std::move(frame));
    }

    std::ifstream lm_in(base / manifest.at("landmarks_path").get<std::string>());
    if (!lm_in)
      throw Error(ErrorCode::MissingFile,
                  (base / manifest.at("landmarks_path").get<std::string>()).string());
    json jlm;
    lm_in >> jlm;
    for (const auto& jl : jlm) {
      Landmark lm;
      lm.id = jl.at("id").get<int>();
      const auto& xyz = jl.at("xyz");
      lm.position = Vec3(xyz[0].get<double>(), xyz[1].get<double>(), xyz[2].get<double>());
      for (const auto& jo : jl.at("obs")) {
        LandmarkObservation obs;
        obs.frame = jo[0].get<int>();
        obs.pixel = Vec2(jo[1].get<double>(), jo[2].get<double>());
        if (obs.frame < 0 || obs.frame >= bundle.frame_count())
          throw Error(ErrorCode::BadLandmarkObservation,
                      "landmark " + std::to_string(lm.id) + " observed in unknown frame");
        if (!K.in_image(obs.pixel.x(), obs.pixel.y()))
          throw Error(ErrorCode::BadLandmarkObservation,
                      "landmark " + std::to_string(lm.id) + " pixel out of bounds");
        lm.observations.push_back(obs);
      }
      if (lm.observations.size() < 2)
        throw Error(ErrorCode::BadLandmarkObservation,
                    "landmark " + std::to_string(lm.id) + " needs >= 2 observations");
      bundle.landmarks.push_back(std::move(lm));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestParse, e.what());
  }

  compute_static_masks(bundle);
  return bundle;
}

void write_scene(const SceneBundle& bundle, const fs::path& directory) {
  fs::create_directories(directory);
  json manifest;
  if (bundle.frames.empty()) throw Error(ErrorCode::InvalidArgument, "bundle has no frames");
  const auto& K = bundle.frames.front().intrinsics;
  manifest["intrinsics"] = {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx},
                            {"cy", K.cy}, {"width", K.width}, {"height", K.height}};

  manifest["frames"] = json::array();
  for (const auto& frame : bundle.frames) {
    const std::string stem = "frame_" + std::to_string(frame.index);
    const std::string depth_name = stem + "_depth.f32";
    const std::string hand_name = stem + "_hand.pgm";
    const std::string object_name = stem + "_object.pgm";

    atomic_write(directory / depth_name, [&](std::ofstream& out) {
      std::vector<float> raw(frame.depth.size());
      for (Eigen::Index i = 0; i < frame.depth.size(); ++i)
        raw[static_cast<std::size_t>(i)] = static_cast<float>(frame.depth.data()[i]);
      write_f32(out, raw.data(), raw.size());
    });
    write_pgm(directory / hand_name, frame.hand_mask);
    write_pgm(directory / object_name, frame.object_mask);

    manifest["frames"].push_back({{"index", frame.index},
                                  {"depth_path", depth_name},
                                  {"hand_mask_path", hand_name},
                                  {"object_mask_path", object_name},
                                  {"pose_wc", pose_to_json(frame.pose_init)}});
  }

  json jlm = json::array();
  for (const auto& lm : bundle.landmarks) {
    json obs = json::array();
    for (const auto& o : lm.observations) obs.push_back({o.frame, o.pixel.x(), o.pixel.y()});
    jlm.push_back({{"id", lm.id},
                   {"xyz", {lm.position.x(), lm.position.y(), lm.position.z()}},
                   {"obs", obs}});
  }
  atomic_write(directory / "landmarks.json", [&](std::ofstream& out) { out << jlm.dump(1) << "\n"; });
  manifest["landmarks_path"] = "landmarks.json";
  atomic_write(directory / "manifest.json",
               [&](std::ofstream& out) { out << manifest.dump(1) << "\n"; });
}

}  // namespace affordkit::ingest
