#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "affordkit/core/error.hpp"

namespace affordkit {

/// Writes via a temp file in the same directory, then renames into place, so
/// readers never observe a partial file.
inline void atomic_write(const std::filesystem::path& path,
                         const std::function<void(std::ofstream&)>& writer) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string());
    writer(out);
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename failed for " + path.string());
}

inline void write_f32(std::ofstream& out, const float* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 4));
}

inline std::vector<float> read_f32(std::ifstream& in, std::size_t count) {
  std::vector<float> data(count);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * 4));
  if (static_cast<std::size_t>(in.gcount()) != count * 4)
    throw Error(ErrorCode::IoError, "short read of float32 block");
  return data;
}

}  // namespace affordkit
