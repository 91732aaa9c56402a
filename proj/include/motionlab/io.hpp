#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "motionlab/error.hpp"

namespace motionlab {

/// Writes a file through a sibling temp file and a rename, so readers never
/// see a partial file.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot create " + tmp.string());
    out << text;
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace motionlab
