#pragma once

#include <filesystem>

#include "vidcap/corpus.hpp"

namespace vidcap {

// Frame feature files: 16-byte header ("CFWF", u32 rows, u32 cols,
// u32 reserved) followed by rows*cols little-endian float32, row-major.
FrameFeatureSet read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const FrameFeatureSet& frames);

}  // namespace vidcap
