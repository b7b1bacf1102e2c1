#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mad/core_types.hpp"

namespace mad {

// Raw planar stream: 16-byte little-endian header (magic "MADV", width,
// height, frame count as uint32) followed by each frame as three full planes
// R, G, B.
inline constexpr std::array<char, 4> kRawMagic = {'M', 'A', 'D', 'V'};

std::string encode_raw_stream(const std::vector<FrameImage>& frames);
std::vector<FrameImage> decode_raw_stream(std::string_view bytes);

std::string encode_png(const FrameImage& image);
FrameImage decode_png(std::string_view bytes);

// Writes frame_000000.png, frame_000001.png, ... into `dir` (created if
// missing). Each file is written atomically. Returns the written paths.
std::vector<std::filesystem::path> write_png_sequence(const std::filesystem::path& dir,
                                                      const std::vector<FrameImage>& frames);

}  // namespace mad
