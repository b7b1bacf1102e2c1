#pragma once

#include <algorithm>
#include <string>

#include "mad/core_types.hpp"

namespace mad::test {

inline bool has_violation(const ValidationReport& r, const std::string& code) {
  return std::any_of(r.begin(), r.end(), [&](const Violation& v) { return v.code == code; });
}

inline std::size_t non_black(const FrameImage& img) {
  std::size_t n = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) n += !img.at(x, y).is_black();
  }
  return n;
}

inline std::size_t count_color(const FrameImage& img, Rgb c) {
  std::size_t n = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) n += img.at(x, y) == c;
  }
  return n;
}

inline Keypoint kp(double x, double y, double conf = 1.0, bool visible = true) {
  return Keypoint{"", x, y, conf, visible};
}

}  // namespace mad::test
