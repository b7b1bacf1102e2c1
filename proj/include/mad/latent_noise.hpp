#pragma once

// Targeted noise injection on abstract latent tensors: Gaussian noise with a
// randomly drawn standard deviation is added only to latent cells whose
// receptive block covers rendered skeleton pixels; background cells are left
// bit-identical.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mad/pose_render.hpp"

namespace mad {

struct LatentShape {
  int t = 1;
  int h = 1;
  int w = 1;
  int c = 1;

  std::size_t cells() const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::size_t size() const { return cells() * static_cast<std::size_t>(c); }

  friend bool operator==(const LatentShape&, const LatentShape&) = default;
};

// Pixel block covered by one latent cell.
struct DownsampleFactors {
  int t = 1;
  int h = 8;
  int w = 8;

  friend bool operator==(const DownsampleFactors&, const DownsampleFactors&) = default;
};

// Values laid out as (t, h, w, c), channels fastest.
struct LatentTensor {
  LatentShape shape;
  DownsampleFactors factors;
  std::vector<float> values;

  LatentTensor() = default;
  LatentTensor(LatentShape s, DownsampleFactors f);

  float& at(int t, int y, int x, int ch) { return values[offset(t, y, x, ch)]; }
  float at(int t, int y, int x, int ch) const { return values[offset(t, y, x, ch)]; }
  std::size_t offset(int t, int y, int x, int ch) const {
    return ((static_cast<std::size_t>(t) * shape.h + y) * shape.w + x) * shape.c + ch;
  }

  friend bool operator==(const LatentTensor&, const LatentTensor&) = default;
};

struct SkeletonMask {
  int t = 0;
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> bits;  // (t, h, w)

  bool at(int ti, int y, int x) const {
    return bits[(static_cast<std::size_t>(ti) * h + y) * w + x] != 0;
  }
  std::size_t count() const;

  friend bool operator==(const SkeletonMask&, const SkeletonMask&) = default;
};

enum class SigmaScope { kPerClip, kPerFrame };

struct NoiseConfig {
  double sigma_max = 0.3;
  std::uint64_t seed = 0;
  SigmaScope sigma_scope = SigmaScope::kPerClip;
};

struct NoiseResult {
  LatentTensor latent;
  // One entry for kPerClip, one per latent frame for kPerFrame. Standard
  // deviations, not variances.
  std::vector<double> sigmas;
};

ValidationReport validate(const LatentTensor& latent);

// A latent cell is set iff any pixel of its f_t x f_h x f_w block is
// foreground. A trailing partial temporal block is padded by repeating the
// last frame, so the latent length is ceil(frames / f_t).
SkeletonMask skeleton_latent_mask(const ForegroundMask& mask, const DownsampleFactors& factors);

// sigma ~ U(0, sigma_max), drawn once per clip or once per latent frame from
// a dedicated substream of the seed.
std::vector<double> draw_sigmas(const NoiseConfig& cfg, int latent_frames);

// Adds N(0, sigma^2) to every channel of every masked cell. The Gaussian for
// scalar at flat offset i is draw i of the noise substream, so a cell's
// perturbation does not depend on the rest of the mask.
NoiseResult inject_targeted_noise(const LatentTensor& latent, const SkeletonMask& mask,
                                  const NoiseConfig& cfg);

// Little-endian float32 payload at `path` plus a JSON sidecar at
// `path` + ".json" holding {"shape": [T,H,W,C], "factors": [ft,fh,fw]}.
void write_latent(const std::filesystem::path& path, const LatentTensor& latent);
LatentTensor read_latent(const std::filesystem::path& path);

std::filesystem::path latent_sidecar_path(const std::filesystem::path& path);

}  // namespace mad
