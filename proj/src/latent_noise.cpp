#include "mad/latent_noise.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "mad/error.hpp"
#include "mad/rng.hpp"
#include "mad/serialize.hpp"

namespace mad {

namespace {

constexpr std::uint64_t kSigmaStream = 0x5349474d41;  // "SIGMA"
constexpr std::uint64_t kNoiseStream = 0x4e4f495345;  // "NOISE"

std::string shape_string(int t, int h, int w) {
  return std::to_string(t) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

}  // namespace

LatentTensor::LatentTensor(LatentShape s, DownsampleFactors f)
    : shape(s), factors(f), values(s.size(), 0.0f) {}

std::size_t SkeletonMask::count() const {
  std::size_t n = 0;
  for (auto b : bits) n += b != 0;
  return n;
}

ValidationReport validate(const LatentTensor& latent) {
  ValidationReport r;
  const auto& s = latent.shape;
  if (s.t < 1 || s.h < 1 || s.w < 1 || s.c < 1) r.push_back({"positive dims", ""});
  const auto& f = latent.factors;
  if (f.t < 1 || f.h < 1 || f.w < 1) r.push_back({"positive factors", ""});
  if (s.t >= 1 && s.h >= 1 && s.w >= 1 && s.c >= 1 && latent.values.size() != s.size()) {
    r.push_back({"buffer length", std::to_string(latent.values.size()) + " != " +
                                      std::to_string(s.size())});
  }
  return r;
}

SkeletonMask skeleton_latent_mask(const ForegroundMask& mask, const DownsampleFactors& factors) {
  if (factors.t < 1 || factors.h < 1 || factors.w < 1) {
    throw Error(ErrorKind::kShape, "downsample factors must be >= 1");
  }
  if (mask.frames < 1 || mask.width < 1 || mask.height < 1) {
    throw Error(ErrorKind::kShape, "foreground mask is empty");
  }
  if (mask.width % factors.w != 0 || mask.height % factors.h != 0) {
    throw Error(ErrorKind::kShape, "pixel size " + std::to_string(mask.width) + "x" +
                                       std::to_string(mask.height) +
                                       " not divisible by spatial factors " +
                                       std::to_string(factors.w) + "x" + std::to_string(factors.h));
  }
  SkeletonMask out;
  out.t = (mask.frames + factors.t - 1) / factors.t;
  out.h = mask.height / factors.h;
  out.w = mask.width / factors.w;
  out.bits.assign(out.t * static_cast<std::size_t>(out.h) * out.w, 0);
  for (int f = 0; f < mask.frames; ++f) {
    const int lt = f / factors.t;
    for (int y = 0; y < mask.height; ++y) {
      for (int x = 0; x < mask.width; ++x) {
        if (!mask.at(f, x, y)) continue;
        out.bits[(static_cast<std::size_t>(lt) * out.h + y / factors.h) * out.w + x / factors.w] = 1;
      }
    }
  }
  return out;
}

std::vector<double> draw_sigmas(const NoiseConfig& cfg, int latent_frames) {
  if (!(cfg.sigma_max >= 0.0)) throw Error(ErrorKind::kConfig, "sigma_max must be >= 0");
  const CounterRng rng = CounterRng(cfg.seed).substream(kSigmaStream);
  const int n = cfg.sigma_scope == SigmaScope::kPerClip ? 1 : latent_frames;
  std::vector<double> sigmas(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) sigmas[i] = cfg.sigma_max * rng.uniform(static_cast<std::uint64_t>(i));
  return sigmas;
}

NoiseResult inject_targeted_noise(const LatentTensor& latent, const SkeletonMask& mask,
                                  const NoiseConfig& cfg) {
  if (auto r = validate(latent); !r.empty()) {
    throw Error(ErrorKind::kShape, "invalid latent: " + r.front().code + " " + r.front().detail);
  }
  const auto& s = latent.shape;
  if (mask.t != s.t || mask.h != s.h || mask.w != s.w || mask.bits.size() != s.cells()) {
    throw Error(ErrorKind::kShape, "mask " + shape_string(mask.t, mask.h, mask.w) +
                                       " does not match latent " + shape_string(s.t, s.h, s.w));
  }
  NoiseResult result{latent, draw_sigmas(cfg, s.t)};
  const CounterRng noise = CounterRng(cfg.seed).substream(kNoiseStream);
  for (int t = 0; t < s.t; ++t) {
    const double sigma = result.sigmas[cfg.sigma_scope == SigmaScope::kPerClip ? 0 : t];
    if (sigma == 0.0) continue;
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        if (!mask.at(t, y, x)) continue;
        for (int ch = 0; ch < s.c; ++ch) {
          const std::size_t i = latent.offset(t, y, x, ch);
          result.latent.values[i] =
              static_cast<float>(latent.values[i] + sigma * noise.normal(i));
        }
      }
    }
  }
  return result;
}

std::filesystem::path latent_sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

void write_latent(const std::filesystem::path& path, const LatentTensor& latent) {
  if (auto r = validate(latent); !r.empty()) {
    throw Error(ErrorKind::kShape, "invalid latent: " + r.front().code);
  }
  std::string bytes(latent.values.size() * 4, '\0');
  for (std::size_t i = 0; i < latent.values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(latent.values[i]);
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  const auto& s = latent.shape;
  const auto& f = latent.factors;
  const json sidecar = {{"shape", {s.t, s.h, s.w, s.c}},
                        {"factors", {f.t, f.h, f.w}},
                        {"dtype", "float32"},
                        {"endian", "little"}};
  write_file_atomic(path, bytes);
  write_file_atomic(latent_sidecar_path(path), sidecar.dump(2) + "\n");
}

LatentTensor read_latent(const std::filesystem::path& path) {
  json sidecar;
  try {
    sidecar = json::parse(read_file(latent_sidecar_path(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, "latent sidecar: " + std::string(e.what()));
  }
  LatentShape s;
  DownsampleFactors f;
  try {
    const auto& sh = sidecar.at("shape");
    s = {sh.at(0).get<int>(), sh.at(1).get<int>(), sh.at(2).get<int>(), sh.at(3).get<int>()};
    const auto& fa = sidecar.at("factors");
    f = {fa.at(0).get<int>(), fa.at(1).get<int>(), fa.at(2).get<int>()};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, "latent sidecar: " + std::string(e.what()));
  }
  if (s.t < 1 || s.h < 1 || s.w < 1 || s.c < 1) throw Error(ErrorKind::kShape, "latent dims must be >= 1");
  const std::string bytes = read_file(path);
  if (bytes.size() != s.size() * 4) {
    throw Error(ErrorKind::kShape, "latent payload has " + std::to_string(bytes.size()) +
                                       " bytes, sidecar implies " + std::to_string(s.size() * 4));
  }
  LatentTensor latent(s, f);
  for (std::size_t i = 0; i < latent.values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + b])) << (8 * b);
    }
    latent.values[i] = std::bit_cast<float>(bits);
  }
  return latent;
}

}  // namespace mad
