#pragma once

// Synthetic distortions with a severity knob, plus a small procedural source
// generator so pairs and severity ladders can be built without a dataset.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "priorvqa/error.hpp"
#include "priorvqa/keyvalue.hpp"
#include "priorvqa/rng.hpp"
#include "priorvqa/video_io.hpp"

namespace priorvqa {

enum class DistortionKind { awgn, gaussian_blur, block_quantize };

inline const char* to_string(DistortionKind k) {
  switch (k) {
    case DistortionKind::awgn: return "awgn";
    case DistortionKind::gaussian_blur: return "gaussian_blur";
    case DistortionKind::block_quantize: return "block_quantize";
  }
  return "?";
}

inline DistortionKind parse_distortion_kind(const std::string& s) {
  if (s == "awgn") return DistortionKind::awgn;
  if (s == "gaussian_blur" || s == "blur") return DistortionKind::gaussian_blur;
  if (s == "block_quantize") return DistortionKind::block_quantize;
  throw ConfigError("unknown distortion kind '" + s + "'");
}

// severity: noise sigma (intensity units) for awgn, kernel sigma (pixels) for
// gaussian_blur, quantisation step (intensity units) for block_quantize.
struct DistortionSpec {
  DistortionKind kind = DistortionKind::awgn;
  double severity = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(severity >= 0.0) || !std::isfinite(severity)) {
      throw ConfigError("distortion severity must be finite and >= 0");
    }
  }

  // "kind,severity,seed"
  std::string to_text() const {
    return std::string(to_string(kind)) + "," + format_double(severity) + "," +
           std::to_string(seed);
  }

  static DistortionSpec from_text(const std::string& text) {
    const auto parts = split(text, ',');
    if (parts.size() < 2 || parts.size() > 3) {
      throw ConfigError("distortion spec must be 'kind,severity[,seed]'");
    }
    KeyValues kv;
    kv.set("severity", parts[1]);
    if (parts.size() == 3) kv.set("seed", parts[2]);
    DistortionSpec spec{parse_distortion_kind(parts[0]), 0.0, 0};
    kv.read("severity", spec.severity);
    kv.read("seed", spec.seed);
    spec.validate();
    return spec;
  }

  friend bool operator==(const DistortionSpec&, const DistortionSpec&) = default;
};

namespace detail {

inline void add_gaussian_noise(Frame& f, double sigma, std::uint64_t seed) {
  SeededRng rng(seed);
  for (float& v : f.values()) {
    v = static_cast<float>(std::clamp(v + rng.gaussian(0.0, sigma), 0.0, 1.0));
  }
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const long radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[i + radius] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable blur with edge replication.
inline void gaussian_blur(Frame& f, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const long r = static_cast<long>(k.size() / 2);
  const Shape s = f.shape();
  const long h = static_cast<long>(s.h), w = static_cast<long>(s.w);
  std::vector<double> tmp(s.plane());
  for (std::size_t nc = 0; nc < s.n * s.c; ++nc) {
    float* p = f.data() + nc * s.plane();
    for (long y = 0; y < h; ++y) {
      for (long x = 0; x < w; ++x) {
        double acc = 0.0;
        for (long i = -r; i <= r; ++i) {
          acc += k[i + r] * p[y * w + std::clamp(x + i, 0L, w - 1)];
        }
        tmp[y * w + x] = acc;
      }
    }
    for (long y = 0; y < h; ++y) {
      for (long x = 0; x < w; ++x) {
        double acc = 0.0;
        for (long i = -r; i <= r; ++i) {
          acc += k[i + r] * tmp[std::clamp(y + i, 0L, h - 1) * w + x];
        }
        p[y * w + x] = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
}

// Within each 8x8 block, deviations from the block mean are rounded to
// multiples of step (blockiness surrogate).
inline void block_quantize(Frame& f, double step) {
  constexpr std::size_t kBlock = 8;
  const Shape s = f.shape();
  for (std::size_t nc = 0; nc < s.n * s.c; ++nc) {
    float* p = f.data() + nc * s.plane();
    for (std::size_t by = 0; by < s.h; by += kBlock) {
      for (std::size_t bx = 0; bx < s.w; bx += kBlock) {
        const std::size_t ey = std::min(by + kBlock, s.h);
        const std::size_t ex = std::min(bx + kBlock, s.w);
        double dc = 0.0;
        for (std::size_t y = by; y < ey; ++y)
          for (std::size_t x = bx; x < ex; ++x) dc += p[y * s.w + x];
        dc /= static_cast<double>((ey - by) * (ex - bx));
        for (std::size_t y = by; y < ey; ++y) {
          for (std::size_t x = bx; x < ex; ++x) {
            const double d = p[y * s.w + x] - dc;
            const double q = dc + std::round(d / step) * step;
            p[y * s.w + x] = static_cast<float>(std::clamp(q, 0.0, 1.0));
          }
        }
      }
    }
  }
}

}  // namespace detail

// Noise for frame t is drawn from substream seed ^ t.
inline FrameSequence apply_distortion(const FrameSequence& seq,
                                      const DistortionSpec& spec) {
  spec.validate();
  FrameSequence out = seq;
  if (spec.severity == 0.0) return out;
  for (std::size_t t = 0; t < out.frames.size(); ++t) {
    Frame& f = out.frames[t];
    switch (spec.kind) {
      case DistortionKind::awgn:
        detail::add_gaussian_noise(f, spec.severity, spec.seed ^ t);
        break;
      case DistortionKind::gaussian_blur:
        detail::gaussian_blur(f, spec.severity);
        break;
      case DistortionKind::block_quantize:
        detail::block_quantize(f, spec.severity);
        break;
    }
  }
  return out;
}

// Rung i uses seed base_seed + i.
inline std::vector<FrameSequence> severity_ladder(
    const FrameSequence& seq, DistortionKind kind,
    const std::vector<double>& severities, std::uint64_t base_seed = 0) {
  for (std::size_t i = 1; i < severities.size(); ++i) {
    if (!(severities[i] > severities[i - 1])) {
      throw ConfigError("severity ladder must be strictly increasing");
    }
  }
  std::vector<FrameSequence> ladder;
  for (std::size_t i = 0; i < severities.size(); ++i) {
    ladder.push_back(apply_distortion(seq, {kind, severities[i], base_seed + i}));
  }
  return ladder;
}

struct SyntheticVideoSpec {
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t frames = 8;
  std::uint64_t seed = 0;
  ChannelMode channel_mode = ChannelMode::luma;
};

// Smooth moving content: a drifting background gradient, a few translating
// soft-edged discs and a sinusoidal texture patch. Pixel-exact for a fixed spec.
inline FrameSequence synthesize_sequence(const SyntheticVideoSpec& spec) {
  if (spec.width == 0 || spec.height == 0 || spec.frames == 0) {
    throw ConfigError("synthetic video needs positive width, height and frames");
  }
  SeededRng rng(spec.seed);
  const double W = static_cast<double>(spec.width);
  const double H = static_cast<double>(spec.height);
  const std::size_t channels = channel_count(spec.channel_mode);

  struct Disc { double x, y, vx, vy, r, level[3]; };
  std::vector<Disc> discs(4);
  for (auto& d : discs) {
    d.x = rng.uniform(0.2, 0.8) * W;
    d.y = rng.uniform(0.2, 0.8) * H;
    d.vx = rng.uniform(-1.5, 1.5);
    d.vy = rng.uniform(-1.5, 1.5);
    d.r = rng.uniform(0.08, 0.2) * std::min(W, H);
    for (double& l : d.level) l = rng.uniform(0.05, 0.95);
  }
  const double gx = rng.uniform(-0.3, 0.3), gy = rng.uniform(-0.3, 0.3);
  const double base = rng.uniform(0.35, 0.65);
  const double freq = rng.uniform(0.15, 0.45), drift = rng.uniform(0.05, 0.2);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  FrameSequence seq{{}, spec.channel_mode};
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const double tt = static_cast<double>(t);
    Frame f(Shape{1, channels, spec.height, spec.width});
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t y = 0; y < spec.height; ++y) {
        for (std::size_t x = 0; x < spec.width; ++x) {
          const double u = x / W - 0.5, v = y / H - 0.5;
          double val = base + gx * u + gy * v + 0.02 * c;
          if (u > 0.0 && v > 0.0) {
            val += 0.12 * std::sin(freq * (x + drift * tt * 8.0) + phase) *
                   std::cos(freq * 0.7 * y + phase);
          }
          for (const auto& d : discs) {
            const double dx = x - (d.x + d.vx * tt), dy = y - (d.y + d.vy * tt);
            const double dist = std::sqrt(dx * dx + dy * dy);
            const double alpha = std::clamp(d.r - dist + 0.5, 0.0, 1.0);
            val = (1.0 - alpha) * val + alpha * d.level[c];
          }
          f.at(0, c, y, x) = static_cast<float>(std::clamp(val, 0.0, 1.0));
        }
      }
    }
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

}  // namespace priorvqa
