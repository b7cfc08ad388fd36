#pragma once

// Frame sequences on disk: PNG directories (frame_%06d.png), YUV4MPEG2 and
// headerless planar 4:2:0. Samples are 8-bit; ingest maps v -> v / 255 and
// egress rounds to nearest.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "priorvqa/error.hpp"
#include "priorvqa/tensor.hpp"

namespace priorvqa {

using Frame = Tensor4<float>;

enum class ChannelMode { luma, rgb };

inline std::size_t channel_count(ChannelMode mode) {
  return mode == ChannelMode::luma ? 1 : 3;
}

inline ChannelMode parse_channel_mode(const std::string& s) {
  if (s == "luma") return ChannelMode::luma;
  if (s == "rgb") return ChannelMode::rgb;
  throw ConfigError("channel_mode must be 'luma' or 'rgb', got '" + s + "'");
}

struct FrameSequence {
  std::vector<Frame> frames;
  ChannelMode channel_mode = ChannelMode::luma;

  std::size_t frame_count() const { return frames.size(); }
  const Shape& frame_shape() const { return frames.front().shape(); }
  std::size_t height() const { return frame_shape().h; }
  std::size_t width() const { return frame_shape().w; }

  void validate() const {
    if (frames.empty()) throw FormatError("frame sequence is empty");
    const Shape s = frames.front().shape();
    if (s.n != 1 || s.c != channel_count(channel_mode)) {
      throw DimensionError("frame shape " + s.to_string() +
                           " inconsistent with channel mode");
    }
    for (std::size_t t = 0; t < frames.size(); ++t) {
      if (!(frames[t].shape() == s)) {
        throw DimensionError("frame " + std::to_string(t) + " has shape " +
                             frames[t].shape().to_string() + ", expected " +
                             s.to_string());
      }
      for (float v : frames[t].values()) {
        if (!(v >= 0.0f && v <= 1.0f)) {
          throw FormatError("frame " + std::to_string(t) +
                            " holds an intensity outside [0, 1]");
        }
      }
    }
  }

  friend bool operator==(const FrameSequence&, const FrameSequence&) = default;
};

enum class VideoFormatKind { png_dir, y4m, raw_yuv };

struct VideoFormat {
  VideoFormatKind kind = VideoFormatKind::png_dir;
  std::size_t width = 0;   // raw_yuv only
  std::size_t height = 0;  // raw_yuv only

  static VideoFormat png_dir() { return {VideoFormatKind::png_dir, 0, 0}; }
  static VideoFormat y4m() { return {VideoFormatKind::y4m, 0, 0}; }
  static VideoFormat raw_yuv(std::size_t w, std::size_t h) {
    return {VideoFormatKind::raw_yuv, w, h};
  }
};

// ".y4m" -> y4m, ".yuv" -> raw (dims from the caller), anything else -> PNG dir.
inline VideoFormat infer_format(const std::string& path, std::size_t raw_width,
                                std::size_t raw_height) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".y4m") return VideoFormat::y4m();
  if (ext == ".yuv") return VideoFormat::raw_yuv(raw_width, raw_height);
  return VideoFormat::png_dir();
}

inline std::uint8_t quantize_sample(float v) {
  const long q = std::lround(static_cast<double>(v) * 255.0);
  return static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
}

inline float dequantize_sample(std::uint8_t v) {
  return static_cast<float>(v) / 255.0f;
}

inline std::size_t planar420_frame_bytes(std::size_t w, std::size_t h) {
  return w * h + 2 * ((w + 1) / 2) * ((h + 1) / 2);
}

namespace detail {

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

inline Frame luma_plane_to_frame(const unsigned char* y, std::size_t w,
                                 std::size_t h) {
  Frame f(Shape{1, 1, h, w});
  for (std::size_t i = 0; i < w * h; ++i) f[i] = dequantize_sample(y[i]);
  return f;
}

inline void append_planar420(std::string& out, const Frame& f) {
  const Shape s = f.shape();
  for (std::size_t i = 0; i < s.plane(); ++i) {
    out.push_back(static_cast<char>(quantize_sample(f[i])));
  }
  const std::size_t chroma = 2 * ((s.w + 1) / 2) * ((s.h + 1) / 2);
  out.append(chroma, static_cast<char>(128));
}

inline Frame read_png(const std::string& path, ChannelMode mode) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError(path + ": " + image.message);
  }
  image.format = mode == ChannelMode::luma ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(path + ": " + image.message);
  }
  const std::size_t h = image.height, w = image.width;
  const std::size_t c = channel_count(mode);
  Frame f(Shape{1, c, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        f.at(0, ch, y, x) = dequantize_sample(buf[(y * w + x) * c + ch]);
      }
    }
  }
  return f;
}

inline void write_png(const std::string& path, const Frame& f) {
  const Shape s = f.shape();
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(s.w);
  image.height = static_cast<png_uint_32>(s.h);
  image.format = s.c == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(s.size());
  for (std::size_t y = 0; y < s.h; ++y) {
    for (std::size_t x = 0; x < s.w; ++x) {
      for (std::size_t ch = 0; ch < s.c; ++ch) {
        buf[(y * s.w + x) * s.c + ch] = quantize_sample(f.at(0, ch, y, x));
      }
    }
  }
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError(path + ": " + image.message);
  }
}

inline FrameSequence read_png_dir(const std::string& path, ChannelMode mode) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) throw IoError(path + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.is_regular_file() && e.path().extension() == ".png") {
      files.push_back(e.path());
    }
  }
  if (files.empty()) throw FormatError(path + ": no .png frames found");
  std::sort(files.begin(), files.end());
  FrameSequence seq{{}, mode};
  for (const auto& file : files) {
    Frame f = read_png(file.string(), mode);
    if (!seq.frames.empty() && !(f.shape() == seq.frames.front().shape())) {
      throw FormatError(path + ": frame " + file.filename().string() + " is " +
                        std::to_string(f.shape().w) + "x" +
                        std::to_string(f.shape().h) + ", expected " +
                        std::to_string(seq.width()) + "x" +
                        std::to_string(seq.height()));
    }
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

inline FrameSequence read_raw_yuv(const std::string& path, std::size_t w,
                                  std::size_t h) {
  if (w == 0 || h == 0) {
    throw ConfigError("raw YUV input needs width and height");
  }
  const std::string bytes = read_file_bytes(path);
  const std::size_t frame_bytes = planar420_frame_bytes(w, h);
  if (bytes.empty() || bytes.size() % frame_bytes != 0) {
    const std::size_t frames = bytes.size() / frame_bytes + 1;
    throw SizeError(path + ": " + std::to_string(bytes.size()) +
                    " bytes is not a whole number of " + std::to_string(w) +
                    "x" + std::to_string(h) + " 4:2:0 frames (expected " +
                    std::to_string(frames * frame_bytes) + " bytes for " +
                    std::to_string(frames) + " frames)");
  }
  FrameSequence seq{{}, ChannelMode::luma};
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t off = 0; off < bytes.size(); off += frame_bytes) {
    seq.frames.push_back(luma_plane_to_frame(data + off, w, h));
  }
  return seq;
}

inline FrameSequence read_y4m(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  const auto eol = bytes.find('\n');
  if (bytes.rfind("YUV4MPEG2", 0) != 0 || eol == std::string::npos) {
    throw FormatError(path + ": missing YUV4MPEG2 header");
  }
  std::istringstream header(bytes.substr(0, eol));
  std::string token;
  std::size_t w = 0, h = 0;
  std::string colorspace = "420jpeg";
  header >> token;
  while (header >> token) {
    if (token[0] == 'W') w = std::stoul(token.substr(1));
    if (token[0] == 'H') h = std::stoul(token.substr(1));
    if (token[0] == 'C') colorspace = token.substr(1);
  }
  if (w == 0 || h == 0) throw FormatError(path + ": header lacks W/H");
  std::size_t chroma_bytes = 0;
  if (colorspace.rfind("420", 0) == 0 && colorspace.find("p1") == std::string::npos) {
    chroma_bytes = 2 * ((w + 1) / 2) * ((h + 1) / 2);
  } else if (colorspace == "444") {
    chroma_bytes = 2 * w * h;
  } else if (colorspace == "422") {
    chroma_bytes = 2 * ((w + 1) / 2) * h;
  } else if (colorspace == "mono") {
    chroma_bytes = 0;
  } else {
    throw FormatError(path + ": unsupported colorspace C" + colorspace);
  }

  FrameSequence seq{{}, ChannelMode::luma};
  std::size_t pos = eol + 1;
  while (pos < bytes.size()) {
    const auto fe = bytes.find('\n', pos);
    if (bytes.compare(pos, 5, "FRAME") != 0 || fe == std::string::npos) {
      throw FormatError(path + ": bad FRAME marker at byte " + std::to_string(pos));
    }
    pos = fe + 1;
    if (pos + w * h + chroma_bytes > bytes.size()) {
      throw SizeError(path + ": frame " + std::to_string(seq.frames.size()) +
                      " truncated (expected " + std::to_string(w * h + chroma_bytes) +
                      " bytes, have " + std::to_string(bytes.size() - pos) + ")");
    }
    seq.frames.push_back(luma_plane_to_frame(
        reinterpret_cast<const unsigned char*>(bytes.data()) + pos, w, h));
    pos += w * h + chroma_bytes;
  }
  if (seq.frames.empty()) throw FormatError(path + ": no frames");
  return seq;
}

}  // namespace detail

inline FrameSequence read_sequence(const std::string& path, VideoFormat format,
                                   ChannelMode mode = ChannelMode::luma) {
  if (!std::filesystem::exists(path)) throw IoError(path + " does not exist");
  if (format.kind != VideoFormatKind::png_dir && mode != ChannelMode::luma) {
    throw ConfigError("YUV inputs only support luma channel mode");
  }
  switch (format.kind) {
    case VideoFormatKind::png_dir:
      return detail::read_png_dir(path, mode);
    case VideoFormatKind::y4m:
      return detail::read_y4m(path);
    case VideoFormatKind::raw_yuv:
      return detail::read_raw_yuv(path, format.width, format.height);
  }
  throw ConfigError("unknown video format");
}

// PNG output replaces any existing frame_*.png files in the directory.
inline void write_sequence(const FrameSequence& seq, const std::string& path,
                           VideoFormat format) {
  seq.validate();
  namespace fs = std::filesystem;
  if (format.kind == VideoFormatKind::png_dir) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (!fs::is_directory(path)) throw IoError("cannot create directory " + path);
    for (const auto& e : fs::directory_iterator(path)) {
      const std::string name = e.path().filename().string();
      if (name.rfind("frame_", 0) == 0 && e.path().extension() == ".png") {
        fs::remove(e.path());
      }
    }
    for (std::size_t t = 0; t < seq.frame_count(); ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%06zu.png", t + 1);
      detail::write_png((fs::path(path) / name).string(), seq.frames[t]);
    }
    return;
  }
  if (seq.channel_mode != ChannelMode::luma) {
    throw ConfigError("YUV outputs only support luma channel mode");
  }
  std::string bytes;
  if (format.kind == VideoFormatKind::y4m) {
    bytes = "YUV4MPEG2 W" + std::to_string(seq.width()) + " H" +
            std::to_string(seq.height()) + " F25:1 Ip A1:1 C420jpeg\n";
  }
  for (const auto& f : seq.frames) {
    if (format.kind == VideoFormatKind::y4m) bytes += "FRAME\n";
    detail::append_planar420(bytes, f);
  }
  detail::write_file_bytes(path, bytes);
}

struct PaddedSequence {
  FrameSequence sequence;
  std::size_t original_height = 0;
  std::size_t original_width = 0;
};

inline Frame pad_frame(const Frame& f, std::size_t factor) {
  const Shape s = f.shape();
  const std::size_t ph = (s.h + factor - 1) / factor * factor;
  const std::size_t pw = (s.w + factor - 1) / factor * factor;
  if (ph == s.h && pw == s.w) return f;
  Frame out(Shape{s.n, s.c, ph, pw});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t y = 0; y < ph; ++y) {
        for (std::size_t x = 0; x < pw; ++x) {
          out.at(n, c, y, x) = f.at(n, c, std::min(y, s.h - 1), std::min(x, s.w - 1));
        }
      }
    }
  }
  return out;
}

inline Frame crop_frame(const Frame& f, std::size_t height, std::size_t width) {
  const Shape s = f.shape();
  if (height > s.h || width > s.w) {
    throw DimensionError("crop to " + std::to_string(width) + "x" +
                         std::to_string(height) + " exceeds frame " + s.to_string());
  }
  if (height == s.h && width == s.w) return f;
  Frame out(Shape{s.n, s.c, height, width});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t y = 0; y < height; ++y) {
        std::copy_n(&f.at(n, c, y, 0), width, &out.at(n, c, y, 0));
      }
    }
  }
  return out;
}

// Rounds spatial dims up to multiples of factor by edge replication.
inline PaddedSequence pad_to_divisible(const FrameSequence& seq,
                                       std::size_t factor) {
  if (factor == 0) throw ConfigError("pad factor must be >= 1");
  PaddedSequence out{{{}, seq.channel_mode}, seq.height(), seq.width()};
  for (const auto& f : seq.frames) out.sequence.frames.push_back(pad_frame(f, factor));
  return out;
}

inline FrameSequence crop_sequence(const FrameSequence& seq, std::size_t height,
                                   std::size_t width) {
  FrameSequence out{{}, seq.channel_mode};
  for (const auto& f : seq.frames) out.frames.push_back(crop_frame(f, height, width));
  return out;
}

}  // namespace priorvqa
