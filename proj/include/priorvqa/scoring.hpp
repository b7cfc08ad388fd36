#pragma once

// Blind quality score: the mean over frames of log(PSNR(clamp(G(D_t)), D_t)).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "priorvqa/error.hpp"
#include "priorvqa/keyvalue.hpp"
#include "priorvqa/network.hpp"
#include "priorvqa/video_io.hpp"

namespace priorvqa {

inline constexpr double kMseFloor = 1e-10;   // identical frames -> 100 dB
inline constexpr double kPsnrFloorDb = 1e-3; // keeps the log finite

template <typename T>
double mse(const Tensor4<T>& a, const Tensor4<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mse");
  if (a.empty()) throw DimensionError("mse of empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

template <typename T>
double psnr(const Tensor4<T>& a, const Tensor4<T>& b, double peak = 1.0) {
  if (!(peak > 0.0)) throw ConfigError("PSNR peak must be positive");
  const double m = std::max(mse(a, b), kMseFloor);
  return 10.0 * (2.0 * std::log10(peak) - std::log10(m));
}

enum class LogBase { natural, base2, base10 };

inline LogBase parse_log_base(const std::string& s) {
  if (s == "e" || s == "natural") return LogBase::natural;
  if (s == "2") return LogBase::base2;
  if (s == "10") return LogBase::base10;
  throw ConfigError("log_base must be e, 2 or 10, got '" + s + "'");
}

inline double apply_log(double v, LogBase base) {
  switch (base) {
    case LogBase::natural: return std::log(v);
    case LogBase::base2: return std::log2(v);
    case LogBase::base10: return std::log10(v);
  }
  return std::log(v);
}

struct QualityScore {
  double score = 0.0;
  std::vector<double> per_frame_psnr;  // dB, one per frame
  LogBase log_base = LogBase::natural;

  std::size_t frame_count() const { return per_frame_psnr.size(); }
  double min_psnr() const {
    return *std::min_element(per_frame_psnr.begin(), per_frame_psnr.end());
  }
  double max_psnr() const {
    return *std::max_element(per_frame_psnr.begin(), per_frame_psnr.end());
  }
};

// Mean of log(max(psnr, floor)), summed in frame order.
inline double pooled_log_psnr(const std::vector<double>& psnrs, LogBase base) {
  if (psnrs.empty()) throw ScoringError("no frames to pool");
  double sum = 0.0;
  for (double p : psnrs) sum += apply_log(std::max(p, kPsnrFloorDb), base);
  return sum / static_cast<double>(psnrs.size());
}

struct ScoringOptions {
  LogBase log_base = LogBase::natural;
  std::size_t threads = 1;
  // Frames are padded to a multiple of this before restoration and the
  // restoration is cropped back.
  std::size_t pad_factor = 1;
};

template <typename R>
concept FrameRestorer = requires(const R& r, const Frame& f) {
  { r(f) } -> std::convertible_to<Frame>;
};

template <FrameRestorer R>
QualityScore score_video(const R& restorer, const FrameSequence& distorted,
                         const ScoringOptions& options = {}) {
  distorted.validate();
  const std::size_t T = distorted.frame_count();
  std::vector<double> psnrs(T);

  auto score_frame = [&](std::size_t t) {
    const Frame& d = distorted.frames[t];
    Frame restored = options.pad_factor > 1
                         ? crop_frame(restorer(pad_frame(d, options.pad_factor)),
                                      d.shape().h, d.shape().w)
                         : Frame(restorer(d));
    if (!(restored.shape() == d.shape())) {
      throw ScoringError("restorer changed frame " + std::to_string(t + 1) +
                         " shape to " + restored.shape().to_string());
    }
    if (!restored.all_finite()) {
      throw ScoringError("non-finite restoration for frame " + std::to_string(t + 1));
    }
    for (float& v : restored.values()) v = std::clamp(v, 0.0f, 1.0f);
    psnrs[t] = psnr(restored, d);
  };

  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, T);
  if (workers == 1) {
    for (std::size_t t = 0; t < T; ++t) score_frame(t);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t = w; t < T; t += workers) score_frame(t);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return QualityScore{pooled_log_psnr(psnrs, options.log_base), std::move(psnrs),
                      options.log_base};
}

inline QualityScore score_video(const NetworkWeights<float>& g,
                                const FrameSequence& distorted,
                                ScoringOptions options = {}) {
  if (g.role != NetworkRole::restorer) {
    throw ContractError("score_video needs restorer weights");
  }
  options.pad_factor = g.config.downsample_factor();
  return score_video([&g](const Frame& f) { return restore_frame(g, f); },
                     distorted, options);
}

inline std::string score_report_header() {
  return "video_id,score,T,min_psnr,max_psnr";
}

inline std::string score_report_line(const std::string& video_id,
                                     const QualityScore& q) {
  return video_id + "," + format_double(q.score) + "," +
         std::to_string(q.frame_count()) + "," + format_double(q.min_psnr()) +
         "," + format_double(q.max_psnr());
}

}  // namespace priorvqa
