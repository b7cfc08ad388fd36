#pragma once

// Dataset-level protocol: train once on the manifest's train pair, score every
// test video, correlate predictions with MOS.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "priorvqa/correlation.hpp"
#include "priorvqa/error.hpp"
#include "priorvqa/keyvalue.hpp"
#include "priorvqa/scoring.hpp"
#include "priorvqa/trainer.hpp"
#include "priorvqa/video_io.hpp"

namespace priorvqa {

enum class EntryRole { train, test };

struct ManifestEntry {
  std::string video_id;
  std::string path;
  double mos = 0.0;
  EntryRole role = EntryRole::test;
  std::string pair_path;  // train row: distorted counterpart of `path`
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  const ManifestEntry& train_entry() const {
    const ManifestEntry* found = nullptr;
    for (const auto& e : entries) {
      if (e.role != EntryRole::train) continue;
      if (found) throw ManifestError("manifest has more than one train row");
      found = &e;
    }
    if (!found) throw ManifestError("manifest has no train row");
    if (found->pair_path.empty()) {
      throw ManifestError("train row '" + found->video_id + "' lacks pair_path");
    }
    return *found;
  }

  std::vector<ManifestEntry> test_entries() const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries) {
      if (e.role == EntryRole::test) out.push_back(e);
    }
    return out;
  }

  void validate() const {
    train_entry();
    const auto tests = test_entries();
    if (tests.size() < 2) {
      throw ManifestError("need at least 2 test rows, found " +
                          std::to_string(tests.size()));
    }
    for (const auto& e : tests) {
      if (!std::isfinite(e.mos)) {
        throw ManifestError("test row '" + e.video_id + "' has non-finite MOS");
      }
    }
  }
};

// Relative paths are resolved against base_dir.
inline Manifest parse_manifest(const std::string& text, const std::string& base_dir,
                               const std::string& origin = "<manifest>") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ManifestError(origin + ": empty manifest");
  const auto header = split(line, ',');
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto c_id = column("video_id"), c_path = column("path"),
             c_mos = column("mos"), c_role = column("role");
  const auto c_pair = column("pair_path");
  if (!c_id || !c_path || !c_mos || !c_role) {
    throw ManifestError(origin + ": header must be video_id,path,mos,role[,pair_path]");
  }
  auto resolve = [&](const std::string& p) {
    if (p.empty()) return p;
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? p : (std::filesystem::path(base_dir) / fp).string();
  };

  Manifest m;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    auto cell = [&](std::optional<std::size_t> c) -> std::string {
      return c && *c < cells.size() ? cells[*c] : std::string();
    };
    const std::string where = origin + ":" + std::to_string(lineno);
    ManifestEntry e;
    e.video_id = cell(c_id);
    e.path = resolve(cell(c_path));
    e.pair_path = resolve(cell(c_pair));
    const std::string role = cell(c_role);
    if (role == "train") {
      e.role = EntryRole::train;
    } else if (role == "test") {
      e.role = EntryRole::test;
    } else {
      throw ManifestError(where + ": role must be train or test, got '" + role + "'");
    }
    if (e.video_id.empty() || e.path.empty()) {
      throw ManifestError(where + ": video_id and path are required");
    }
    const std::string mos = cell(c_mos);
    if (!mos.empty()) {
      KeyValues kv;
      kv.set("mos", mos);
      try {
        kv.read("mos", e.mos);
      } catch (const ConfigError&) {
        throw ManifestError(where + ": mos '" + mos + "' is not a number");
      }
    } else if (e.role == EntryRole::test) {
      throw ManifestError(where + ": test row needs a mos value");
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(),
                        std::filesystem::path(path).parent_path().string(), path);
}

struct VideoPrediction {
  std::string video_id;
  double predicted;
  double mos;
};

struct CorrelationReport {
  double lcc = 0.0;
  double srocc = 0.0;
  std::size_t n = 0;
  std::vector<VideoPrediction> table;

  std::string summary_header() const { return "n,lcc,srocc,abs_lcc,abs_srocc"; }
  std::string summary_line() const {
    return std::to_string(n) + "," + format_double(lcc) + "," +
           format_double(srocc) + "," + format_double(std::abs(lcc)) + "," +
           format_double(std::abs(srocc));
  }
};

inline void write_report_csv(const std::string& path, const CorrelationReport& r) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "video_id,predicted,mos\n";
  for (const auto& row : r.table) {
    out << row.video_id << ',' << format_double(row.predicted) << ','
        << format_double(row.mos) << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

inline CorrelationReport correlate(std::vector<VideoPrediction> table) {
  std::vector<double> pred, mos;
  for (const auto& row : table) {
    pred.push_back(row.predicted);
    mos.push_back(row.mos);
  }
  CorrelationReport r;
  r.lcc = pearson_lcc(pred, mos);
  r.srocc = spearman_srocc(pred, mos);
  r.n = table.size();
  r.table = std::move(table);
  return r;
}

struct EvalOptions {
  std::size_t raw_width = 352;
  std::size_t raw_height = 288;
  ChannelMode channel_mode = ChannelMode::luma;
  ScoringOptions scoring{};
  // Test hook: when set, training is skipped and this supplies each
  // prediction.
  std::function<double(const ManifestEntry&)> predictor_override;
  std::function<void(const std::string&)> log;
};

// Trains on the train pair, then scores every test row in manifest order.
// Any failure aborts the whole evaluation.
inline CorrelationReport evaluate_manifest(const Manifest& manifest,
                                           const NetworkConfig& net_cfg,
                                           const TrainConfig& train_cfg,
                                           const EvalOptions& options = {}) {
  manifest.validate();
  auto read = [&](const std::string& p) {
    return read_sequence(p, infer_format(p, options.raw_width, options.raw_height),
                         options.channel_mode);
  };
  auto note = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };

  std::function<double(const ManifestEntry&)> predict = options.predictor_override;
  std::optional<NetworkWeights<float>> restorer;
  if (!predict) {
    const ManifestEntry& train = manifest.train_entry();
    note("training on " + train.video_id);
    restorer = train_pair(read(train.path), read(train.pair_path), net_cfg,
                          train_cfg)
                   .restorer;
    predict = [&](const ManifestEntry& e) {
      return score_video(*restorer, read(e.path), options.scoring).score;
    };
  }

  std::vector<VideoPrediction> table;
  for (const auto& e : manifest.test_entries()) {
    const double p = predict(e);
    if (!std::isfinite(p)) {
      throw ScoringError("non-finite prediction for " + e.video_id);
    }
    note("scored " + e.video_id + " = " + format_double(p));
    table.push_back({e.video_id, p, e.mos});
  }
  return correlate(std::move(table));
}

}  // namespace priorvqa
