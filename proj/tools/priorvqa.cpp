// priorvqa command-line driver.
//
// Exit status: 0 success, 1 runtime failure, 2 usage error. Results go to
// stdout as CSV; diagnostics go to stderr.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "priorvqa/priorvqa.hpp"

namespace {

using namespace priorvqa;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> width;
  std::optional<std::size_t> height;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_seed) {
  cmd->add_option("--config", a.config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  if (with_seed) cmd->add_option("--seed", a.seed, "global seed");
  cmd->add_option("--threads", a.threads, "thread budget (1 = reproducible)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--width", a.width, "frame width for raw .yuv input");
  cmd->add_option("--height", a.height, "frame height for raw .yuv input");
  cmd->add_flag("-v,--verbose", a.verbose, "progress on stderr");
}

RunConfig resolve_config(const CommonArgs& a) {
  RunConfig rc = a.config_path.empty() ? RunConfig{} : load_run_config(a.config_path);
  if (a.seed) rc.set_seed(*a.seed);
  if (a.threads) rc.threads = *a.threads;
  if (a.width) rc.raw_width = *a.width;
  if (a.height) rc.raw_height = *a.height;
  rc.validate();
  return rc;
}

FrameSequence load_video(const std::string& path, const RunConfig& rc,
                         ChannelMode mode) {
  return read_sequence(path, infer_format(path, rc.raw_width, rc.raw_height), mode);
}

std::string video_id_for(const std::string& path) {
  std::filesystem::path p(path);
  if (p.filename().empty()) p = p.parent_path();
  return std::filesystem::is_directory(p) ? p.filename().string() : p.stem().string();
}

void require_exists(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError(path + " does not exist");
}

int run_train(const CommonArgs& common, const std::string& original,
              const std::string& distorted, const std::string& out,
              std::string trace_path, std::optional<std::size_t> epochs) {
  RunConfig rc = resolve_config(common);
  if (epochs) rc.training.epochs = *epochs;
  rc.validate();
  require_exists(original);
  require_exists(distorted);
  if (trace_path.empty()) trace_path = out + ".trace.csv";

  const auto o = load_video(original, rc, rc.channel_mode);
  const auto d = load_video(distorted, rc, rc.channel_mode);
  TrainProgress progress;
  if (common.verbose) {
    progress = [](const LossRecord& r) {
      std::cerr << "epoch " << r.epoch << " frame " << r.frame << " loss "
                << format_double(r.loss) << "\n";
    };
  }
  const TrainResult result = train_pair(o, d, rc.network, rc.training, progress);
  write_weights(out, result.restorer);
  write_loss_trace_csv(trace_path, result.trace);
  std::cout << "final_epoch,mean_loss\n"
            << rc.training.epochs << ','
            << format_double(epoch_mean_loss(result.trace, rc.training.epochs))
            << '\n';
  return kExitOk;
}

int run_score(const CommonArgs& common, const std::string& weights_path,
              const std::string& video) {
  const RunConfig rc = resolve_config(common);
  require_exists(video);
  const auto g = read_weights(weights_path);
  const ChannelMode mode =
      g.config.in_channels == 3 ? ChannelMode::rgb : ChannelMode::luma;
  const auto seq = load_video(video, rc, mode);
  ScoringOptions opts;
  opts.log_base = rc.log_base;
  opts.threads = rc.threads;
  const QualityScore q = score_video(g, seq, opts);
  std::cout << score_report_header() << '\n'
            << score_report_line(video_id_for(video), q) << '\n';
  return kExitOk;
}

int run_distort(const CommonArgs& common, const std::string& in,
                const std::string& out, const std::string& kind, double severity) {
  const RunConfig rc = resolve_config(common);
  DistortionSpec spec{parse_distortion_kind(kind), severity, common.seed.value_or(0)};
  spec.validate();
  require_exists(in);
  const auto seq = load_video(in, rc, rc.channel_mode);
  write_sequence(apply_distortion(seq, spec), out,
                 infer_format(out, seq.width(), seq.height()));
  if (common.verbose) std::cerr << "wrote " << out << " (" << spec.to_text() << ")\n";
  return kExitOk;
}

int run_evaluate(const CommonArgs& common, const std::string& manifest_path,
                 const std::string& report_path) {
  const RunConfig rc = resolve_config(common);
  const Manifest manifest = read_manifest(manifest_path);
  manifest.validate();
  EvalOptions opts;
  opts.raw_width = rc.raw_width;
  opts.raw_height = rc.raw_height;
  opts.channel_mode = rc.channel_mode;
  opts.scoring.log_base = rc.log_base;
  opts.scoring.threads = rc.threads;
  if (rc.score_source == "mos") {
    opts.predictor_override = [](const ManifestEntry& e) { return e.mos; };
  }
  if (common.verbose) opts.log = [](const std::string& m) { std::cerr << m << "\n"; };
  const CorrelationReport report =
      evaluate_manifest(manifest, rc.network, rc.training, opts);
  if (!report_path.empty()) write_report_csv(report_path, report);
  std::cout << report.summary_line() << '\n';
  return kExitOk;
}

int run_gradcheck() {
  bool ok = true;
  std::cout << "op,max_rel_error,elements,status\n";
  for (const auto& r : run_gradient_suite()) {
    std::cout << r.name << ',' << format_double(r.max_rel_error) << ','
              << r.elements << ',' << (r.passed ? "pass" : "FAIL") << '\n';
    ok &= r.passed;
  }
  if (!ok) std::cerr << "gradient check exceeded tolerance "
                     << format_double(kGradCheckTolerance) << "\n";
  return ok ? kExitOk : kExitRuntime;
}

int run_synth(const std::string& out, const SyntheticVideoSpec& spec) {
  const auto seq = synthesize_sequence(spec);
  write_sequence(seq, out, infer_format(out, spec.width, spec.height));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind video quality prediction with a single-pair deep prior"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string original, distorted, out, trace, weights, video, in, kind, manifest,
      report;
  double severity = 0.0;
  std::optional<std::size_t> epochs;
  SyntheticVideoSpec synth;

  auto* train = app.add_subcommand("train", "train the restorer on one video pair");
  train->add_option("--original", original, "pristine video")->required();
  train->add_option("--distorted", distorted, "distorted video")->required();
  train->add_option("--out", out, "weights file to write")->required();
  train->add_option("--trace", trace, "loss trace CSV (default <out>.trace.csv)");
  train->add_option("--epochs", epochs, "training epochs")->check(CLI::PositiveNumber);
  add_common(train, common, true);

  auto* score = app.add_subcommand("score", "blind quality score of a video");
  score->add_option("--weights", weights, "trained weights file")->required();
  score->add_option("--video", video, "video to score")->required();
  add_common(score, common, false);

  auto* distort = app.add_subcommand("distort", "apply a synthetic distortion");
  distort->add_option("--in", in, "input video")->required();
  distort->add_option("--out", out, "output video")->required();
  distort->add_option("--kind", kind, "awgn | gaussian_blur | block_quantize")
      ->required();
  distort->add_option("--severity", severity, "distortion strength")->required();
  add_common(distort, common, true);

  auto* evaluate = app.add_subcommand("evaluate", "LCC/SROCC over a manifest");
  evaluate->add_option("--manifest", manifest, "manifest CSV")->required();
  evaluate->add_option("--report", report, "per-video table CSV to write");
  add_common(evaluate, common, true);

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient gate");

  auto* synth_cmd = app.add_subcommand("synth", "write a procedural test video");
  synth_cmd->add_option("--out", out, "output video")->required();
  synth_cmd->add_option("--frames", synth.frames, "frame count");
  synth_cmd->add_option("--width", synth.width, "frame width");
  synth_cmd->add_option("--height", synth.height, "frame height");
  synth_cmd->add_option("--seed", synth.seed, "content seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n\n";
    const CLI::App* failing = app.get_subcommands().empty()
                                  ? &app
                                  : app.get_subcommands().front();
    std::cerr << failing->help();
    return kExitUsage;
  }

  try {
    if (train->parsed()) return run_train(common, original, distorted, out, trace, epochs);
    if (score->parsed()) return run_score(common, weights, video);
    if (distort->parsed()) return run_distort(common, in, out, kind, severity);
    if (evaluate->parsed()) return run_evaluate(common, manifest, report);
    if (gradcheck->parsed()) return run_gradcheck();
    if (synth_cmd->parsed()) return run_synth(out, synth);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
