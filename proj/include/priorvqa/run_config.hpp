#pragma once

// Config file consumed by the CLI: flat key = value lines mirroring the
// NetworkConfig / TrainConfig fields plus a few run-level switches.
//
//   in_channels, out_channels, encoder_channels (comma list), kernel_size,
//   activation_slope, seed                         -> NetworkConfig
//   epochs, learning_rate, beta1, beta2, epsilon,
//   loss_layer_weights (comma list), train_seed    -> TrainConfig
//   channel_mode (luma|rgb), log_base (e|2|10), raw_width, raw_height,
//   score_source (model|mos), threads

#include <cstdint>
#include <string>

#include "priorvqa/keyvalue.hpp"
#include "priorvqa/network.hpp"
#include "priorvqa/scoring.hpp"
#include "priorvqa/trainer.hpp"
#include "priorvqa/video_io.hpp"
#include "priorvqa/weights_io.hpp"

namespace priorvqa {

struct RunConfig {
  NetworkConfig network{};
  TrainConfig training{};
  ChannelMode channel_mode = ChannelMode::luma;
  LogBase log_base = LogBase::natural;
  std::size_t raw_width = 352;
  std::size_t raw_height = 288;
  std::size_t threads = 1;
  // "mos" replaces model predictions by the manifest MOS (harness self-test).
  std::string score_source = "model";

  void set_seed(std::uint64_t seed) {
    network.seed = seed;
    training.seed = seed;
  }

  void validate() const {
    network.validate();
    training.validate(network.encoder_channels.size());
    if (network.in_channels != channel_count(channel_mode) ||
        network.out_channels != channel_count(channel_mode)) {
      throw ConfigError("in/out channels must equal " +
                        std::to_string(channel_count(channel_mode)) +
                        " for the selected channel_mode");
    }
    if (threads == 0) throw ConfigError("threads must be >= 1");
    if (score_source != "model" && score_source != "mos") {
      throw ConfigError("score_source must be 'model' or 'mos'");
    }
  }
};

inline void apply_keys(const KeyValues& kv, RunConfig& rc,
                       const std::string& origin) {
  std::string mode;
  kv.read("channel_mode", mode);
  if (!mode.empty()) {
    rc.channel_mode = parse_channel_mode(mode);
    rc.network.in_channels = rc.network.out_channels = channel_count(rc.channel_mode);
  }
  read_network_config(kv, rc.network);
  if (kv.has("seed")) rc.training.seed = rc.network.seed;
  kv.read("train_seed", rc.training.seed);
  kv.read("epochs", rc.training.epochs);
  kv.read("learning_rate", rc.training.optimizer.learning_rate);
  kv.read("beta1", rc.training.optimizer.beta1);
  kv.read("beta2", rc.training.optimizer.beta2);
  kv.read("epsilon", rc.training.optimizer.epsilon);
  kv.read("loss_layer_weights", rc.training.loss_layer_weights);
  std::string base;
  kv.read("log_base", base);
  if (!base.empty()) rc.log_base = parse_log_base(base);
  kv.read("raw_width", rc.raw_width);
  kv.read("raw_height", rc.raw_height);
  kv.read("threads", rc.threads);
  kv.read("score_source", rc.score_source);
  kv.reject_unknown(origin);
}

inline RunConfig load_run_config(const std::string& path) {
  RunConfig rc;
  apply_keys(KeyValues::load(path), rc, path);
  return rc;
}

}  // namespace priorvqa
