// pscaug/config.hpp

// Copyright 2026  The pscaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pscaug/channel.hpp"
#include "pscaug/codec.hpp"
#include "pscaug/error.hpp"
#include "pscaug/noise.hpp"
#include "pscaug/vad.hpp"

namespace pscaug {

enum class StageLevel { kChunk, kRecording };

inline StageLevel parse_stage_level(const std::string& s) {
  if (s == "chunk") return StageLevel::kChunk;
  if (s == "recording") return StageLevel::kRecording;
  fail(Errc::kConfigError, "stage level must be 'chunk' or 'recording', got '" + s + "'");
}

struct CodecChoice {
  CodecSpec spec;
  double weight = 1.0;
};

inline std::vector<CodecChoice> default_codec_choices() {
  CodecChoice mu, a;
  mu.spec.name = "g711_mu";
  mu.spec.kind = CodecKind::kG711Mu;
  a.spec.name = "g711_a";
  a.spec.kind = CodecKind::kG711A;
  return {mu, a};
}

/// Everything run_augment needs. Defaults reproduce the reference recipe:
/// 5 s chunks, RT60 < 0.5 s, 4:1 freesound:reverbdb noise, 1-8 / 9-15 dB SNR
/// bands mixed 50/50, radio chain on half the recordings (20 dB overdrive,
/// 300/600/1000/1500 Hz high-pass), G.711 with up to 6% frame loss.
struct PipelineConfig {
  std::uint64_t master_seed = 0;
  int workers = 1;
  int sample_rate_hz = 8000;

  std::filesystem::path corpus_manifest;  // "recording-id wav-path"
  std::filesystem::path ir_manifest;      // "ir-id wav-path"
  std::filesystem::path noise_manifest;   // "clip-id class wav-path"
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> segments_file;  // external VAD output

  VadConfig vad;

  bool reverb_enabled = true;
  StageLevel reverb_level = StageLevel::kChunk;
  double max_rt60_s = 0.5;

  bool noise_enabled = true;
  StageLevel noise_level = StageLevel::kChunk;
  std::map<std::string, double> noise_class_weights{{"freesound", 4.0}, {"reverbdb", 1.0}};
  std::vector<SnrBand> snr_bands = default_snr_bands();
  std::vector<double> band_mix{0.5, 0.5};

  bool channel_enabled = true;
  StageLevel channel_level = StageLevel::kRecording;
  ChannelConfig channel;

  bool codec_enabled = true;
  StageLevel codec_level = StageLevel::kRecording;
  std::vector<CodecChoice> codecs = default_codec_choices();
  double max_drop_rate = kDropRateCeiling;  // per-recording rate ~ U[0, max]

  void validate() const {
    if (workers < 1) fail(Errc::kConfigError, "workers must be >= 1");
    if (sample_rate_hz <= 0) fail(Errc::kConfigError, "sample_rate must be positive");
    if (corpus_manifest.empty()) fail(Errc::kConfigError, "io.corpus is required");
    if (output_dir.empty()) fail(Errc::kConfigError, "io.output_dir is required");
    if (reverb_enabled && ir_manifest.empty()) fail(Errc::kConfigError, "reverb enabled but io.impulse_responses unset");
    if (noise_enabled && noise_manifest.empty()) fail(Errc::kConfigError, "noise enabled but io.noises unset");
    vad.validate();
    if (snr_bands.empty() || snr_bands.size() != band_mix.size())
      fail(Errc::kConfigError, "every SNR band needs exactly one mix ratio");
    double mix = 0.0;
    for (std::size_t i = 0; i < snr_bands.size(); ++i) {
      snr_bands[i].validate();
      if (!(band_mix[i] >= 0.0)) fail(Errc::kConfigError, "band mix ratios must be >= 0");
      mix += band_mix[i];
    }
    if (std::abs(mix - 1.0) > 1e-9) fail(Errc::kConfigError, "band mix ratios must sum to 1");
    // Stage order is fixed; a recording-level stage cannot feed a chunk-level one.
    bool seen_recording = false;
    const std::pair<bool, StageLevel> stages[] = {{reverb_enabled, reverb_level},
                                                  {noise_enabled, noise_level},
                                                  {channel_enabled, channel_level},
                                                  {codec_enabled, codec_level}};
    for (const auto& [enabled, level] : stages) {
      if (!enabled) continue;
      if (level == StageLevel::kChunk && seen_recording)
        fail(Errc::kConfigError, "a chunk-level stage cannot follow a recording-level stage");
      seen_recording = seen_recording || level == StageLevel::kRecording;
    }
    if (channel_enabled) channel.validate(sample_rate_hz);
    if (codec_enabled) {
      if (codecs.empty()) fail(Errc::kConfigError, "codec stage enabled with no codecs");
      for (const auto& c : codecs) {
        if (!(c.weight > 0.0)) fail(Errc::kConfigError, "codec weights must be > 0");
        CodecSpec probe = c.spec;
        probe.drop_rate = max_drop_rate;
        probe.validate();
      }
    }
  }
};

namespace config_detail {

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream ss(s);
  std::vector<std::string> out;
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

/// Value at `key`, or `fallback` when absent. Unlike ptree::get with a
/// default, a present but unparsable value is an error.
template <class T>
T get_or(const boost::property_tree::ptree& tree, const std::string& key, T fallback) {
  const auto raw = tree.get_optional<std::string>(key);
  if (!raw) return fallback;
  const auto parsed = tree.get_optional<T>(key);
  if (!parsed) fail(Errc::kConfigError, key + ": cannot parse '" + *raw + "'");
  return *parsed;
}

inline double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  fail(Errc::kConfigError, what + ": '" + s + "' is not a number");
}

}  // namespace config_detail

/// INI file with sections general, io, vad, reverb, noise, channel, codec and
/// one [external:NAME] section per external codec named in codec.codecs.
/// Relative paths are resolved against the config file's directory. The
/// result is not validated; see load_pipeline_config.
inline PipelineConfig read_pipeline_config(const std::filesystem::path& path) {
  using namespace config_detail;
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    fail(Errc::kConfigError, e.what());
  }
  const auto base = path.parent_path();
  const auto resolve = [&base](const std::string& p) -> std::filesystem::path {
    std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
  };

  PipelineConfig c;
  try {
    c.master_seed = config_detail::get_or<std::uint64_t>(tree, "general.master_seed", c.master_seed);
    c.workers = config_detail::get_or<int>(tree, "general.workers", c.workers);
    c.sample_rate_hz = config_detail::get_or<int>(tree, "general.sample_rate", c.sample_rate_hz);

    if (auto v = tree.get_optional<std::string>("io.corpus")) c.corpus_manifest = resolve(*v);
    if (auto v = tree.get_optional<std::string>("io.impulse_responses")) c.ir_manifest = resolve(*v);
    if (auto v = tree.get_optional<std::string>("io.noises")) c.noise_manifest = resolve(*v);
    if (auto v = tree.get_optional<std::string>("io.output_dir")) c.output_dir = resolve(*v);
    if (auto v = tree.get_optional<std::string>("io.segments")) c.segments_file = resolve(*v);

    c.vad.frame_ms = config_detail::get_or(tree, "vad.frame_ms", c.vad.frame_ms);
    c.vad.hop_ms = config_detail::get_or(tree, "vad.hop_ms", c.vad.hop_ms);
    c.vad.energy_margin_db = config_detail::get_or(tree, "vad.energy_margin_db", c.vad.energy_margin_db);
    c.vad.hangover_frames = config_detail::get_or(tree, "vad.hangover_frames", c.vad.hangover_frames);
    c.vad.min_chunk_s = config_detail::get_or(tree, "vad.min_chunk_s", c.vad.min_chunk_s);
    c.vad.silence_floor_dbfs = config_detail::get_or(tree, "vad.silence_floor_dbfs", c.vad.silence_floor_dbfs);

    c.reverb_enabled = config_detail::get_or(tree, "reverb.enabled", c.reverb_enabled);
    c.reverb_level = parse_stage_level(tree.get<std::string>("reverb.level", "chunk"));
    c.max_rt60_s = config_detail::get_or(tree, "reverb.max_rt60", c.max_rt60_s);

    c.noise_enabled = config_detail::get_or(tree, "noise.enabled", c.noise_enabled);
    c.noise_level = parse_stage_level(tree.get<std::string>("noise.level", "chunk"));
    if (auto v = tree.get_optional<std::string>("noise.class_weights")) {
      c.noise_class_weights.clear();
      for (const auto& item : split_ws(*v)) {
        const auto kv = split_on(item, ':');
        if (kv.size() != 2) fail(Errc::kConfigError, "noise.class_weights item '" + item + "' is not class:weight");
        c.noise_class_weights[kv[0]] = to_double(kv[1], "noise.class_weights");
      }
    }
    if (auto v = tree.get_optional<std::string>("noise.bands")) {
      c.snr_bands.clear();
      for (const auto& item : split_ws(*v)) {
        const auto f = split_on(item, ':');
        if (f.size() != 3) fail(Errc::kConfigError, "noise.bands item '" + item + "' is not name:low:high");
        c.snr_bands.push_back({f[0], to_double(f[1], "noise.bands"), to_double(f[2], "noise.bands")});
      }
      c.band_mix.assign(c.snr_bands.size(), 1.0 / static_cast<double>(c.snr_bands.size()));
    }
    if (auto v = tree.get_optional<std::string>("noise.band_mix")) {
      std::map<std::string, double> mix;
      for (const auto& item : split_ws(*v)) {
        const auto kv = split_on(item, ':');
        if (kv.size() != 2) fail(Errc::kConfigError, "noise.band_mix item '" + item + "' is not band:ratio");
        mix[kv[0]] = to_double(kv[1], "noise.band_mix");
      }
      c.band_mix.clear();
      for (const auto& b : c.snr_bands) {
        auto it = mix.find(b.name);
        if (it == mix.end()) fail(Errc::kConfigError, "noise.band_mix lacks band '" + b.name + "'");
        c.band_mix.push_back(it->second);
      }
      if (mix.size() != c.snr_bands.size()) fail(Errc::kConfigError, "noise.band_mix names an unknown band");
    }

    c.channel_enabled = config_detail::get_or(tree, "channel.enabled", c.channel_enabled);
    c.channel_level = parse_stage_level(tree.get<std::string>("channel.level", "recording"));
    c.channel.apply_probability = config_detail::get_or(tree, "channel.probability", c.channel.apply_probability);
    c.channel.gain_db = config_detail::get_or(tree, "channel.gain_db", c.channel.gain_db);
    if (auto v = tree.get_optional<std::string>("channel.cutoffs")) {
      c.channel.cutoff_choices_hz.clear();
      for (const auto& item : split_ws(*v)) c.channel.cutoff_choices_hz.push_back(to_double(item, "channel.cutoffs"));
    }
    auto& ph = c.channel.phaser;
    ph.in_gain = config_detail::get_or(tree, "channel.phaser_in_gain", ph.in_gain);
    ph.out_gain = config_detail::get_or(tree, "channel.phaser_out_gain", ph.out_gain);
    ph.delay_ms = config_detail::get_or(tree, "channel.phaser_delay_ms", ph.delay_ms);
    ph.decay = config_detail::get_or(tree, "channel.phaser_decay", ph.decay);
    ph.speed_hz = config_detail::get_or(tree, "channel.phaser_speed_hz", ph.speed_hz);

    c.codec_enabled = config_detail::get_or(tree, "codec.enabled", c.codec_enabled);
    c.codec_level = parse_stage_level(tree.get<std::string>("codec.level", "recording"));
    c.max_drop_rate = config_detail::get_or(tree, "codec.max_drop_rate", c.max_drop_rate);
    const double frame_ms = config_detail::get_or(tree, "codec.frame_ms", 20.0);
    const bool allow_above = config_detail::get_or(tree, "codec.allow_drop_above_ceiling", false);
    if (auto v = tree.get_optional<std::string>("codec.codecs")) {
      c.codecs.clear();
      for (const auto& item : split_ws(*v)) {
        const auto kv = split_on(item, ':');
        if (kv.empty() || kv.size() > 2) fail(Errc::kConfigError, "codec.codecs item '" + item + "'");
        CodecChoice choice;
        choice.spec.name = kv[0];
        choice.weight = kv.size() == 2 ? to_double(kv[1], "codec.codecs") : 1.0;
        if (auto ext = tree.get_child_optional(pt::ptree::path_type("external:" + kv[0], '/'))) {
          choice.spec.kind = CodecKind::kExternal;
          choice.spec.encode_cmd = ext->get<std::string>("encode", "");
          choice.spec.decode_cmd = ext->get<std::string>("decode", "");
        } else {
          choice.spec.kind = parse_codec_kind(kv[0]);
          if (choice.spec.kind == CodecKind::kExternal)
            fail(Errc::kConfigError, "external codecs need an [external:NAME] section");
        }
        c.codecs.push_back(std::move(choice));
      }
    }
    for (auto& choice : c.codecs) {
      choice.spec.frame_ms = frame_ms;
      choice.spec.allow_drop_above_ceiling = allow_above;
    }
  } catch (const pt::ptree_error& e) {
    fail(Errc::kConfigError, path.string() + ": " + e.what());
  }
  return c;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  PipelineConfig c = read_pipeline_config(path);
  c.validate();
  return c;
}

}  // namespace pscaug
