// pscaug/pipeline.hpp

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

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "pscaug/audio.hpp"
#include "pscaug/channel.hpp"
#include "pscaug/codec.hpp"
#include "pscaug/config.hpp"
#include "pscaug/error.hpp"
#include "pscaug/manifest.hpp"
#include "pscaug/noise.hpp"
#include "pscaug/resample.hpp"
#include "pscaug/reverb.hpp"
#include "pscaug/rng.hpp"
#include "pscaug/vad.hpp"
#include "pscaug/wav.hpp"

namespace pscaug {

/// Every random choice made for one chunk. Recording-level choices are
/// repeated on each chunk of the recording. Empty optionals mean the stage
/// was disabled (or, for cutoff_hz, that the channel coin came up tails).
struct AugmentationRecord {
  std::string recording_id;
  std::size_t chunk_index = 0;
  double chunk_start_s = 0.0;
  double chunk_end_s = 0.0;
  std::optional<std::string> ir_id;
  std::optional<NoiseEvent> noise;
  std::string snr_band;
  std::optional<bool> channel_applied;
  std::optional<double> cutoff_hz;
  std::optional<std::string> codec;
  double drop_rate = 0.0;
  std::uint64_t derived_seed = 0;

  bool operator==(const AugmentationRecord&) const = default;
};

inline std::uint64_t recording_seed(std::uint64_t master_seed, std::string_view recording_id) {
  return hash64(master_seed, recording_id);
}

inline std::uint64_t chunk_seed(std::uint64_t recording_seed, std::size_t chunk_index) {
  return hash64(recording_seed, static_cast<std::uint64_t>(chunk_index));
}

inline constexpr std::string_view kRecordingStream = "recording";
inline constexpr std::string_view kDropStream = "drop";

struct AugmentResources {
  IrPool irs;
  NoisePool noises;
};

inline AugmentResources load_resources(const PipelineConfig& config) {
  AugmentResources res;
  if (config.reverb_enabled)
    res.irs = build_ir_pool(config.ir_manifest, config.max_rt60_s, config.sample_rate_hz);
  if (config.noise_enabled)
    res.noises = build_noise_pool(config.noise_manifest, config.noise_class_weights, config.sample_rate_hz);
  return res;
}

struct SampleSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline std::size_t seconds_to_sample(double t, int rate_hz, std::size_t limit) {
  const double s = std::nearbyint(t * rate_hz);
  if (!(s > 0.0)) return 0;
  return std::min(limit, static_cast<std::size_t>(s));
}

/// Chunk i covers [start of its first segment, start of chunk i+1); the
/// first chunk starts at 0 and the last ends at the end of the recording,
/// so the spans partition the audio.
inline std::vector<SampleSpan> chunk_spans(const std::vector<SegmentChunk>& chunks, std::size_t num_samples,
                                           int rate_hz) {
  if (chunks.empty()) return {{0, num_samples}};
  std::vector<SampleSpan> spans(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    spans[i].begin = i == 0 ? 0 : seconds_to_sample(chunks[i].segments.front().start_s, rate_hz, num_samples);
    if (i > 0) spans[i].begin = std::max(spans[i].begin, spans[i - 1].begin);
  }
  for (std::size_t i = 0; i + 1 < spans.size(); ++i) spans[i].end = spans[i + 1].begin;
  spans.back().end = num_samples;
  return spans;
}

namespace pipeline_detail {

inline void draw_stages(AugmentationRecord& rec, StageLevel level, const PipelineConfig& c,
                        const AugmentResources& res, Rng& rng) {
  if (c.reverb_enabled && c.reverb_level == level) {
    if (res.irs.entries.empty()) fail(Errc::kEmptyPool, "no impulse responses loaded");
    rec.ir_id = res.irs.entries[rng.index(res.irs.entries.size())].source_id;
  }
  if (c.noise_enabled && c.noise_level == level) {
    const SnrBand& band = c.snr_bands[rng.weighted_index(c.band_mix)];
    rec.snr_band = band.name;
    rec.noise = draw_noise_event(res.noises, band, rng);
  }
  if (c.channel_enabled && c.channel_level == level) {
    rec.channel_applied = rng.bernoulli(c.channel.apply_probability);
    if (*rec.channel_applied) rec.cutoff_hz = draw_cutoff(c.channel, rng);
  }
  if (c.codec_enabled && c.codec_level == level) {
    std::vector<double> weights;
    for (const auto& choice : c.codecs) weights.push_back(choice.weight);
    rec.codec = c.codecs[rng.weighted_index(weights)].spec.name;
    rec.drop_rate = rng.uniform(0.0, c.max_drop_rate);
  }
}

inline const CodecSpec& find_codec(const PipelineConfig& c, const std::string& name) {
  for (const auto& choice : c.codecs)
    if (choice.spec.name == name) return choice.spec;
  fail(Errc::kConfigError, "codec '" + name + "' is not configured");
}

/// Runs the stages configured at `level` whose choices are present in the
/// record. Silent audio skips noise and channel (both need signal power).
inline AudioBuffer apply_stages(AudioBuffer audio, const AugmentationRecord& rec, StageLevel level,
                                const PipelineConfig& c, const AugmentResources& res,
                                std::uint64_t drop_seed) {
  if (audio.empty()) return audio;
  if (c.reverb_enabled && c.reverb_level == level && rec.ir_id) {
    const ImpulseResponse* ir = res.irs.find(*rec.ir_id);
    if (ir == nullptr) fail(Errc::kConfigError, "impulse response '" + *rec.ir_id + "' is not in the pool");
    audio = apply_reverb(audio, *ir);
  }
  if (c.noise_enabled && c.noise_level == level && rec.noise && !is_silent(audio.samples)) {
    const NoiseClip* clip = res.noises.find(rec.noise->clip_id);
    if (clip == nullptr) fail(Errc::kConfigError, "noise clip '" + rec.noise->clip_id + "' is not in the pool");
    audio = mix_at_snr(audio, clip->audio, *rec.noise).audio;
  }
  if (c.channel_enabled && c.channel_level == level && rec.channel_applied.value_or(false) &&
      !is_silent(audio.samples)) {
    if (!rec.cutoff_hz) fail(Errc::kConfigError, "channel applied without a cutoff");
    audio = walkie_talkie_at(audio, c.channel, *rec.cutoff_hz).audio;
  }
  if (c.codec_enabled && c.codec_level == level && rec.codec) {
    CodecSpec spec = find_codec(c, *rec.codec);
    spec.drop_rate = rec.drop_rate;
    audio = codec_roundtrip(audio, spec);
    Rng drop_rng(drop_seed);
    audio = drop_frames(audio, spec, drop_rng).audio;
  }
  return audio;
}

}  // namespace pipeline_detail

/// Draws every choice for one recording. `segments` are the recording's
/// speech segments; with none, the whole file is one chunk.
inline std::vector<AugmentationRecord> plan_recording(const std::string& recording_id, std::size_t num_samples,
                                                      const std::vector<SpeechSegment>& segments,
                                                      const PipelineConfig& config,
                                                      const AugmentResources& res) {
  const int rate = config.sample_rate_hz;
  const std::vector<SegmentChunk> chunks =
      segments.empty() ? std::vector<SegmentChunk>{} : group_chunks(segments, config.vad.min_chunk_s);
  const std::vector<SampleSpan> spans = chunk_spans(chunks, num_samples, rate);

  const std::uint64_t seed = recording_seed(config.master_seed, recording_id);
  AugmentationRecord shared;
  shared.recording_id = recording_id;
  shared.derived_seed = seed;
  Rng recording_rng(hash64(seed, kRecordingStream));
  pipeline_detail::draw_stages(shared, StageLevel::kRecording, config, res, recording_rng);

  std::vector<AugmentationRecord> records;
  records.reserve(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    AugmentationRecord rec = shared;
    rec.chunk_index = i;
    rec.chunk_start_s = static_cast<double>(spans[i].begin) / rate;
    rec.chunk_end_s = static_cast<double>(spans[i].end) / rate;
    Rng chunk_rng(chunk_seed(seed, i));
    pipeline_detail::draw_stages(rec, StageLevel::kChunk, config, res, chunk_rng);
    records.push_back(std::move(rec));
  }
  return records;
}

/// Chunk-level stages for one record, applied to its slice of `input`.
inline AudioBuffer render_chunk(const AudioBuffer& input, const AugmentationRecord& rec,
                                const PipelineConfig& config, const AugmentResources& res) {
  if (input.sample_rate_hz != config.sample_rate_hz)
    fail(Errc::kRateMismatch, "recording is not at the pipeline sample rate");
  const std::size_t begin = seconds_to_sample(rec.chunk_start_s, input.sample_rate_hz, input.size());
  const std::size_t end = seconds_to_sample(rec.chunk_end_s, input.sample_rate_hz, input.size());
  if (end < begin) fail(Errc::kConfigError, "chunk ends before it starts");
  AudioBuffer chunk(std::vector<double>(input.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                                        input.samples.begin() + static_cast<std::ptrdiff_t>(end)),
                    input.sample_rate_hz);
  const std::uint64_t drop_seed = hash64(chunk_seed(rec.derived_seed, rec.chunk_index), kDropStream);
  return pipeline_detail::apply_stages(std::move(chunk), rec, StageLevel::kChunk, config, res, drop_seed);
}

/// Full output for one recording from its records, in chunk order. Used by
/// both the batch run and replay.
inline AudioBuffer render_recording(const AudioBuffer& input, const std::vector<AugmentationRecord>& records,
                                    const PipelineConfig& config, const AugmentResources& res) {
  if (records.empty()) fail(Errc::kInvalidArgument, "no records to render");
  AudioBuffer out({}, input.sample_rate_hz);
  out.samples.reserve(input.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].chunk_index != i || records[i].recording_id != records.front().recording_id)
      fail(Errc::kConfigError, "records for " + records.front().recording_id + " are incomplete or out of order");
    const AudioBuffer chunk = render_chunk(input, records[i], config, res);
    out.samples.insert(out.samples.end(), chunk.samples.begin(), chunk.samples.end());
  }
  if (out.size() != input.size())
    fail(Errc::kConfigError, "chunks of " + records.front().recording_id + " do not cover the recording");
  const std::uint64_t drop_seed = hash64(records.front().derived_seed, kDropStream);
  return pipeline_detail::apply_stages(std::move(out), records.front(), StageLevel::kRecording, config, res,
                                       drop_seed);
}

inline AudioBuffer load_recording(const std::filesystem::path& path, int rate_hz) {
  return resample(read_wav(path), rate_hz);
}

/// Imported segments when a table is given (a recording absent from it has
/// no speech), otherwise the energy detector. Audio too short to analyse
/// has no speech.
inline std::vector<SpeechSegment> speech_segments(const AudioBuffer& audio, const std::string& recording_id,
                                                  const VadConfig& vad, const SegmentTable* imported) {
  if (imported != nullptr) {
    auto it = imported->find(recording_id);
    return it == imported->end() ? std::vector<SpeechSegment>{} : it->second;
  }
  try {
    return detect_speech(audio, vad);
  } catch (const Error& e) {
    if (e.code() == Errc::kBufferTooShort) return {};
    throw;
  }
}

// ---------------------------------------------------------------------------
// Manifest TSV

inline constexpr std::string_view kAugmentManifestHeader =
    "recording_id\tchunk_index\tchunk_start_s\tchunk_end_s\tir_id\tnoise_id\tnoise_offset_s\tsnr_band\t"
    "snr_db\tchannel_applied\tcutoff_hz\tcodec\tdrop_rate\tderived_seed";

namespace pipeline_detail {

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    fail(Errc::kConfigError, "manifest line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& s, std::size_t line_no) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    fail(Errc::kConfigError, "manifest line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  return v;
}

}  // namespace pipeline_detail

inline void write_augment_manifest(std::ostream& out, const std::vector<AugmentationRecord>& records) {
  using pipeline_detail::format_double;
  out << kAugmentManifestHeader << '\n';
  for (const auto& r : records) {
    out << r.recording_id << '\t' << r.chunk_index << '\t' << format_double(r.chunk_start_s) << '\t'
        << format_double(r.chunk_end_s) << '\t' << r.ir_id.value_or("-") << '\t';
    if (r.noise)
      out << r.noise->clip_id << '\t' << format_double(r.noise->start_offset_s) << '\t' << r.snr_band << '\t'
          << format_double(r.noise->snr_db) << '\t';
    else
      out << "-\t-\t-\t-\t";
    if (r.channel_applied)
      out << (*r.channel_applied ? "yes" : "no") << '\t';
    else
      out << "-\t";
    out << (r.cutoff_hz ? format_double(*r.cutoff_hz) : "-") << '\t';
    if (r.codec)
      out << *r.codec << '\t' << format_double(r.drop_rate) << '\t';
    else
      out << "-\t-\t";
    out << r.derived_seed << '\n';
  }
}

inline void write_augment_manifest(const std::filesystem::path& path, const std::vector<AugmentationRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::kIoError, "cannot create " + path.string());
  write_augment_manifest(out, records);
  if (!out) fail(Errc::kIoError, "short write to " + path.string());
}

inline std::vector<AugmentationRecord> read_augment_manifest(std::istream& in) {
  using namespace pipeline_detail;
  std::vector<AugmentationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line != kAugmentManifestHeader)
    fail(Errc::kConfigError, "augmentation manifest lacks its header line");
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', pos);
      f.push_back(line.substr(pos, tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (f.size() != 14)
      fail(Errc::kConfigError, "manifest line " + std::to_string(line_no) + ": expected 14 fields");
    AugmentationRecord r;
    r.recording_id = f[0];
    r.chunk_index = static_cast<std::size_t>(parse_u64(f[1], line_no));
    r.chunk_start_s = parse_double(f[2], line_no);
    r.chunk_end_s = parse_double(f[3], line_no);
    if (f[4] != "-") r.ir_id = f[4];
    if (f[5] != "-") {
      r.noise = NoiseEvent{f[5], parse_double(f[6], line_no), parse_double(f[8], line_no)};
      r.snr_band = f[7];
    }
    if (f[9] == "yes" || f[9] == "no")
      r.channel_applied = f[9] == "yes";
    else if (f[9] != "-")
      fail(Errc::kConfigError, "manifest line " + std::to_string(line_no) + ": channel_applied '" + f[9] + "'");
    if (f[10] != "-") r.cutoff_hz = parse_double(f[10], line_no);
    if (f[11] != "-") {
      r.codec = f[11];
      r.drop_rate = parse_double(f[12], line_no);
    }
    r.derived_seed = parse_u64(f[13], line_no);
    records.push_back(std::move(r));
  }
  return records;
}

inline std::vector<AugmentationRecord> read_augment_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIoError, "cannot open " + path.string());
  return read_augment_manifest(in);
}

// ---------------------------------------------------------------------------
// Batch run

struct CorpusEntry {
  std::string recording_id;
  std::filesystem::path wav;
};

/// "recording-id wav-path" lines; ids must be unique (they name the outputs).
inline std::vector<CorpusEntry> read_corpus(const std::filesystem::path& manifest) {
  std::vector<CorpusEntry> corpus;
  std::set<std::string> seen;
  for (const auto& line : read_manifest(manifest, 2)) {
    if (!seen.insert(line.fields[0]).second)
      fail(Errc::kConfigError, "duplicate recording id '" + line.fields[0] + "' in " + manifest.string());
    if (line.fields[0].find('/') != std::string::npos)
      fail(Errc::kConfigError, "recording id '" + line.fields[0] + "' contains '/'");
    corpus.push_back({line.fields[0], resolve_path(manifest, line.fields[1])});
  }
  return corpus;
}

struct RecordingFailure {
  std::string recording_id;
  std::string message;
};

struct AugmentSummary {
  std::size_t recordings = 0;
  std::vector<AugmentationRecord> records;  // corpus order
  std::vector<RecordingFailure> failures;   // corpus order
  std::filesystem::path manifest_path;

  bool ok() const { return failures.empty(); }
};

inline std::filesystem::path augmented_wav_path(const PipelineConfig& config, const std::string& recording_id) {
  return config.output_dir / (recording_id + ".wav");
}

inline constexpr std::string_view kAugmentManifestName = "augment_manifest.tsv";

/// Augments every recording in the corpus. Recordings are processed in
/// parallel; a recording that fails is reported and skipped. Outputs and the
/// manifest do not depend on the worker count.
inline AugmentSummary run_augment(const PipelineConfig& config) {
  config.validate();
  const std::vector<CorpusEntry> corpus = read_corpus(config.corpus_manifest);
  const AugmentResources res = load_resources(config);
  std::optional<SegmentTable> imported;
  if (config.segments_file) imported = import_segments(*config.segments_file);
  std::filesystem::create_directories(config.output_dir);

  std::vector<std::vector<AugmentationRecord>> planned(corpus.size());
  std::vector<std::optional<std::string>> errors(corpus.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < corpus.size();) {
      const CorpusEntry& entry = corpus[i];
      try {
        const AudioBuffer input = load_recording(entry.wav, config.sample_rate_hz);
        const auto segments =
            speech_segments(input, entry.recording_id, config.vad, imported ? &*imported : nullptr);
        auto records = plan_recording(entry.recording_id, input.size(), segments, config, res);
        write_wav(render_recording(input, records, config, res), augmented_wav_path(config, entry.recording_id));
        planned[i] = std::move(records);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(config.workers), corpus.size());
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }

  AugmentSummary summary;
  summary.recordings = corpus.size();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (errors[i]) {
      summary.failures.push_back({corpus[i].recording_id, *errors[i]});
      continue;
    }
    summary.records.insert(summary.records.end(), planned[i].begin(), planned[i].end());
  }
  summary.manifest_path = config.output_dir / kAugmentManifestName;
  write_augment_manifest(summary.manifest_path, summary.records);
  return summary;
}

/// Re-renders one recording of a finished run from its manifest records.
inline AudioBuffer replay_recording(const PipelineConfig& config, const AugmentResources& res,
                                    const std::filesystem::path& input_wav,
                                    const std::vector<AugmentationRecord>& records) {
  return render_recording(load_recording(input_wav, config.sample_rate_hz), records, config, res);
}

}  // namespace pscaug
