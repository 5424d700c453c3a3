// specrec/audio_io.hpp
//
// WAV ingestion/emission (RIFF PCM 16-bit mono only), windowed-sinc
// resampling, 1-second segmentation, and dataset manifest handling.

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "specrec/spectral.hpp"

namespace specrec::io {

// Samples are scaled to [-1, 1) by 1/32768; writing inverts with saturating
// rounding, so a round trip moves each sample by at most one quantization
// step.
TimeSignal<double> read_wav(const std::string& path);
void write_wav(const std::string& path, const TimeSignal<double>& x);

// Kaiser-windowed sinc resampling with cutoff at the smaller Nyquist rate.
// Output length = round(len * target / source). The kernel is normalized per
// output sample, so constants pass through exactly.
TimeSignal<double> resample(const TimeSignal<double>& x, int target_rate);

constexpr int kSegmentRate = 16000;
constexpr Eigen::Index kSegmentLen = 16000;
constexpr Eigen::Index kSegmentHop = 8000;

struct Segment {
  TimeSignal<double> signal;  // exactly kSegmentLen samples
  std::string source_id;
  Eigen::Index offset = 0;
  bool padded = false;
};

// Full windows advance by kSegmentHop; a trailing remainder becomes one
// zero-padded segment starting where the last full window ended.
std::vector<Segment> segment(const TimeSignal<double>& x, const std::string& source_id = "");

enum class Split { Train, Eval };

struct ManifestEntry {
  std::string path;  // resolved against the manifest root
  Split split = Split::Train;
  std::string id;
};

struct DatasetManifest {
  std::string root;
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> split_entries(Split s) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries)
      if (e.split == s) out.push_back(e);
    return out;
  }
};

// One entry per line: <path> <train|eval> <id>. '#' starts a comment.
// Relative paths resolve against the manifest's directory; every referenced
// file must exist, and no file may appear in both splits.
DatasetManifest load_manifest(const std::string& path);

}  // namespace specrec::io
