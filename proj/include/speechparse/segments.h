#pragma once

// Word-level segmentation of utterances and attentive pooling of frame
// features into one embedding per segment.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "speechparse/nn/kernel.h"
#include "speechparse/nn/tape.h"

namespace speechparse {

// T x D frame-level features, row-major, `frame_shift` seconds per frame.
struct FrameMatrix {
  int num_frames = 0;
  int dim = 0;
  double frame_shift = 0.02;
  std::vector<float> data;

  FrameMatrix() = default;
  FrameMatrix(int frames, int dim, double shift);

  std::span<const float> frame(int t) const {
    return {data.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  std::span<float> frame(int t) {
    return {data.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  double duration() const { return num_frames * frame_shift; }
  // Throws on bad shape, non-positive shift or non-finite entries.
  void validate() const;

  bool operator==(const FrameMatrix&) const = default;
};

struct Segment {
  double start = 0.0;
  double end = 0.0;

  double duration() const { return end - start; }
  bool operator==(const Segment&) const = default;
};

// Ordered, non-overlapping segments of one utterance. `words` is either
// empty or parallel to `segments`.
struct SegmentSequence {
  std::string utterance_id;
  std::vector<Segment> segments;
  std::vector<std::string> words;

  std::size_t size() const { return segments.size(); }
  // Throws if a segment is empty or negative, or segments overlap / are out
  // of order.
  void validate() const;

  bool operator==(const SegmentSequence&) const = default;
};

// Consecutive [k·interval, (k+1)·interval) pieces covering [0, duration).
// A trailing remainder shorter than kMinRemainder joins the previous piece.
inline constexpr double kMinRemainder = 0.1;
SegmentSequence fixed_interval_segment(double duration, double interval = 0.5, std::string utterance_id = {});

// Boundary TSV: utterance_id, word_index, start_sec, end_sec[, word].
// Rows are grouped per utterance and sorted by word_index.
std::map<std::string, SegmentSequence> read_boundary_file(const std::string& path);
std::map<std::string, SegmentSequence> parse_boundary_tsv(std::string_view text, const std::string& source);
std::string format_boundary_tsv(const std::map<std::string, SegmentSequence>& segs);
void write_boundary_file(const std::string& path, const std::map<std::string, SegmentSequence>& segs);

// Inclusive frame indices whose centres (idx + 0.5)·shift fall in
// [start, end). Never empty: falls back to the frame nearest the midpoint.
struct FrameRange {
  int first = 0;
  int last = 0;

  int count() const { return last - first + 1; }
  bool operator==(const FrameRange&) const = default;
};
FrameRange segment_frame_range(const Segment& segment, double frame_shift);

// Frame ranges for every segment of `segs`, checked against the matrix.
std::vector<FrameRange> frame_ranges(const FrameMatrix& frames, const SegmentSequence& segs);

// Weighted average of each segment's frames, with softmax weights from a
// scalar-output two-layer MLP scoring each frame.
std::vector<std::vector<double>> embed_segments(const FrameMatrix& frames, const SegmentSequence& segs,
                                                const nn::ParameterStore& store, const nn::Mlp2& weight_mlp);
// Differentiable variant; `frames` must outlive the tape.
std::vector<nn::Tape::Id> embed_segments(nn::Tape& tape, const FrameMatrix& frames,
                                         const std::vector<FrameRange>& ranges, const nn::Mlp2& weight_mlp);

// Feature file: "SPVF", u32 version, u32 D, f64 frame_shift, then per
// utterance (u32 id length, id, u32 T, T·D little-endian f32).
inline constexpr std::uint32_t kFeatureFileVersion = 1;
struct FeatureSet {
  int dim = 0;
  double frame_shift = 0.02;
  std::vector<std::pair<std::string, FrameMatrix>> utterances;

  const FrameMatrix* find(const std::string& id) const;
};
std::string encode_features(const FeatureSet& set);
FeatureSet decode_features(std::string_view bytes, const std::string& source = "<memory>");
void write_feature_file(const std::string& path, const FeatureSet& set);
FeatureSet read_feature_file(const std::string& path);

}  // namespace speechparse
