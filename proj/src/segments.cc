#include "speechparse/segments.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <tuple>

#include "speechparse/fileio.h"

namespace speechparse {

namespace {

// Overlap tolerance for boundaries that went through decimal text.
constexpr double kTimeEpsilon = 1e-9;
constexpr int kBoundaryDecimals = 6;

}  // namespace

FrameMatrix::FrameMatrix(int frames, int dim_, double shift) : num_frames(frames), dim(dim_), frame_shift(shift) {
  if (frames < 1 || dim_ < 1 || !(shift > 0.0)) throw Error("FrameMatrix: invalid shape or frame shift");
  data.assign(static_cast<std::size_t>(frames) * static_cast<std::size_t>(dim_), 0.0f);
}

void FrameMatrix::validate() const {
  if (num_frames < 1 || dim < 1) throw Error("FrameMatrix: empty matrix");
  if (!(frame_shift > 0.0) || !std::isfinite(frame_shift)) throw Error("FrameMatrix: frame shift must be positive");
  if (data.size() != static_cast<std::size_t>(num_frames) * static_cast<std::size_t>(dim)) {
    throw Error("FrameMatrix: data size does not match shape");
  }
  for (float x : data) {
    if (!std::isfinite(x)) throw Error("FrameMatrix: non-finite entry");
  }
}

void SegmentSequence::validate() const {
  if (!words.empty() && words.size() != segments.size()) {
    throw Error("utterance " + utterance_id + ": word list does not match segment count");
  }
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const Segment& s = segments[k];
    if (!(s.start >= 0.0) || !(s.end > s.start) || !std::isfinite(s.end)) {
      throw Error("utterance " + utterance_id + ": invalid segment " + std::to_string(k));
    }
    if (k > 0 && s.start < segments[k - 1].end - kTimeEpsilon) {
      throw Error("utterance " + utterance_id + ": segments " + std::to_string(k - 1) + " and " +
                  std::to_string(k) + " overlap");
    }
  }
}

SegmentSequence fixed_interval_segment(double duration, double interval, std::string utterance_id) {
  if (!(duration > 0.0) || !std::isfinite(duration)) throw Error("fixed_interval_segment: duration must be positive");
  if (!(interval > 0.0)) throw Error("fixed_interval_segment: interval must be positive");
  SegmentSequence seq;
  seq.utterance_id = std::move(utterance_id);
  const auto full = static_cast<long long>(std::floor(duration / interval + kTimeEpsilon));
  for (long long k = 0; k < full; ++k) {
    seq.segments.push_back({static_cast<double>(k) * interval, static_cast<double>(k + 1) * interval});
  }
  const double covered = static_cast<double>(full) * interval;
  const double remainder = duration - covered;
  if (seq.segments.empty()) {
    seq.segments.push_back({0.0, duration});
  } else if (remainder > kTimeEpsilon) {
    if (remainder < kMinRemainder) {
      seq.segments.back().end = duration;
    } else {
      seq.segments.push_back({covered, duration});
    }
  } else {
    seq.segments.back().end = duration;
  }
  return seq;
}

std::map<std::string, SegmentSequence> parse_boundary_tsv(std::string_view text, const std::string& source) {
  struct Row {
    long long index;
    Segment seg;
    std::string word;
    bool has_word;
  };
  std::map<std::string, std::vector<Row>> rows;
  std::size_t line_no = 0;
  for (std::string_view line : fileio::split_lines(text)) {
    ++line_no;
    if (fileio::trim(line).empty()) continue;
    const auto cols = fileio::split(line, '\t');
    if (cols.size() != 4 && cols.size() != 5) {
      throw FormatError(source, line_no, "expected 4 or 5 tab-separated columns");
    }
    if (cols[0].empty()) throw FormatError(source, line_no, "empty utterance id");
    Row row{};
    if (!fileio::parse_int(cols[1], row.index) || row.index < 0) {
      throw FormatError(source, line_no, "bad word index");
    }
    if (!fileio::parse_double(cols[2], row.seg.start) || !fileio::parse_double(cols[3], row.seg.end)) {
      throw FormatError(source, line_no, "bad time value");
    }
    if (!(row.seg.start >= 0.0) || !(row.seg.end > row.seg.start)) {
      throw FormatError(source, line_no, "segment must satisfy 0 <= start < end");
    }
    row.has_word = cols.size() == 5;
    if (row.has_word) row.word = std::string(cols[4]);
    rows[std::string(cols[0])].push_back(std::move(row));
  }
  std::map<std::string, SegmentSequence> out;
  for (auto& [id, list] : rows) {
    std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.index < b.index; });
    SegmentSequence seq;
    seq.utterance_id = id;
    const bool words = std::all_of(list.begin(), list.end(), [](const Row& r) { return r.has_word; });
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (k > 0 && list[k].index == list[k - 1].index) {
        throw FormatError(source, 0, "utterance " + id + ": duplicate word index " + std::to_string(list[k].index));
      }
      seq.segments.push_back(list[k].seg);
      if (words) seq.words.push_back(list[k].word);
    }
    try {
      seq.validate();
    } catch (const Error& e) {
      throw FormatError(source, 0, e.what());
    }
    out.emplace(id, std::move(seq));
  }
  return out;
}

std::map<std::string, SegmentSequence> read_boundary_file(const std::string& path) {
  return parse_boundary_tsv(fileio::read_file(path), path);
}

std::string format_boundary_tsv(const std::map<std::string, SegmentSequence>& segs) {
  std::string out;
  for (const auto& [id, seq] : segs) {
    for (std::size_t k = 0; k < seq.segments.size(); ++k) {
      out += id;
      out += '\t';
      out += std::to_string(k);
      out += '\t';
      out += fileio::format_fixed(seq.segments[k].start, kBoundaryDecimals);
      out += '\t';
      out += fileio::format_fixed(seq.segments[k].end, kBoundaryDecimals);
      if (!seq.words.empty()) {
        out += '\t';
        out += seq.words[k];
      }
      out += '\n';
    }
  }
  return out;
}

void write_boundary_file(const std::string& path, const std::map<std::string, SegmentSequence>& segs) {
  fileio::write_file_atomic(path, format_boundary_tsv(segs));
}

FrameRange segment_frame_range(const Segment& segment, double frame_shift) {
  // Centre (idx + 0.5)·shift lies in [start, end) iff
  // start/shift - 0.5 <= idx < end/shift - 0.5.
  const double lo = std::ceil(segment.start / frame_shift - 0.5);
  const double hi = std::ceil(segment.end / frame_shift - 0.5) - 1.0;
  FrameRange range{static_cast<int>(std::max(0.0, lo)), static_cast<int>(hi)};
  if (range.last < range.first) {
    const double mid = 0.5 * (segment.start + segment.end);
    const int nearest = std::max(0, static_cast<int>(std::floor(mid / frame_shift)));
    range = {nearest, nearest};
  }
  return range;
}

std::vector<FrameRange> frame_ranges(const FrameMatrix& frames, const SegmentSequence& segs) {
  std::vector<FrameRange> out;
  out.reserve(segs.size());
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const Segment& seg = segs.segments[k];
    FrameRange r = segment_frame_range(seg, frames.frame_shift);
    // Boundaries may run up to one frame past the end of the features.
    const double limit = frames.duration() + frames.frame_shift + 1e-9;
    if (seg.end > limit) {
      throw Error("utterance " + segs.utterance_id + ": segment " + std::to_string(k) + " ends at " +
                  std::to_string(seg.end) + " s, past the " + std::to_string(frames.duration()) + " s of features");
    }
    if (r.first >= frames.num_frames && seg.start < limit) {
      r = {frames.num_frames - 1, frames.num_frames - 1};
    }
    if (r.first >= frames.num_frames) {
      throw Error("utterance " + segs.utterance_id + ": segment " + std::to_string(k) + " lies outside the " +
                  std::to_string(frames.num_frames) + " available frames");
    }
    r.last = std::min(r.last, frames.num_frames - 1);
    out.push_back(r);
  }
  return out;
}

std::vector<std::vector<double>> embed_segments(const FrameMatrix& frames, const SegmentSequence& segs,
                                                const nn::ParameterStore& store, const nn::Mlp2& weight_mlp) {
  std::vector<std::vector<double>> out;
  for (const FrameRange& r : frame_ranges(frames, segs)) {
    std::vector<double> scores;
    for (int t = r.first; t <= r.last; ++t) {
      const auto f = frames.frame(t);
      const std::vector<double> x(f.begin(), f.end());
      scores.push_back(nn::mlp2_forward(store, weight_mlp, x).at(0));
    }
    const std::vector<double> w = nn::softmax(scores);
    std::vector<double> pooled(static_cast<std::size_t>(frames.dim), 0.0);
    for (int t = r.first; t <= r.last; ++t) {
      const auto f = frames.frame(t);
      for (std::size_t c = 0; c < pooled.size(); ++c) pooled[c] += w[static_cast<std::size_t>(t - r.first)] * f[c];
    }
    out.push_back(std::move(pooled));
  }
  return out;
}

std::vector<nn::Tape::Id> embed_segments(nn::Tape& tape, const FrameMatrix& frames,
                                         const std::vector<FrameRange>& ranges, const nn::Mlp2& weight_mlp) {
  std::vector<nn::Tape::Id> out;
  out.reserve(ranges.size());
  for (const FrameRange& r : ranges) {
    out.push_back(tape.attentive_pool(frames.data, frames.dim, r.first, r.last, weight_mlp));
  }
  return out;
}

const FrameMatrix* FeatureSet::find(const std::string& id) const {
  for (const auto& [key, m] : utterances) {
    if (key == id) return &m;
  }
  return nullptr;
}

namespace {

static_assert(std::endian::native == std::endian::little, "feature I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class ByteReader {
 public:
  ByteReader(std::string_view bytes, const std::string& source) : bytes_(bytes), source_(source) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)).data(), sizeof(T));
    return v;
  }
  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError(source_, 0, "truncated feature file");
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::string_view bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_features(const FeatureSet& set) {
  std::string out = "SPVF";
  put<std::uint32_t>(out, kFeatureFileVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim));
  put<double>(out, set.frame_shift);
  for (const auto& [id, m] : set.utterances) {
    if (m.dim != set.dim) throw Error("encode_features: utterance " + id + " has wrong feature dimension");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out += id;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.num_frames));
    out.append(reinterpret_cast<const char*>(m.data.data()), m.data.size() * sizeof(float));
  }
  return out;
}

FeatureSet decode_features(std::string_view bytes, const std::string& source) {
  ByteReader in(bytes, source);
  if (in.take(4) != "SPVF") throw FormatError(source, 0, "bad feature file magic");
  const auto version = in.get<std::uint32_t>();
  if (version != kFeatureFileVersion) {
    throw FormatError(source, 0, "unsupported feature file version " + std::to_string(version));
  }
  FeatureSet set;
  set.dim = static_cast<int>(in.get<std::uint32_t>());
  set.frame_shift = in.get<double>();
  if (set.dim < 1 || !(set.frame_shift > 0.0)) throw FormatError(source, 0, "invalid feature header");
  while (!in.done()) {
    const auto id_len = in.get<std::uint32_t>();
    std::string id(in.take(id_len));
    const auto frames = in.get<std::uint32_t>();
    if (frames == 0) throw FormatError(source, 0, "utterance " + id + " has no frames");
    const std::size_t frame_bytes = static_cast<std::size_t>(set.dim) * sizeof(float);
    if (frames > in.remaining() / frame_bytes) throw FormatError(source, 0, "truncated feature file");
    const std::string_view raw =
        in.take(static_cast<std::size_t>(frames) * static_cast<std::size_t>(set.dim) * sizeof(float));
    FrameMatrix m(static_cast<int>(frames), set.dim, set.frame_shift);
    std::memcpy(m.data.data(), raw.data(), raw.size());
    for (float x : m.data) {
      if (!std::isfinite(x)) throw FormatError(source, 0, "non-finite feature value in utterance " + id);
    }
    if (set.find(id)) throw FormatError(source, 0, "duplicate utterance id " + id);
    set.utterances.emplace_back(std::move(id), std::move(m));
  }
  return set;
}

void write_feature_file(const std::string& path, const FeatureSet& set) {
  fileio::write_file_atomic(path, encode_features(set));
}

FeatureSet read_feature_file(const std::string& path) { return decode_features(fileio::read_file(path), path); }

}  // namespace speechparse
