#pragma once

// Recording schema, CSV ingestion and the 1 Hz preprocessing pipeline that
// turns per-subject, per-day streams into fixed-length model windows.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcmn/types.hpp"

namespace dcmn::data {

/// Two wearables x 10 access points: wearable-left AP1..AP10, then wearable-right.
inline constexpr int kRssiFeatures = 20;
/// Left x, y, z then right x, y, z.
inline constexpr int kAccelFeatures = 6;
inline constexpr double kRssiFloorDb = -120.0;
inline constexpr double kAccelFill = 0.0;
inline constexpr int kDefaultWindow = 10;

class RoomVocabulary {
 public:
  RoomVocabulary() = default;
  explicit RoomVocabulary(std::vector<std::string> names);

  /// kitchen, living_room, dining_room, hallway, stairs, porch.
  static RoomVocabulary standard();

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  /// Throws VocabularyError for unknown names.
  int id(const std::string& name) const;
  std::optional<int> find(const std::string& name) const;
  bool operator==(const RoomVocabulary&) const = default;

 private:
  std::vector<std::string> names_;
};

struct SensorFrame {
  double timestamp = 0.0;  // unix seconds
  Vector rssi;             // dB, NaN = missing
  Vector accel;            // g, NaN = missing
  std::optional<int> room;
  std::string subject_id;
  int day_index = 0;
  /// Set by resampling for seconds that had no readings at all.
  bool missing = false;
};

struct Stream {
  std::string subject_id;
  int day_index = 0;
  std::vector<SensorFrame> frames;
};

struct SampleMeta {
  std::string subject_id;
  int day_index = 0;
  double start_timestamp = 0.0;
};

struct Sample {
  Matrix rssi;   // T x r
  Matrix accel;  // T x a
  std::vector<int> labels;
  SampleMeta meta;
  int steps() const { return static_cast<int>(labels.size()); }
};

struct NormStats {
  Vector mins;
  Vector maxs;
  std::vector<std::string> feature_names;

  nlohmann::json to_json() const;
  static NormStats from_json(const nlohmann::json& j);
};

enum class SubjectGroup { pd, hc, unknown };
/// Subject ids prefixed "PD" or "HC" (case-insensitive) carry their group.
SubjectGroup group_of(const std::string& subject_id);

std::vector<std::string> csv_header();
std::vector<std::string> feature_names();

/// Streams grouped by (subject, day), in key order, frames timestamp-sorted.
std::vector<Stream> load_recordings(const std::filesystem::path& path, const RoomVocabulary& vocab);
std::vector<Stream> read_recordings(std::istream& in, const RoomVocabulary& vocab);
void write_recordings(std::ostream& out, const std::vector<Stream>& streams,
                      const RoomVocabulary& vocab);
/// Canonical number formatting: shortest round-trip fixed notation, NaN empty.
std::string format_number(double v);

/// Room names present in a recording file, in order of first appearance.
std::vector<std::string> room_names_in(const std::filesystem::path& path);

enum class ResampleMode { mean, max };

/// One frame per wall-clock second from the first to the last reading.
/// Features are averaged (or maxed) over the second's readings; the label is
/// the second's majority label, ties going to the label seen first. Seconds
/// without readings become `missing` frames.
std::vector<SensorFrame> resample_1hz(const std::vector<SensorFrame>& raw,
                                      ResampleMode mode = ResampleMode::mean);

/// Missing RSSI -> -120 dB, missing accelerometer -> 0 g.
std::vector<SensorFrame> impute(std::vector<SensorFrame> frames);

NormStats fit_norm(const std::vector<Stream>& training);
NormStats fit_norm(const std::vector<SensorFrame>& training);
/// Min-max map to [0, 1] with clamping; a constant feature maps to 0.
std::vector<SensorFrame> apply_norm(std::vector<SensorFrame> frames, const NormStats& stats);
std::vector<Stream> apply_norm(std::vector<Stream> streams, const NormStats& stats);

/// Contiguous windows only. A window never spans a missing frame, an
/// unlabeled frame, a timestamp jump other than one second, or a day boundary.
std::vector<Sample> window(const std::vector<SensorFrame>& frames, int steps = kDefaultWindow,
                           int stride = kDefaultWindow);
std::vector<Sample> window(const std::vector<Stream>& streams, int steps, int stride);

/// resample_1hz followed by impute, per stream.
std::vector<Stream> preprocess(std::vector<Stream> streams, ResampleMode mode = ResampleMode::mean);

std::vector<Stream> select_subjects(const std::vector<Stream>& streams,
                                    const std::vector<std::string>& subjects);
std::vector<std::string> subjects_of(const std::vector<Stream>& streams);

}  // namespace dcmn::data
