#pragma once

// In-home mobility measures over per-second room sequences: room changes per
// day and the time taken to cross the hallway between two rooms.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dcmn/dataio.hpp"
#include "dcmn/types.hpp"

namespace dcmn::mobility {

struct RoomSequence {
  std::string subject_id;
  int day_index = 0;
  std::vector<double> timestamps;  // seconds; a step other than 1 s starts a new segment
  std::vector<int> rooms;
};

using Adjacency = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Room changes between consecutive seconds of the same contiguous segment.
int count_daily_transitions(const RoomSequence& seq);

/// Durations (s) of every A, hub^k, B or B, hub^k, A run with k >= 1 inside
/// one segment: the k hub seconds plus the first second in the destination.
/// Throws DomainError if a == b, either is the hub, or (given an adjacency)
/// either room does not open onto the hub.
std::vector<double> pair_transition_durations(const RoomSequence& seq, int a, int b, int hub,
                                              const Adjacency* adjacency = nullptr);

/// Width-3 majority filter within segments; an isolated disagreeing second
/// takes its neighbours' room when they agree.
RoomSequence median_filter(const RoomSequence& seq);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 below two values
  int count = 0;
};

Stat stat_of(const std::vector<double>& values);

struct PairSummary {
  int a = 0, b = 0;
  Stat duration;
};

struct Summary {
  Stat daily_transitions;  // over subject-days
  std::vector<PairSummary> pairs;
};

struct PairOffset {
  int a = 0, b = 0;
  std::optional<double> offset;  // absent when either side saw no transition
};

struct Report {
  Summary truth;
  Summary predicted;
  double transition_offset = 0.0;
  std::vector<PairOffset> pair_offsets;
  std::optional<double> duration_offset;  // mean over pairs present on both sides
  std::vector<RoomSequence> truth_sequences, predicted_sequences;
  std::vector<std::pair<int, int>> pair_ids;
  int hub = 0;
};

struct ReportOptions {
  int hub = 0;
  std::vector<std::pair<int, int>> pairs;
  const Adjacency* adjacency = nullptr;
  bool smooth = false;
};

/// The kitchen-living, kitchen-dining and dining-living pairs of a vocabulary.
std::vector<std::pair<int, int>> default_pairs(const data::RoomVocabulary& vocab);

Summary summarize(const std::vector<RoomSequence>& seqs, const ReportOptions& opt);

/// Sequences are matched by (subject, day); a key present on one side only
/// throws ReportError naming the missing keys.
Report mobility_report(std::vector<RoomSequence> predicted, std::vector<RoomSequence> truth,
                       const ReportOptions& opt);

nlohmann::json to_json(const Report& r, const data::RoomVocabulary& vocab);
std::string to_csv(const Report& r, const data::RoomVocabulary& vocab);
/// metric,subject,day,value rows, one per subject-day count and per duration.
std::string to_long_csv(const Report& r, const data::RoomVocabulary& vocab);

/// Labeled frames of each stream as a room sequence (unlabeled seconds dropped).
std::vector<RoomSequence> sequences_of(const std::vector<data::Stream>& streams);

}  // namespace dcmn::mobility
