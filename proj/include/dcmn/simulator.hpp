#pragma once

// Synthetic smart-home recordings: a semi-Markov walk over a floorplan,
// log-distance RSSI with Gaussian shadowing at each access point, and
// per-second accelerometer energy features with room-specific activity,
// gait bursts and tremor.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcmn/dataio.hpp"
#include "dcmn/types.hpp"

namespace dcmn::sim {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  Point center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
};

struct Doorway {
  int a = 0;
  int b = 0;
  Point at;
};

struct Floorplan {
  data::RoomVocabulary rooms;
  std::vector<Rect> areas;       // one per room
  std::vector<Doorway> doorways;  // undirected adjacency with a crossing point
  std::vector<Point> access_points;
  int hub = 0;

  Point center(int room) const { return areas.at(static_cast<std::size_t>(room)).center(); }
  bool adjacent(int a, int b) const;
  const Doorway* doorway(int a, int b) const;
  bool connected() const;
  /// Shortest room path from a to b inclusive; ties favour lower room ids.
  std::vector<int> route(int a, int b) const;
  /// Consecutive-room pairs that are neither equal nor adjacent.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> forbidden_transitions() const;
  void validate() const;
};

/// Six ground-floor rooms around a hallway hub, ten access points. The
/// coordinates are plausible placeholders, not a surveyed home.
Floorplan default_floorplan();

struct ActivitySignature {
  double amplitude_g = 0.0;
  double frequency_hz = 1.0;  // integer frequencies in [1, 9] keep the energy exact
};

struct MobilityProfile {
  std::vector<double> mean_dwell_s;  // per room
  double walk_speed_mps = 1.2;
  double tremor_amplitude_g = 0.0;
  std::vector<ActivitySignature> activity;  // per room
  double activity_variability = 0.3;        // per-second intensity ~ U(1-v, 1+v)
  double accel_noise_g = 0.03;
  double gait_amplitude_g = 0.35;
  /// Per-day spread of watch placement: gravity direction jitter and a
  /// log-normal gain on activity amplitude. 0 wears the watch identically.
  double wear_variability = 0.0;
  /// Tremor on the left wrist is scaled by (1 - asymmetry); the right wrist
  /// is the more affected side.
  double tremor_asymmetry = 0.0;

  void validate(int rooms) const;
};

MobilityProfile healthy_profile(const Floorplan& fp);
/// Tremor 0.3 g, walk speed 0.5 m/s and longer dwells.
MobilityProfile parkinsons_profile(const Floorplan& fp);

struct Trajectory {
  std::vector<int> rooms;  // per second
  std::vector<Point> positions;
  std::vector<bool> in_transit;
  std::size_t size() const { return rooms.size(); }
};

Trajectory simulate_trajectory(const Floorplan& fp, const MobilityProfile& profile, int duration_s,
                               std::uint64_t seed);

struct RadioParams {
  double tx_power_db = -40.0;  // at 1 m
  double path_loss_exponent = 2.5;
  double shadowing_sigma_db = 4.0;
  double dropout_prob = 0.05;
  double wearable_offset_m = 0.2;  // left/right wrist offset from the body position
  void validate() const;
};

/// Expected RSSI in dB at distance `distance_m` (floored at 0.1 m), no noise.
double path_loss_rssi(double distance_m, const RadioParams& radio);

/// Per-second 20-vectors (left AP1..AP10, right AP1..AP10); NaN marks a dropped reading.
std::vector<Vector> synthesize_rssi(const Trajectory& traj, const Floorplan& fp,
                                    const RadioParams& radio, std::uint64_t seed);

/// Per-second 6-vectors of RMS acceleration (left x,y,z, right x,y,z) over 20 sub-samples.
std::vector<Vector> synthesize_accel(const Trajectory& traj, const MobilityProfile& profile,
                                     std::uint64_t seed);

/// RMS feature for a noiseless, tremor-free second of dwelling in `room`.
double signature_energy(const MobilityProfile& profile, int room, int feature);

struct SubjectSpec {
  std::string id;
  MobilityProfile profile;
};

struct SimConfig {
  Floorplan floorplan;
  RadioParams radio;
  std::vector<SubjectSpec> subjects;
  int days = 3;
  int duration_s = 7200;
  double start_timestamp = 1600000000.0;
  std::uint64_t seed = 7;
};

/// 4 healthy (HC01..HC04) and 4 Parkinson's-like (PD01..PD04) subjects, 3 days x 2 h.
SimConfig default_sim_config();

/// Throws ConfigError naming the offending field path.
SimConfig parse_sim_config(const nlohmann::json& j);
nlohmann::json to_json(const SimConfig& cfg);

std::vector<data::Stream> make_streams(const SimConfig& cfg, int jobs = 1);
void make_dataset(const SimConfig& cfg, const std::filesystem::path& out, int jobs = 1);

}  // namespace dcmn::sim
