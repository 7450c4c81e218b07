#include "dcmn/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numbers>
#include <queue>
#include <random>

#include "dcmn/seed.hpp"

namespace dcmn::sim {

namespace {

constexpr int kSubSamples = 20;  // raw wearable rate, Hz
constexpr double kTremorHz = 5.0;
constexpr double kGaitHz = 2.0;
constexpr double kWalkMargin = 0.3;
constexpr double kWalkStep = 0.25;
constexpr std::array<double, 3> kAxisWeight = {1.0, 0.6, 0.35};
constexpr std::array<double, 2> kHandWeight = {0.7, 1.0};
constexpr std::array<std::array<double, 3>, 2> kGravity = {{{0.1, 0.3, 0.95}, {-0.1, -0.3, 0.95}}};

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

Point lerp(Point a, Point b, double f) { return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f}; }

struct Leg {
  int room;
  Point from, to;
  double length;
};

// Polyline from the centre of route.front() to the centre of route.back(),
// split into legs owned by the room they cross.
std::vector<Leg> route_legs(const Floorplan& fp, const std::vector<int>& route) {
  std::vector<Leg> legs;
  auto push = [&](int room, Point a, Point b) {
    if (!legs.empty() && legs.back().room == room) {
      legs.back().to = b;
      legs.back().length += dist(a, b);
      return;
    }
    legs.push_back({room, a, b, dist(a, b)});
  };
  for (std::size_t i = 0; i + 1 < route.size(); ++i) {
    const Point door = fp.doorway(route[i], route[i + 1])->at;
    push(route[i], fp.center(route[i]), door);
    push(route[i + 1], door, fp.center(route[i + 1]));
  }
  return legs;
}

Point point_at(const std::vector<Leg>& legs, double s, int* room) {
  for (const auto& leg : legs) {
    if (s <= leg.length || &leg == &legs.back()) {
      *room = leg.room;
      return leg.length > 0 ? lerp(leg.from, leg.to, std::clamp(s / leg.length, 0.0, 1.0)) : leg.from;
    }
    s -= leg.length;
  }
  *room = legs.back().room;
  return legs.back().to;
}

// Arc-length positions for the transit seconds. Every intermediate room on the
// route receives at least one second so consecutive labels stay adjacent.
std::vector<double> transit_positions(const std::vector<Leg>& legs, double speed) {
  double total = 0.0;
  for (const auto& l : legs) total += l.length;
  const int n = std::max(1, static_cast<int>(std::ceil(total / speed)));
  std::vector<double> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = total * (i + 1) / (n + 1);

  std::vector<double> leg_start(legs.size(), 0.0);
  for (std::size_t i = 1; i < legs.size(); ++i) leg_start[i] = leg_start[i - 1] + legs[i - 1].length;
  auto leg_of = [&](double x) {
    std::size_t k = 0;
    while (k + 1 < legs.size() && x > leg_start[k] + legs[k].length) ++k;
    return k;
  };
  for (std::size_t k = 1; k + 1 < legs.size(); ++k) {
    std::vector<std::size_t> counts(legs.size(), 0);
    for (double x : s) ++counts[leg_of(x)];
    if (counts[k] > 0) continue;
    const double mid = leg_start[k] + legs[k].length / 2;
    // move the nearest sample that is not the only one in another intermediate leg
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto owner = leg_of(s[i]);
      const bool sole_intermediate = owner > 0 && owner + 1 < legs.size() && counts[owner] == 1;
      if (sole_intermediate) continue;
      if (!best || std::abs(s[i] - mid) < std::abs(s[*best] - mid)) best = i;
    }
    if (best)
      s[*best] = mid;
    else
      s.push_back(mid);
    std::sort(s.begin(), s.end());
  }
  return s;
}

Point clamp_to(const Rect& r, Point p) {
  const double mx = std::min(kWalkMargin, (r.x1 - r.x0) / 2);
  const double my = std::min(kWalkMargin, (r.y1 - r.y0) / 2);
  return {std::clamp(p.x, r.x0 + mx, r.x1 - mx), std::clamp(p.y, r.y0 + my, r.y1 - my)};
}

double number(const nlohmann::json& j, const std::string& key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path + key + ": expected a number");
  return v.get<double>();
}

Point parse_point(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(path + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

bool Floorplan::adjacent(int a, int b) const { return doorway(a, b) != nullptr; }

const Doorway* Floorplan::doorway(int a, int b) const {
  for (const auto& d : doorways)
    if ((d.a == a && d.b == b) || (d.a == b && d.b == a)) return &d;
  return nullptr;
}

std::vector<int> Floorplan::route(int a, int b) const {
  const int n = rooms.size();
  std::vector<int> prev(static_cast<std::size_t>(n), -1);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<int> q;
  q.push(a);
  seen[static_cast<std::size_t>(a)] = true;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    if (u == b) break;
    for (int v = 0; v < n; ++v)
      if (!seen[static_cast<std::size_t>(v)] && adjacent(u, v)) {
        seen[static_cast<std::size_t>(v)] = true;
        prev[static_cast<std::size_t>(v)] = u;
        q.push(v);
      }
  }
  if (!seen[static_cast<std::size_t>(b)]) throw DomainError("floorplan: rooms are not connected");
  std::vector<int> path{b};
  while (path.back() != a) path.push_back(prev[static_cast<std::size_t>(path.back())]);
  std::reverse(path.begin(), path.end());
  return path;
}

bool Floorplan::connected() const {
  for (int r = 1; r < rooms.size(); ++r) {
    try {
      route(0, r);
    } catch (const DomainError&) {
      return false;
    }
  }
  return true;
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> Floorplan::forbidden_transitions() const {
  const int n = rooms.size();
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = i != j && !adjacent(i, j);
  return m;
}

void Floorplan::validate() const {
  if (rooms.size() < 1) throw ConfigError("floorplan.rooms: need at least one room");
  if (static_cast<int>(areas.size()) != rooms.size())
    throw ConfigError("floorplan.rooms: every room needs an area");
  for (std::size_t i = 0; i < areas.size(); ++i)
    if (!(areas[i].x1 > areas[i].x0 && areas[i].y1 > areas[i].y0))
      throw ConfigError("floorplan.rooms[" + std::to_string(i) + "]: empty rectangle");
  for (std::size_t i = 0; i < doorways.size(); ++i) {
    const auto& d = doorways[i];
    if (d.a < 0 || d.b < 0 || d.a >= rooms.size() || d.b >= rooms.size() || d.a == d.b)
      throw ConfigError("floorplan.doorways[" + std::to_string(i) + "]: invalid room pair");
  }
  if (access_points.size() != 10)
    throw ConfigError("floorplan.access_points: expected 10 access points, got " +
                      std::to_string(access_points.size()));
  if (hub < 0 || hub >= rooms.size()) throw ConfigError("floorplan.hub: unknown room");
  if (!connected()) throw ConfigError("floorplan.doorways: adjacency graph is not connected");
}

Floorplan default_floorplan() {
  Floorplan fp;
  fp.rooms = data::RoomVocabulary::standard();
  const int kitchen = 0, living = 1, dining = 2, hallway = 3, stairs = 4, porch = 5;
  fp.areas = {
      {0, 4, 5, 8},     // kitchen
      {7, 3, 12, 8},    // living room
      {0, 0, 5, 4},     // dining room
      {5, 1.5, 7, 8},   // hallway
      {7, 0, 12, 3},    // stairs
      {5, 0, 7, 1.5},   // porch
  };
  fp.doorways = {
      {hallway, kitchen, {5, 6.5}}, {hallway, living, {7, 5.5}}, {hallway, dining, {5, 2.5}},
      {hallway, stairs, {7, 2.25}}, {hallway, porch, {6, 1.5}},
  };
  fp.access_points = {{1, 7}, {4, 5}, {8, 7}, {11, 4}, {1, 1}, {4, 3}, {6, 7}, {6, 3}, {10, 1}, {6, 0.3}};
  fp.hub = hallway;
  return fp;
}

void MobilityProfile::validate(int rooms) const {
  if (static_cast<int>(mean_dwell_s.size()) != rooms)
    throw ConfigError("mean_dwell_s: expected one entry per room");
  for (double d : mean_dwell_s)
    if (!(d > 0)) throw ConfigError("mean_dwell_s: dwell must be > 0");
  if (!(walk_speed_mps > 0)) throw ConfigError("walk_speed_mps: must be > 0");
  if (!(tremor_amplitude_g >= 0)) throw ConfigError("tremor_amplitude_g: must be >= 0");
  if (static_cast<int>(activity.size()) != rooms)
    throw ConfigError("activity: expected one signature per room");
  for (const auto& a : activity)
    if (!(a.amplitude_g >= 0) || !(a.frequency_hz > 0 && a.frequency_hz < kSubSamples / 2.0))
      throw ConfigError("activity: amplitude must be >= 0 and frequency in (0, 10) Hz");
  if (!(activity_variability >= 0 && activity_variability < 1))
    throw ConfigError("activity_variability: must lie in [0, 1)");
  if (!(accel_noise_g >= 0)) throw ConfigError("accel_noise_g: must be >= 0");
  if (!(gait_amplitude_g >= 0)) throw ConfigError("gait_amplitude_g: must be >= 0");
  if (!(wear_variability >= 0)) throw ConfigError("wear_variability: must be >= 0");
  if (!(tremor_asymmetry >= 0 && tremor_asymmetry <= 1)) throw ConfigError("tremor_asymmetry: must lie in [0, 1]");
}

MobilityProfile healthy_profile(const Floorplan& fp) {
  MobilityProfile p;
  const auto& rooms = fp.rooms;
  p.mean_dwell_s.assign(static_cast<std::size_t>(rooms.size()), 120.0);
  p.activity.assign(static_cast<std::size_t>(rooms.size()), {0.1, 2.0});
  auto set = [&](const char* name, double dwell, ActivitySignature sig) {
    if (auto id = rooms.find(name)) {
      p.mean_dwell_s[static_cast<std::size_t>(*id)] = dwell;
      p.activity[static_cast<std::size_t>(*id)] = sig;
    }
  };
  set("kitchen", 240, {0.30, 3});
  set("living_room", 420, {0.05, 1});
  set("dining_room", 240, {0.15, 2});
  set("hallway", 20, {0.25, 2});
  set("stairs", 45, {0.45, 2});
  set("porch", 60, {0.20, 3});
  p.walk_speed_mps = 1.2;
  p.tremor_amplitude_g = 0.0;
  p.wear_variability = 0.7;
  return p;
}

MobilityProfile parkinsons_profile(const Floorplan& fp) {
  MobilityProfile p = healthy_profile(fp);
  for (auto& d : p.mean_dwell_s) d *= 1.5;
  p.walk_speed_mps = 0.5;
  p.tremor_amplitude_g = 0.3;
  return p;
}

Trajectory simulate_trajectory(const Floorplan& fp, const MobilityProfile& profile, int duration_s,
                               std::uint64_t seed) {
  if (duration_s < 1) throw ConfigError("simulate_trajectory: duration must be >= 1");
  profile.validate(fp.rooms.size());
  std::mt19937_64 rng(seed);
  const int n = fp.rooms.size();
  Trajectory traj;
  traj.rooms.reserve(static_cast<std::size_t>(duration_s));
  auto emit = [&](int room, Point p, bool transit) {
    if (static_cast<int>(traj.size()) >= duration_s) return;
    traj.rooms.push_back(room);
    traj.positions.push_back(p);
    traj.in_transit.push_back(transit);
  };

  std::vector<int> starts;
  for (int r = 0; r < n; ++r)
    if (r != fp.hub || n == 1) starts.push_back(r);
  int room = starts[std::uniform_int_distribution<std::size_t>(0, starts.size() - 1)(rng)];
  std::normal_distribution<double> step(0.0, kWalkStep);
  while (static_cast<int>(traj.size()) < duration_s) {
    const double mean = profile.mean_dwell_s[static_cast<std::size_t>(room)];
    const double drawn = std::exponential_distribution<double>(1.0 / mean)(rng);
    const double remaining = duration_s - static_cast<double>(traj.size());
    const int dwell = static_cast<int>(std::min(remaining, std::max(1.0, std::round(drawn))));
    const Rect& area = fp.areas[static_cast<std::size_t>(room)];
    Point p = clamp_to(area, fp.center(room));
    for (int s = 0; s < dwell; ++s) {
      emit(room, p, false);
      p = clamp_to(area, {p.x + step(rng), p.y + step(rng)});
    }
    if (static_cast<int>(traj.size()) >= duration_s || n == 1) break;

    std::vector<int> neighbours;
    for (int r = 0; r < n; ++r)
      if (fp.adjacent(room, r)) neighbours.push_back(r);
    if (neighbours.empty()) break;
    const int next = neighbours[std::uniform_int_distribution<std::size_t>(0, neighbours.size() - 1)(rng)];
    const auto legs = route_legs(fp, fp.route(room, next));
    for (double s : transit_positions(legs, profile.walk_speed_mps)) {
      int leg_room = room;
      const Point q = point_at(legs, s, &leg_room);
      emit(leg_room, q, true);
    }
    room = next;
  }
  // pad single-room floorplans
  while (static_cast<int>(traj.size()) < duration_s) emit(room, fp.center(room), false);
  return traj;
}

void RadioParams::validate() const {
  if (!(path_loss_exponent > 0)) throw ConfigError("radio.path_loss_exponent: must be > 0");
  if (!(shadowing_sigma_db >= 0)) throw ConfigError("radio.shadowing_sigma_db: must be >= 0");
  if (!(dropout_prob >= 0 && dropout_prob <= 1)) throw ConfigError("radio.dropout_prob: must lie in [0, 1]");
  if (!std::isfinite(tx_power_db)) throw ConfigError("radio.tx_power_db: must be finite");
  if (!(wearable_offset_m >= 0)) throw ConfigError("radio.wearable_offset_m: must be >= 0");
}

double path_loss_rssi(double distance_m, const RadioParams& radio) {
  const double d = std::max(distance_m, 0.1);
  return radio.tx_power_db - 10.0 * radio.path_loss_exponent * std::log10(d);
}

std::vector<Vector> synthesize_rssi(const Trajectory& traj, const Floorplan& fp,
                                    const RadioParams& radio, std::uint64_t seed) {
  radio.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> shadow(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int aps = static_cast<int>(fp.access_points.size());
  std::vector<Vector> out;
  out.reserve(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    Vector v(2 * aps);
    for (int w = 0; w < 2; ++w) {
      const Point wrist = {traj.positions[t].x + (w == 0 ? -1 : 1) * radio.wearable_offset_m,
                           traj.positions[t].y};
      for (int i = 0; i < aps; ++i) {
        // draw both variates unconditionally so the noise stream is config-independent
        const double z = shadow(rng);
        const double u = unit(rng);
        double rssi = path_loss_rssi(dist(wrist, fp.access_points[static_cast<std::size_t>(i)]), radio) +
                      radio.shadowing_sigma_db * z;
        rssi = std::max(rssi, data::kRssiFloorDb);
        v[w * aps + i] = u < radio.dropout_prob ? std::numeric_limits<double>::quiet_NaN() : rssi;
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

double signature_energy(const MobilityProfile& profile, int room, int feature) {
  const int w = feature / 3, axis = feature % 3;
  const double g = kGravity[static_cast<std::size_t>(w)][static_cast<std::size_t>(axis)];
  const double amp = profile.activity.at(static_cast<std::size_t>(room)).amplitude_g *
                     kHandWeight[static_cast<std::size_t>(w)] * kAxisWeight[static_cast<std::size_t>(axis)];
  return std::sqrt(g * g + amp * amp / 2.0);
}

std::vector<Vector> synthesize_accel(const Trajectory& traj, const MobilityProfile& profile,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> intensity(1.0 - profile.activity_variability,
                                                   1.0 + profile.activity_variability);
  std::uniform_real_distribution<double> tremor_level(0.5, 1.5);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double gait = profile.gait_amplitude_g * profile.walk_speed_mps / 1.2;

  // How the watch sits on each wrist today: a tilted gravity direction and a
  // gain on the activity amplitude.
  std::array<std::array<double, 3>, 2> gravity = kGravity;
  std::array<double, 2> gain{};
  for (int w = 0; w < 2; ++w) {
    auto& g = gravity[static_cast<std::size_t>(w)];
    double before = 0.0, after = 0.0;
    for (double& c : g) {
      before += c * c;
      c += profile.wear_variability * noise(rng);
      after += c * c;
    }
    for (double& c : g) c *= std::sqrt(before / after);
    gain[static_cast<std::size_t>(w)] = std::exp(profile.wear_variability * noise(rng));
  }

  std::vector<Vector> out;
  out.reserve(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const auto& sig = profile.activity.at(static_cast<std::size_t>(traj.rooms[t]));
    const bool walking = traj.in_transit[t];
    const double amp = walking ? gait : sig.amplitude_g * intensity(rng);
    const double freq = walking ? kGaitHz : sig.frequency_hz;
    const double tremor = profile.tremor_amplitude_g * tremor_level(rng);
    Vector v(6);
    for (int f = 0; f < 6; ++f) {
      const int w = f / 3, axis = f % 3;
      const double g = gravity[static_cast<std::size_t>(w)][static_cast<std::size_t>(axis)];
      const double a = amp * gain[static_cast<std::size_t>(w)] * kHandWeight[static_cast<std::size_t>(w)] * kAxisWeight[static_cast<std::size_t>(axis)];
      const double p1 = phase(rng), p2 = phase(rng);
      double energy = 0.0;
      for (int s = 0; s < kSubSamples; ++s) {
        const double tau = static_cast<double>(s) / kSubSamples;
        const double x = g + a * std::sin(2 * std::numbers::pi * freq * tau + p1) +
                         tremor * (w == 0 ? 1.0 - profile.tremor_asymmetry : 1.0) * std::sin(2 * std::numbers::pi * kTremorHz * tau + p2) +
                         profile.accel_noise_g * noise(rng);
        energy += x * x;
      }
      v[f] = std::sqrt(energy / kSubSamples);
    }
    out.push_back(std::move(v));
  }
  return out;
}

SimConfig default_sim_config() {
  SimConfig cfg;
  cfg.floorplan = default_floorplan();
  for (int i = 1; i <= 4; ++i) cfg.subjects.push_back({"HC0" + std::to_string(i), healthy_profile(cfg.floorplan)});
  for (int i = 1; i <= 4; ++i)
    cfg.subjects.push_back({"PD0" + std::to_string(i), parkinsons_profile(cfg.floorplan)});
  return cfg;
}

namespace {

Floorplan parse_floorplan(const nlohmann::json& j) {
  const std::string path = "floorplan.";
  Floorplan fp;
  if (!j.contains("rooms") || !j.at("rooms").is_array()) throw ConfigError(path + "rooms: expected an array");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < j.at("rooms").size(); ++i) {
    const auto& r = j.at("rooms")[i];
    const std::string rp = path + "rooms[" + std::to_string(i) + "].";
    if (!r.contains("name") || !r.at("name").is_string()) throw ConfigError(rp + "name: expected a string");
    names.push_back(r.at("name").get<std::string>());
    if (!r.contains("area") || !r.at("area").is_array() || r.at("area").size() != 4)
      throw ConfigError(rp + "area: expected [x0, y0, x1, y1]");
    const auto a = r.at("area").get<std::vector<double>>();
    fp.areas.push_back({a[0], a[1], a[2], a[3]});
  }
  try {
    fp.rooms = data::RoomVocabulary(names);
  } catch (const VocabularyError& e) {
    throw ConfigError(path + "rooms: " + e.what());
  }
  if (!j.contains("doorways") || !j.at("doorways").is_array())
    throw ConfigError(path + "doorways: expected an array");
  for (std::size_t i = 0; i < j.at("doorways").size(); ++i) {
    const auto& d = j.at("doorways")[i];
    const std::string dp = path + "doorways[" + std::to_string(i) + "]";
    auto room = [&](const char* key) {
      if (!d.contains(key) || !d.at(key).is_string()) throw ConfigError(dp + "." + key + ": expected a room name");
      const auto id = fp.rooms.find(d.at(key).get<std::string>());
      if (!id) throw ConfigError(dp + "." + key + ": unknown room '" + d.at(key).get<std::string>() + "'");
      return *id;
    };
    if (!d.contains("at")) throw ConfigError(dp + ".at: missing doorway point");
    fp.doorways.push_back({room("a"), room("b"), parse_point(d.at("at"), dp + ".at")});
  }
  if (!j.contains("access_points") || !j.at("access_points").is_array())
    throw ConfigError(path + "access_points: expected an array");
  for (std::size_t i = 0; i < j.at("access_points").size(); ++i)
    fp.access_points.push_back(parse_point(j.at("access_points")[i], path + "access_points[" + std::to_string(i) + "]"));
  const std::string hub = j.value("hub", std::string("hallway"));
  const auto hub_id = fp.rooms.find(hub);
  if (!hub_id) throw ConfigError(path + "hub: unknown room '" + hub + "'");
  fp.hub = *hub_id;
  fp.validate();
  return fp;
}

nlohmann::json floorplan_json(const Floorplan& fp) {
  nlohmann::json rooms = nlohmann::json::array();
  for (int i = 0; i < fp.rooms.size(); ++i) {
    const auto& a = fp.areas[static_cast<std::size_t>(i)];
    rooms.push_back({{"name", fp.rooms.name(i)}, {"area", {a.x0, a.y0, a.x1, a.y1}}});
  }
  nlohmann::json doors = nlohmann::json::array();
  for (const auto& d : fp.doorways)
    doors.push_back({{"a", fp.rooms.name(d.a)}, {"b", fp.rooms.name(d.b)}, {"at", {d.at.x, d.at.y}}});
  nlohmann::json aps = nlohmann::json::array();
  for (const auto& p : fp.access_points) aps.push_back({p.x, p.y});
  return {{"rooms", rooms}, {"doorways", doors}, {"access_points", aps}, {"hub", fp.rooms.name(fp.hub)}};
}

MobilityProfile parse_profile(const nlohmann::json& j, const Floorplan& fp, const std::string& path) {
  const std::string preset = j.value("preset", std::string("HC"));
  MobilityProfile p;
  if (preset == "HC")
    p = healthy_profile(fp);
  else if (preset == "PD")
    p = parkinsons_profile(fp);
  else
    throw ConfigError(path + "preset: expected \"HC\" or \"PD\", got \"" + preset + "\"");
  p.walk_speed_mps = number(j, "walk_speed_mps", path, p.walk_speed_mps);
  p.tremor_amplitude_g = number(j, "tremor_amplitude_g", path, p.tremor_amplitude_g);
  p.activity_variability = number(j, "activity_variability", path, p.activity_variability);
  p.accel_noise_g = number(j, "accel_noise_g", path, p.accel_noise_g);
  p.gait_amplitude_g = number(j, "gait_amplitude_g", path, p.gait_amplitude_g);
  p.wear_variability = number(j, "wear_variability", path, p.wear_variability);
  p.tremor_asymmetry = number(j, "tremor_asymmetry", path, p.tremor_asymmetry);
  const double scale = number(j, "dwell_scale", path, 1.0);
  if (!(scale > 0)) throw ConfigError(path + "dwell_scale: must be > 0");
  for (auto& d : p.mean_dwell_s) d *= scale;
  if (j.contains("mean_dwell_s")) {
    const auto& m = j.at("mean_dwell_s");
    if (!m.is_object()) throw ConfigError(path + "mean_dwell_s: expected {room: seconds}");
    for (auto it = m.begin(); it != m.end(); ++it) {
      const auto id = fp.rooms.find(it.key());
      if (!id) throw ConfigError(path + "mean_dwell_s." + it.key() + ": unknown room");
      if (!it.value().is_number()) throw ConfigError(path + "mean_dwell_s." + it.key() + ": expected a number");
      p.mean_dwell_s[static_cast<std::size_t>(*id)] = it.value().get<double>();
    }
  }
  if (j.contains("activity")) {
    const auto& m = j.at("activity");
    if (!m.is_object()) throw ConfigError(path + "activity: expected {room: {amplitude_g, frequency_hz}}");
    for (auto it = m.begin(); it != m.end(); ++it) {
      const auto id = fp.rooms.find(it.key());
      if (!id) throw ConfigError(path + "activity." + it.key() + ": unknown room");
      auto& sig = p.activity[static_cast<std::size_t>(*id)];
      const std::string ap = path + "activity." + it.key() + ".";
      sig.amplitude_g = number(it.value(), "amplitude_g", ap, sig.amplitude_g);
      sig.frequency_hz = number(it.value(), "frequency_hz", ap, sig.frequency_hz);
    }
  }
  try {
    p.validate(fp.rooms.size());
  } catch (const ConfigError& e) {
    throw ConfigError(path + e.what());
  }
  return p;
}

}  // namespace

SimConfig parse_sim_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  SimConfig cfg;
  cfg.floorplan = j.contains("floorplan") ? parse_floorplan(j.at("floorplan")) : default_floorplan();
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      throw ConfigError("seed: expected a non-negative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  const double days = number(j, "days", "", cfg.days);
  const double duration = number(j, "duration_s", "", cfg.duration_s);
  if (days < 1 || days != std::floor(days)) throw ConfigError("days: expected an integer >= 1");
  if (duration < 1 || duration != std::floor(duration)) throw ConfigError("duration_s: expected an integer >= 1");
  cfg.days = static_cast<int>(days);
  cfg.duration_s = static_cast<int>(duration);
  cfg.start_timestamp = number(j, "start_timestamp", "", cfg.start_timestamp);
  if (j.contains("radio")) {
    const auto& r = j.at("radio");
    if (!r.is_object()) throw ConfigError("radio: expected an object");
    cfg.radio.tx_power_db = number(r, "tx_power_db", "radio.", cfg.radio.tx_power_db);
    cfg.radio.path_loss_exponent = number(r, "path_loss_exponent", "radio.", cfg.radio.path_loss_exponent);
    cfg.radio.shadowing_sigma_db = number(r, "shadowing_sigma_db", "radio.", cfg.radio.shadowing_sigma_db);
    cfg.radio.dropout_prob = number(r, "dropout_prob", "radio.", cfg.radio.dropout_prob);
    cfg.radio.wearable_offset_m = number(r, "wearable_offset_m", "radio.", cfg.radio.wearable_offset_m);
  }
  cfg.radio.validate();
  if (j.contains("subjects")) {
    const auto& s = j.at("subjects");
    if (!s.is_array() || s.empty()) throw ConfigError("subjects: expected a non-empty array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string path = "subjects[" + std::to_string(i) + "].";
      if (!s[i].is_object()) throw ConfigError(path.substr(0, path.size() - 1) + ": expected an object");
      if (!s[i].contains("id") || !s[i].at("id").is_string() || s[i].at("id").get<std::string>().empty())
        throw ConfigError(path + "id: expected a non-empty string");
      const auto id = s[i].at("id").get<std::string>();
      if (id.find(',') != std::string::npos) throw ConfigError(path + "id: may not contain ','");
      for (const auto& prior : cfg.subjects)
        if (prior.id == id) throw ConfigError(path + "id: duplicate subject '" + id + "'");
      cfg.subjects.push_back({id, parse_profile(s[i], cfg.floorplan, path)});
    }
  } else {
    cfg.subjects = default_sim_config().subjects;
    for (auto& sub : cfg.subjects)
      sub.profile = data::group_of(sub.id) == data::SubjectGroup::pd ? parkinsons_profile(cfg.floorplan)
                                                                      : healthy_profile(cfg.floorplan);
  }
  return cfg;
}

nlohmann::json to_json(const SimConfig& cfg) {
  nlohmann::json subjects = nlohmann::json::array();
  for (const auto& s : cfg.subjects) {
    nlohmann::json dwell, activity;
    for (int r = 0; r < cfg.floorplan.rooms.size(); ++r) {
      dwell[cfg.floorplan.rooms.name(r)] = s.profile.mean_dwell_s[static_cast<std::size_t>(r)];
      activity[cfg.floorplan.rooms.name(r)] = {
          {"amplitude_g", s.profile.activity[static_cast<std::size_t>(r)].amplitude_g},
          {"frequency_hz", s.profile.activity[static_cast<std::size_t>(r)].frequency_hz}};
    }
    subjects.push_back({{"id", s.id},
                        {"preset", data::group_of(s.id) == data::SubjectGroup::pd ? "PD" : "HC"},
                        {"walk_speed_mps", s.profile.walk_speed_mps},
                        {"tremor_amplitude_g", s.profile.tremor_amplitude_g},
                        {"activity_variability", s.profile.activity_variability},
                        {"accel_noise_g", s.profile.accel_noise_g},
                        {"gait_amplitude_g", s.profile.gait_amplitude_g},
                        {"wear_variability", s.profile.wear_variability},
                        {"tremor_asymmetry", s.profile.tremor_asymmetry},
                        {"mean_dwell_s", dwell},
                        {"activity", activity}});
  }
  return {{"seed", cfg.seed},
          {"days", cfg.days},
          {"duration_s", cfg.duration_s},
          {"start_timestamp", cfg.start_timestamp},
          {"radio",
           {{"tx_power_db", cfg.radio.tx_power_db},
            {"path_loss_exponent", cfg.radio.path_loss_exponent},
            {"shadowing_sigma_db", cfg.radio.shadowing_sigma_db},
            {"dropout_prob", cfg.radio.dropout_prob},
            {"wearable_offset_m", cfg.radio.wearable_offset_m}}},
          {"floorplan", floorplan_json(cfg.floorplan)},
          {"subjects", subjects}};
}

std::vector<data::Stream> make_streams(const SimConfig& cfg, int jobs) {
  if (cfg.subjects.empty()) throw ConfigError("subjects: need at least one subject");
  cfg.floorplan.validate();
  cfg.radio.validate();
  auto one = [&cfg](std::size_t s, int day) {
    const auto& subject = cfg.subjects[s];
    const std::uint64_t base = derive_seed(cfg.seed, {s, static_cast<std::uint64_t>(day)});
    const auto traj = simulate_trajectory(cfg.floorplan, subject.profile, cfg.duration_s, derive_seed(base, {1}));
    const auto rssi = synthesize_rssi(traj, cfg.floorplan, cfg.radio, derive_seed(base, {2}));
    const auto accel = synthesize_accel(traj, subject.profile, derive_seed(base, {3}));
    data::Stream st;
    st.subject_id = subject.id;
    st.day_index = day;
    st.frames.reserve(traj.size());
    for (std::size_t t = 0; t < traj.size(); ++t) {
      data::SensorFrame f;
      f.subject_id = subject.id;
      f.day_index = day;
      f.timestamp = cfg.start_timestamp + 86400.0 * day + static_cast<double>(t);
      // quantize to what a receiver would log
      f.rssi = rssi[t].unaryExpr([](double v) { return std::isnan(v) ? v : std::round(v * 100.0) / 100.0; });
      f.accel = accel[t].unaryExpr([](double v) { return std::round(v * 1e4) / 1e4; });
      f.room = traj.rooms[t];
      st.frames.push_back(std::move(f));
    }
    return st;
  };
  std::vector<std::pair<std::size_t, int>> tasks;
  for (std::size_t s = 0; s < cfg.subjects.size(); ++s)
    for (int d = 0; d < cfg.days; ++d) tasks.emplace_back(s, d);
  std::vector<data::Stream> out(tasks.size());
  const std::size_t workers = static_cast<std::size_t>(std::max(1, jobs));
  for (std::size_t begin = 0; begin < tasks.size(); begin += workers) {
    std::vector<std::future<data::Stream>> batch;
    for (std::size_t i = begin; i < std::min(tasks.size(), begin + workers); ++i)
      batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, one,
                                 tasks[i].first, tasks[i].second));
    for (std::size_t i = 0; i < batch.size(); ++i) out[begin + i] = batch[i].get();
  }
  std::stable_sort(out.begin(), out.end(), [](const data::Stream& a, const data::Stream& b) {
    return std::tie(a.subject_id, a.day_index) < std::tie(b.subject_id, b.day_index);
  });
  return out;
}

void make_dataset(const SimConfig& cfg, const std::filesystem::path& out, int jobs) {
  const auto streams = make_streams(cfg, jobs);
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write dataset to " + out.string());
  data::write_recordings(f, streams, cfg.floorplan.rooms);
  if (!f) throw std::runtime_error("write failed for " + out.string());
}

}  // namespace dcmn::sim
