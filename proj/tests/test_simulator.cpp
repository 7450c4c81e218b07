#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dcmn/simulator.hpp"

using namespace dcmn;
using namespace dcmn::sim;

namespace {

int transitions(const std::vector<int>& rooms) {
  int n = 0;
  for (std::size_t t = 1; t < rooms.size(); ++t) n += rooms[t] != rooms[t - 1];
  return n;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("dcmn_sim_" + name);
}

}  // namespace

TEST_CASE("default floorplan") {
  const auto fp = default_floorplan();
  CHECK(fp.rooms.size() == 6);
  CHECK(fp.access_points.size() == 10);
  const int hall = fp.rooms.id("hallway");
  CHECK(fp.hub == hall);
  for (const char* r : {"kitchen", "living_room", "dining_room"}) CHECK(fp.adjacent(hall, fp.rooms.id(r)));
  CHECK(fp.connected());
  CHECK_NOTHROW(fp.validate());
  CHECK_FALSE(fp.adjacent(fp.rooms.id("kitchen"), fp.rooms.id("porch")));
  const auto forbidden = fp.forbidden_transitions();
  CHECK(forbidden(fp.rooms.id("kitchen"), fp.rooms.id("porch")));
  CHECK_FALSE(forbidden(hall, fp.rooms.id("porch")));
  CHECK_FALSE(forbidden(hall, hall));
  // every door sits on the boundary of both rooms it joins
  for (const auto& d : fp.doorways)
    for (int r : {d.a, d.b}) {
      const auto& a = fp.areas[static_cast<std::size_t>(r)];
      CHECK(d.at.x >= a.x0);
      CHECK(d.at.x <= a.x1);
      CHECK(d.at.y >= a.y0);
      CHECK(d.at.y <= a.y1);
    }
}

TEST_CASE("route goes through the hub") {
  const auto fp = default_floorplan();
  const auto r = fp.route(fp.rooms.id("kitchen"), fp.rooms.id("porch"));
  REQUIRE(r.size() == 3);
  CHECK(r[1] == fp.hub);
}

TEST_CASE("trajectory limits") {
  const auto fp = default_floorplan();
  SUBCASE("fast walker crosses in one second") {
    auto p = healthy_profile(fp);
    p.walk_speed_mps = 1e9;
    const auto tr = simulate_trajectory(fp, p, 5000, 3);
    for (std::size_t t = 0; t < tr.size(); ++t)
      if (tr.in_transit[t]) {
        CHECK_FALSE(tr.in_transit[t - 1]);
        if (t + 1 < tr.size()) CHECK_FALSE(tr.in_transit[t + 1]);
      }
  }
  SUBCASE("huge dwell stays put") {
    auto p = healthy_profile(fp);
    for (auto& d : p.mean_dwell_s) d = 1e12;
    const auto tr = simulate_trajectory(fp, p, 3600, 4);
    CHECK(transitions(tr.rooms) == 0);
    CHECK(tr.rooms.front() != fp.hub);
  }
  SUBCASE("deterministic and adjacent-only") {
    const auto p = parkinsons_profile(fp);
    const auto a = simulate_trajectory(fp, p, 7200, 11);
    const auto b = simulate_trajectory(fp, p, 7200, 11);
    CHECK(a.rooms == b.rooms);
    CHECK(a.size() == 7200);
    CHECK(transitions(a.rooms) > 0);
    for (std::size_t t = 1; t < a.size(); ++t)
      if (a.rooms[t] != a.rooms[t - 1]) CHECK(fp.adjacent(a.rooms[t], a.rooms[t - 1]));
    for (std::size_t t = 0; t < a.size(); ++t) {
      const auto& area = fp.areas[static_cast<std::size_t>(a.rooms[t])];
      CHECK(a.positions[t].x >= area.x0);
      CHECK(a.positions[t].x <= area.x1);
      CHECK(a.positions[t].y >= area.y0);
      CHECK(a.positions[t].y <= area.y1);
    }
  }
  SUBCASE("slow walkers spend longer in transit") {
    auto fast = healthy_profile(fp);
    auto slow = fast;
    slow.walk_speed_mps = 0.3;
    auto in_transit = [&](const MobilityProfile& p) {
      const auto tr = simulate_trajectory(fp, p, 20000, 5);
      double k = 0;
      for (bool b : tr.in_transit) k += b;
      return k / std::max(1, transitions(tr.rooms));
    };
    CHECK(in_transit(slow) > in_transit(fast));
  }
  CHECK_THROWS_AS(simulate_trajectory(fp, healthy_profile(fp), 0, 1), ConfigError);
}

TEST_CASE("path loss") {
  RadioParams r;
  r.shadowing_sigma_db = 0;
  CHECK(path_loss_rssi(1.0, r) == doctest::Approx(-40.0).epsilon(1e-15));
  r.path_loss_exponent = 2.0;
  CHECK(path_loss_rssi(10.0, r) == doctest::Approx(-60.0).epsilon(1e-12));
  CHECK(path_loss_rssi(0.0, r) == path_loss_rssi(0.1, r));
  for (double d = 0.2; d < 30; d *= 1.3) CHECK(path_loss_rssi(d, r) > path_loss_rssi(d * 1.01, r));
}

TEST_CASE("synthesized rssi") {
  auto fp = default_floorplan();
  Trajectory tr;
  tr.rooms = {0, 0};
  tr.in_transit = {false, false};
  // wrist exactly 1 m away from AP 0 on both sides
  fp.access_points[0] = {5.0, 5.0};
  tr.positions = {{5.0, 6.0}, {5.0, 6.0}};
  RadioParams r;
  r.shadowing_sigma_db = 0;
  r.dropout_prob = 0;
  r.wearable_offset_m = 0;
  const auto clean = synthesize_rssi(tr, fp, r, 1);
  REQUIRE(clean.size() == 2);
  CHECK(clean[0].size() == 20);
  CHECK(clean[0][0] == doctest::Approx(-40.0).epsilon(1e-15));
  CHECK(clean[0][10] == doctest::Approx(-40.0).epsilon(1e-15));
  // closer AP -> higher reading
  for (int i = 1; i < 10; ++i) {
    for (int j = 1; j < 10; ++j) {
      const double di = std::hypot(fp.access_points[i].x - 5.0, fp.access_points[i].y - 6.0);
      const double dj = std::hypot(fp.access_points[j].x - 5.0, fp.access_points[j].y - 6.0);
      if (di < dj - 1e-9 && dj > 0.1) CHECK(clean[0][i] > clean[0][j]);
    }
  }
  r.dropout_prob = 1;
  for (const auto& v : synthesize_rssi(tr, fp, r, 1)) CHECK(v.array().isNaN().all());
  r.dropout_prob = 0;
  r.tx_power_db = -200;
  for (const auto& v : synthesize_rssi(tr, fp, r, 1)) CHECK((v.array() >= -120.0).all());
}

TEST_CASE("synthesized accelerometer") {
  const auto fp = default_floorplan();
  auto p = healthy_profile(fp);
  p.accel_noise_g = 0;
  p.activity_variability = 0;
  p.wear_variability = 0;
  const auto tr = simulate_trajectory(fp, p, 3000, 21);
  const auto acc = synthesize_accel(tr, p, 22);
  REQUIRE(acc.size() == tr.size());

  SUBCASE("noiseless dwell matches the signature energy") {
    for (std::size_t t = 0; t < tr.size(); ++t) {
      if (tr.in_transit[t]) continue;
      for (int f = 0; f < 6; ++f) CHECK(acc[t][f] == doctest::Approx(signature_energy(p, tr.rooms[t], f)).epsilon(1e-12));
    }
  }
  SUBCASE("nearest signature recovers the room") {
    int right = 0, total = 0;
    for (std::size_t t = 0; t < tr.size(); ++t) {
      if (tr.in_transit[t]) continue;
      int best = -1;
      double best_d = 1e300;
      for (int r = 0; r < fp.rooms.size(); ++r) {
        double d = 0;
        for (int f = 0; f < 6; ++f) d += std::pow(acc[t][f] - signature_energy(p, r, f), 2);
        if (d < best_d) best_d = d, best = r;
      }
      right += best == tr.rooms[t];
      ++total;
    }
    REQUIRE(total > 100);
    CHECK(static_cast<double>(right) / total > 0.99);
  }
  SUBCASE("tremor raises feature variance") {
    auto shaky = p;
    shaky.tremor_amplitude_g = 0.5;
    const auto acc2 = synthesize_accel(tr, shaky, 22);
    auto variance = [](const std::vector<Vector>& v) {
      double s = 0, s2 = 0;
      for (const auto& x : v) s += x[0], s2 += x[0] * x[0];
      const double m = s / v.size();
      return s2 / v.size() - m * m;
    };
    CHECK(variance(acc2) > variance(acc));
  }
  SUBCASE("fully asymmetric tremor leaves the left wrist alone") {
    auto shaky = p;
    shaky.tremor_amplitude_g = 0.5;
    shaky.tremor_asymmetry = 1.0;
    const auto acc2 = synthesize_accel(tr, shaky, 22);
    double left = 0, right = 0;
    for (std::size_t t = 0; t < tr.size(); ++t) {
      left = std::max(left, (acc2[t].head(3) - acc[t].head(3)).cwiseAbs().maxCoeff());
      right = std::max(right, (acc2[t].tail(3) - acc[t].tail(3)).cwiseAbs().maxCoeff());
    }
    CHECK(left == 0.0);
    CHECK(right > 0.01);
  }
  SUBCASE("watch placement is fixed within a day and varies between days") {
    auto worn = p;
    worn.wear_variability = 0.5;
    const auto day1 = synthesize_accel(tr, worn, 23);
    const auto day2 = synthesize_accel(tr, worn, 24);
    std::map<int, Vector> first;
    bool stable = true, differs = false;
    for (std::size_t t = 0; t < tr.size(); ++t) {
      if (tr.in_transit[t]) continue;
      auto [it, fresh] = first.emplace(tr.rooms[t], day1[t]);
      if (!fresh) stable = stable && (it->second - day1[t]).cwiseAbs().maxCoeff() < 1e-12;
      differs = differs || (day1[t] - day2[t]).cwiseAbs().maxCoeff() > 1e-3;
    }
    CHECK(stable);
    CHECK(differs);
  }
}

TEST_CASE("dataset generation") {
  auto cfg = default_sim_config();
  cfg.subjects = {cfg.subjects[0], cfg.subjects[4]};
  cfg.days = 1;
  cfg.duration_s = 3600;
  const auto path = temp_path("a.csv");
  make_dataset(cfg, path, 1);
  const auto streams = data::load_recordings(path, cfg.floorplan.rooms);
  std::size_t frames = 0;
  for (const auto& s : streams) {
    frames += s.frames.size();
    for (const auto& f : s.frames) CHECK(f.room.has_value());
  }
  CHECK(frames == 7200);
  CHECK(streams.size() == 2);

  SUBCASE("byte-identical across runs and job counts") {
    const auto again = temp_path("b.csv");
    make_dataset(cfg, again, 2);
    CHECK(slurp(path) == slurp(again));
    std::filesystem::remove(again);
  }
  SUBCASE("mobile subjects change rooms more often") {
    auto mobile = cfg;
    mobile.subjects = {cfg.subjects[0], cfg.subjects[0]};
    mobile.subjects[1].id = "HC09";
    for (auto& d : mobile.subjects[0].profile.mean_dwell_s) d = 20;
    for (auto& d : mobile.subjects[1].profile.mean_dwell_s) d = 600;
    const auto ss = make_streams(mobile);
    auto count = [](const data::Stream& s) {
      std::vector<int> rooms;
      for (const auto& f : s.frames) rooms.push_back(*f.room);
      return transitions(rooms);
    };
    CHECK(count(ss[0]) > count(ss[1]));
  }
  SUBCASE("timestamps") {
    CHECK(streams[0].frames[0].timestamp == doctest::Approx(1600000000.0));
    CHECK(streams[0].frames[1].timestamp - streams[0].frames[0].timestamp == doctest::Approx(1.0));
  }
  std::filesystem::remove(path);
}

TEST_CASE("config parsing") {
  const auto cfg = default_sim_config();
  const auto round = parse_sim_config(to_json(cfg));
  CHECK(to_json(round) == to_json(cfg));
  CHECK(round.subjects.size() == 8);

  auto expect_field = [](nlohmann::json j, const std::string& field) {
    try {
      parse_sim_config(j);
      FAIL("expected ConfigError for " << field);
    } catch (const ConfigError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(field) != std::string::npos, e.what());
    }
  };
  auto j = to_json(cfg);
  j["subjects"][2]["walk_speed_mps"] = -1;
  expect_field(j, "subjects[2].walk_speed_mps");
  j = to_json(cfg);
  j["subjects"][1]["preset"] = "XX";
  expect_field(j, "subjects[1].preset");
  j = to_json(cfg);
  j["radio"]["path_loss_exponent"] = "big";
  expect_field(j, "radio.path_loss_exponent");
  j = to_json(cfg);
  j["floorplan"]["doorways"][0]["a"] = "attic";
  expect_field(j, "floorplan.doorways[0].a");
  j = to_json(cfg);
  j["floorplan"]["access_points"].erase(0);
  expect_field(j, "floorplan.access_points");
  j = to_json(cfg);
  j["days"] = 0;
  expect_field(j, "days");
  j = to_json(cfg);
  j["subjects"][0]["mean_dwell_s"]["attic"] = 3;
  expect_field(j, "subjects[0].mean_dwell_s.attic");

  const auto minimal = parse_sim_config(nlohmann::json{{"seed", 3}, {"days", 1}});
  CHECK(minimal.seed == 3);
  CHECK(minimal.subjects.size() == 8);
}
