#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "dcmn/mobility.hpp"
#include "dcmn/simulator.hpp"
#include "mobility_cases.hpp"

using namespace dcmn;
using namespace dcmn::mobility;

using namespace dcmn::testing;

namespace {

std::vector<double> kl(const RoomSequence& s) { return pair_transition_durations(s, K, L, H); }

}  // namespace

TEST_CASE("hand-constructed sequences") {
  const auto cases = mobility_cases();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    CAPTURE(i);
    const auto& c = cases[i];
    CHECK(count_daily_transitions(c.s) == c.transitions);
    CHECK(kl(c.s) == c.kitchen_living);
    CHECK(pair_transition_durations(c.s, K, D, H) == c.kitchen_dining);
    CHECK(pair_transition_durations(c.s, D, L, H) == c.dining_living);
    // every change event is consumed at most once per pair transition, and each needs two
    const auto pairs = c.kitchen_living.size() + c.kitchen_dining.size() + c.dining_living.size();
    CHECK(static_cast<std::size_t>(c.transitions) >= 2 * pairs);
  }
  CHECK(count_daily_transitions(seq({})) == 0);
}

TEST_CASE("pair argument checks") {
  const auto s = seq({K, H, L});
  CHECK_THROWS_AS(pair_transition_durations(s, K, K, H), DomainError);
  CHECK_THROWS_AS(pair_transition_durations(s, K, H, H), DomainError);
  const auto fp = sim::default_floorplan();
  const auto adj = fp.forbidden_transitions().unaryExpr([](bool f) { return !f; }).eval();
  CHECK_NOTHROW(pair_transition_durations(s, K, L, H, &adj));
  Adjacency cut = adj;
  cut(L, H) = cut(H, L) = false;
  CHECK_THROWS_AS(pair_transition_durations(s, K, L, H, &cut), DomainError);
}

TEST_CASE("properties on random walks") {
  const auto fp = sim::default_floorplan();
  auto profile = sim::healthy_profile(fp);
  for (auto& d : profile.mean_dwell_s) d = 5;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto traj = sim::simulate_trajectory(fp, profile, 600, seed);
    const auto s = seq(traj.rooms);
    // relabelling rooms leaves the count alone
    std::vector<int> perm = {0, 1, 2, 3, 4, 5};
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(seed));
    auto relabelled = s;
    for (auto& r : relabelled.rooms) r = perm[static_cast<std::size_t>(r)];
    CHECK(count_daily_transitions(relabelled) == count_daily_transitions(s));
    // reversal keeps the duration multiset
    auto reversed = s;
    std::reverse(reversed.rooms.begin(), reversed.rooms.end());
    for (const auto& [a, b] : default_pairs(fp.rooms)) {
      auto fwd = pair_transition_durations(s, a, b, fp.hub);
      auto bwd = pair_transition_durations(reversed, a, b, fp.hub);
      std::sort(fwd.begin(), fwd.end());
      std::sort(bwd.begin(), bwd.end());
      CHECK(fwd == bwd);
      for (double d : fwd) CHECK(d >= 2.0);
    }
  }
}

TEST_CASE("smoothing") {
  CHECK(median_filter(seq({K, L, K, K})).rooms == std::vector<int>{K, K, K, K});
  CHECK(median_filter(seq({K, L, H, K})).rooms == std::vector<int>{K, L, H, K});
  CHECK(median_filter(seq({K, L, K}, {0, 1, 5})).rooms == std::vector<int>{K, L, K});
}

TEST_CASE("report") {
  ReportOptions opt;
  opt.hub = H;
  opt.pairs = {{K, L}, {K, D}};
  const std::vector<RoomSequence> truth = {seq({K, H, L, H, K}, {}, "PD01", 0), seq({K, H, H, L}, {}, "PD01", 1)};
  const auto same = mobility_report(truth, truth, opt);
  CHECK(same.truth.daily_transitions.mean == doctest::Approx(3.0));
  CHECK(same.truth.daily_transitions.std == doctest::Approx(std::sqrt(2.0)));
  CHECK(same.truth.pairs[0].duration.mean == doctest::Approx(7.0 / 3));
  CHECK(same.truth.pairs[0].duration.std == doctest::Approx(std::sqrt(1.0 / 3)));
  CHECK(same.truth.pairs[0].duration.count == 3);
  CHECK(same.transition_offset == 0.0);
  CHECK(same.pair_offsets[0].offset == 0.0);
  CHECK_FALSE(same.pair_offsets[1].offset.has_value());
  CHECK(same.duration_offset == 0.0);

  auto pred = truth;
  pred[1] = seq({K, H, H, H, L}, {}, "PD01", 1);
  const auto r = mobility_report(pred, truth, opt);
  CHECK(r.transition_offset == 0.0);
  CHECK(*r.pair_offsets[0].offset == doctest::Approx(1.0 / 3));
  CHECK(*r.duration_offset == doctest::Approx(1.0 / 3));

  const auto vocab = data::RoomVocabulary::standard();
  const auto j = to_json(r, vocab);
  CHECK(j.at("offsets").at("pairs")[0].at("pair") == "kitchen-living_room");
  CHECK(j.at("offsets").at("pairs")[1].at("offset_s").is_null());
  const auto csv = to_csv(r, vocab);
  CHECK(csv.find("daily_transitions,3,") != std::string::npos);
  const auto long_csv = to_long_csv(r, vocab);
  CHECK(long_csv.find("truth/kitchen-living_room_duration_s,PD01,1,3\n") != std::string::npos);
  CHECK(long_csv.find("predicted/kitchen-living_room_duration_s,PD01,1,4\n") != std::string::npos);

  pred.pop_back();
  try {
    mobility_report(pred, truth, opt);
    FAIL("expected ReportError");
  } catch (const ReportError& e) {
    CHECK(std::string(e.what()).find("PD01/day1") != std::string::npos);
  }
}

TEST_CASE("sequences from recordings") {
  data::Stream st;
  st.subject_id = "HC01";
  for (int t = 0; t < 4; ++t) {
    data::SensorFrame f;
    f.timestamp = t;
    if (t != 2) f.room = t % 2;
    st.frames.push_back(f);
  }
  const auto s = sequences_of({st});
  REQUIRE(s.size() == 1);
  CHECK(s[0].rooms == std::vector<int>{0, 1, 1});
  // the unlabeled second splits the segment
  CHECK(count_daily_transitions(s[0]) == 1);
}
