#include "dcmn/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace dcmn::mobility {

namespace {

bool continues(const RoomSequence& s, std::size_t t) {
  return t > 0 && std::abs(s.timestamps[t] - s.timestamps[t - 1] - 1.0) < 1e-6;
}

void check(const RoomSequence& s) {
  if (s.timestamps.size() != s.rooms.size())
    throw DimensionError("room sequence " + s.subject_id + "/" + std::to_string(s.day_index) +
                         ": timestamps and rooms differ in length");
}

std::string key(const RoomSequence& s) { return s.subject_id + "/day" + std::to_string(s.day_index); }

std::string pair_name(const data::RoomVocabulary& v, int a, int b) { return v.name(a) + "-" + v.name(b); }

}  // namespace

int count_daily_transitions(const RoomSequence& seq) {
  check(seq);
  int n = 0;
  for (std::size_t t = 1; t < seq.rooms.size(); ++t) n += continues(seq, t) && seq.rooms[t] != seq.rooms[t - 1];
  return n;
}

std::vector<double> pair_transition_durations(const RoomSequence& seq, int a, int b, int hub, const Adjacency* adj) {
  check(seq);
  if (a == b) throw DomainError("pair transition: rooms must differ");
  if (a == hub || b == hub) throw DomainError("pair transition: neither room may be the hub");
  if (adj && (!(*adj)(a, hub) || !(*adj)(b, hub)))
    throw DomainError("pair transition: rooms " + std::to_string(a) + " and " + std::to_string(b) +
                      " are not both connected through the hub");
  std::vector<double> out;
  const auto& r = seq.rooms;
  std::size_t t = 1;
  while (t < r.size()) {
    // a hub run entered from a or b
    if (r[t] == hub && continues(seq, t) && (r[t - 1] == a || r[t - 1] == b)) {
      const int from = r[t - 1];
      std::size_t u = t;
      while (u < r.size() && r[u] == hub && (u == t || continues(seq, u))) ++u;
      if (u < r.size() && continues(seq, u) && r[u] == (from == a ? b : a))
        out.push_back(static_cast<double>(u - t + 1));
      t = u;
      continue;
    }
    ++t;
  }
  return out;
}

RoomSequence median_filter(const RoomSequence& seq) {
  check(seq);
  RoomSequence out = seq;
  for (std::size_t t = 1; t + 1 < seq.rooms.size(); ++t)
    if (continues(seq, t) && continues(seq, t + 1) && seq.rooms[t - 1] == seq.rooms[t + 1])
      out.rooms[t] = seq.rooms[t - 1];
  return out;
}

Stat stat_of(const std::vector<double>& v) {
  Stat s;
  s.count = static_cast<int>(v.size());
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::vector<std::pair<int, int>> default_pairs(const data::RoomVocabulary& vocab) {
  std::vector<std::pair<int, int>> out;
  const auto k = vocab.find("kitchen"), l = vocab.find("living_room"), d = vocab.find("dining_room");
  if (k && l) out.emplace_back(*k, *l);
  if (k && d) out.emplace_back(*k, *d);
  if (d && l) out.emplace_back(*d, *l);
  return out;
}

Summary summarize(const std::vector<RoomSequence>& seqs, const ReportOptions& opt) {
  Summary s;
  std::vector<double> counts;
  for (const auto& q : seqs) counts.push_back(count_daily_transitions(q));
  s.daily_transitions = stat_of(counts);
  for (const auto& [a, b] : opt.pairs) {
    std::vector<double> all;
    for (const auto& q : seqs) {
      const auto d = pair_transition_durations(q, a, b, opt.hub, opt.adjacency);
      all.insert(all.end(), d.begin(), d.end());
    }
    s.pairs.push_back({a, b, stat_of(all)});
  }
  return s;
}

Report mobility_report(std::vector<RoomSequence> predicted, std::vector<RoomSequence> truth, const ReportOptions& opt) {
  auto by_key = [](std::vector<RoomSequence>& v) {
    std::sort(v.begin(), v.end(), [](const RoomSequence& x, const RoomSequence& y) {
      return std::tie(x.subject_id, x.day_index) < std::tie(y.subject_id, y.day_index);
    });
  };
  by_key(predicted);
  by_key(truth);
  std::vector<std::string> missing;
  std::map<std::string, int> seen;
  for (const auto& s : predicted) seen[key(s)] |= 1;
  for (const auto& s : truth) seen[key(s)] |= 2;
  for (const auto& [k, m] : seen) {
    if (m == 1) missing.push_back(k + " (no ground truth)");
    if (m == 2) missing.push_back(k + " (no predictions)");
  }
  if (!missing.empty()) {
    std::string msg = "mobility report: unmatched subject-days:";
    for (const auto& m : missing) msg += " " + m;
    throw ReportError(msg);
  }
  if (opt.smooth)
    for (auto& s : predicted) s = median_filter(s);

  Report r;
  r.truth = summarize(truth, opt);
  r.predicted = summarize(predicted, opt);
  r.transition_offset = std::abs(r.predicted.daily_transitions.mean - r.truth.daily_transitions.mean);
  double sum = 0;
  int n = 0;
  for (std::size_t i = 0; i < opt.pairs.size(); ++i) {
    PairOffset po{opt.pairs[i].first, opt.pairs[i].second, std::nullopt};
    const auto& p = r.predicted.pairs[i].duration;
    const auto& t = r.truth.pairs[i].duration;
    if (p.count > 0 && t.count > 0) {
      po.offset = std::abs(p.mean - t.mean);
      sum += *po.offset;
      ++n;
    }
    r.pair_offsets.push_back(po);
  }
  if (n > 0) r.duration_offset = sum / n;
  r.truth_sequences = std::move(truth);
  r.predicted_sequences = std::move(predicted);
  r.pair_ids = opt.pairs;
  r.hub = opt.hub;
  return r;
}

nlohmann::json to_json(const Report& r, const data::RoomVocabulary& vocab) {
  auto stat = [](const Stat& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}, {"count", s.count}}; };
  auto summary = [&](const Summary& s) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : s.pairs)
      pairs.push_back({{"pair", pair_name(vocab, p.a, p.b)}, {"duration_s", stat(p.duration)}});
    return nlohmann::json{{"daily_transitions", stat(s.daily_transitions)}, {"pairs", pairs}};
  };
  nlohmann::json offsets = nlohmann::json::array();
  for (const auto& o : r.pair_offsets)
    offsets.push_back({{"pair", pair_name(vocab, o.a, o.b)}, {"offset_s", o.offset ? nlohmann::json(*o.offset) : nlohmann::json()}});
  return {{"truth", summary(r.truth)},
          {"predicted", summary(r.predicted)},
          {"offsets",
           {{"daily_transitions", r.transition_offset},
            {"pairs", offsets},
            {"mean_duration_s", r.duration_offset ? nlohmann::json(*r.duration_offset) : nlohmann::json()}}}};
}

std::string to_csv(const Report& r, const data::RoomVocabulary& vocab) {
  std::ostringstream out;
  out << "metric,truth_mean,truth_std,predicted_mean,predicted_std,offset\n";
  auto num = [](double v) { return data::format_number(v); };
  out << "daily_transitions," << num(r.truth.daily_transitions.mean) << ',' << num(r.truth.daily_transitions.std) << ','
      << num(r.predicted.daily_transitions.mean) << ',' << num(r.predicted.daily_transitions.std) << ','
      << num(r.transition_offset) << '\n';
  for (std::size_t i = 0; i < r.pair_offsets.size(); ++i) {
    const auto& t = r.truth.pairs[i].duration;
    const auto& p = r.predicted.pairs[i].duration;
    auto opt = [&](const Stat& s, double v) { return s.count ? num(v) : std::string(); };
    out << pair_name(vocab, r.pair_offsets[i].a, r.pair_offsets[i].b) << "_duration_s," << opt(t, t.mean) << ','
        << opt(t, t.std) << ',' << opt(p, p.mean) << ',' << opt(p, p.std) << ','
        << (r.pair_offsets[i].offset ? num(*r.pair_offsets[i].offset) : std::string()) << '\n';
  }
  return out.str();
}

std::string to_long_csv(const Report& r, const data::RoomVocabulary& vocab) {
  std::ostringstream out;
  out << "metric,subject,day,value\n";
  auto emit = [&](const char* side, const std::vector<RoomSequence>& seqs) {
    for (const auto& s : seqs) {
      out << side << "/daily_transitions," << s.subject_id << ',' << s.day_index << ',' << count_daily_transitions(s)
          << '\n';
      for (const auto& [a, b] : r.pair_ids)
        for (double d : pair_transition_durations(s, a, b, r.hub))
          out << side << '/' << pair_name(vocab, a, b) << "_duration_s," << s.subject_id << ',' << s.day_index << ','
              << data::format_number(d) << '\n';
    }
  };
  emit("truth", r.truth_sequences);
  emit("predicted", r.predicted_sequences);
  return out.str();
}

std::vector<RoomSequence> sequences_of(const std::vector<data::Stream>& streams) {
  std::vector<RoomSequence> out;
  for (const auto& s : streams) {
    RoomSequence q;
    q.subject_id = s.subject_id;
    q.day_index = s.day_index;
    for (const auto& f : s.frames)
      if (f.room) {
        q.timestamps.push_back(f.timestamp);
        q.rooms.push_back(*f.room);
      }
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace dcmn::mobility
