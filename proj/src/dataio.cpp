#include "dcmn/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace dcmn::data {

namespace {

constexpr int kColumns = 3 + kRssiFeatures + kAccelFeatures + 1;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string two_digit(int i) { return (i < 10 ? "0" : "") + std::to_string(i); }

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(std::string_view cell, std::size_t line, const std::string& column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
    throw ParseError("column " + column + ": cannot parse '" + std::string(cell) + "' as a number",
                     line);
  return v;
}

int parse_int(std::string_view cell, std::size_t line, const std::string& column) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw ParseError("column " + column + ": cannot parse '" + std::string(cell) + "' as an integer",
                     line);
  return v;
}

double optional_cell(std::string_view cell, std::size_t line, const std::string& column) {
  return cell.empty() ? kNaN : parse_double(cell, line, column);
}

}  // namespace

RoomVocabulary::RoomVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw VocabularyError("room names must be non-empty");
    if (std::find(names_.begin(), names_.begin() + static_cast<std::ptrdiff_t>(i), names_[i]) !=
        names_.begin() + static_cast<std::ptrdiff_t>(i))
      throw VocabularyError("duplicate room name '" + names_[i] + "'");
  }
}

RoomVocabulary RoomVocabulary::standard() {
  return RoomVocabulary({"kitchen", "living_room", "dining_room", "hallway", "stairs", "porch"});
}

std::optional<int> RoomVocabulary::find(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<int>(it - names_.begin());
}

int RoomVocabulary::id(const std::string& name) const {
  if (auto i = find(name)) return *i;
  std::string known;
  for (const auto& n : names_) known += (known.empty() ? "" : ", ") + n;
  throw VocabularyError("unknown room '" + name + "' (vocabulary: " + known + ")");
}

nlohmann::json NormStats::to_json() const {
  return {{"mins", std::vector<double>(mins.data(), mins.data() + mins.size())},
          {"maxs", std::vector<double>(maxs.data(), maxs.data() + maxs.size())},
          {"feature_names", feature_names}};
}

NormStats NormStats::from_json(const nlohmann::json& j) {
  const auto mins = j.at("mins").get<std::vector<double>>();
  const auto maxs = j.at("maxs").get<std::vector<double>>();
  if (mins.size() != maxs.size()) throw DimensionError("norm stats: mins/maxs length mismatch");
  NormStats s;
  s.mins = Eigen::Map<const Vector>(mins.data(), static_cast<Eigen::Index>(mins.size()));
  s.maxs = Eigen::Map<const Vector>(maxs.data(), static_cast<Eigen::Index>(maxs.size()));
  if (j.contains("feature_names")) s.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  return s;
}

SubjectGroup group_of(const std::string& subject_id) {
  if (subject_id.size() < 2) return SubjectGroup::unknown;
  std::string prefix = subject_id.substr(0, 2);
  std::transform(prefix.begin(), prefix.end(), prefix.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (prefix == "PD") return SubjectGroup::pd;
  if (prefix == "HC") return SubjectGroup::hc;
  return SubjectGroup::unknown;
}

std::vector<std::string> feature_names() {
  std::vector<std::string> names;
  for (int i = 1; i <= kRssiFeatures; ++i) names.push_back("rssi_" + two_digit(i));
  for (int i = 1; i <= kAccelFeatures; ++i) names.push_back("acc_" + two_digit(i));
  return names;
}

std::vector<std::string> csv_header() {
  std::vector<std::string> h = {"subject_id", "day_index", "timestamp_s"};
  for (auto& f : feature_names()) h.push_back(f);
  h.push_back("room");
  return h;
}

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[512];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  if (ec != std::errc()) throw std::runtime_error("format_number: value out of range");
  return std::string(buf, ptr);
}

std::vector<Stream> read_recordings(std::istream& in, const RoomVocabulary& vocab) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("missing header row", line_no);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    const auto cells = split(line);
    const auto expected = csv_header();
    if (cells.size() != expected.size())
      throw ParseError("header has " + std::to_string(cells.size()) + " columns, expected " +
                           std::to_string(expected.size()),
                       line_no);
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i] != expected[i])
        throw ParseError("header column " + std::to_string(i + 1) + " is '" + std::string(cells[i]) +
                             "', expected '" + expected[i] + "'",
                         line_no);
  }
  const auto header = csv_header();
  std::map<std::pair<std::string, int>, Stream> grouped;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (static_cast<int>(cells.size()) != kColumns)
      throw ParseError("row has " + std::to_string(cells.size()) + " columns, expected " +
                           std::to_string(kColumns) + " (20 rssi, 6 accelerometer)",
                       line_no);
    SensorFrame f;
    f.subject_id = std::string(cells[0]);
    if (f.subject_id.empty()) throw ParseError("empty subject_id", line_no);
    f.day_index = parse_int(cells[1], line_no, header[1]);
    f.timestamp = parse_double(cells[2], line_no, header[2]);
    f.rssi.resize(kRssiFeatures);
    for (int i = 0; i < kRssiFeatures; ++i) f.rssi[i] = optional_cell(cells[3 + i], line_no, header[3 + i]);
    f.accel.resize(kAccelFeatures);
    for (int i = 0; i < kAccelFeatures; ++i)
      f.accel[i] = optional_cell(cells[3 + kRssiFeatures + i], line_no, header[3 + kRssiFeatures + i]);
    const std::string room(cells.back());
    if (!room.empty()) {
      const auto id = vocab.find(room);
      if (!id) {
        try {
          vocab.id(room);
        } catch (const VocabularyError& e) {
          throw VocabularyError("line " + std::to_string(line_no) + ": " + e.what());
        }
      }
      f.room = *id;
    }
    auto& s = grouped[{f.subject_id, f.day_index}];
    s.subject_id = f.subject_id;
    s.day_index = f.day_index;
    s.frames.push_back(std::move(f));
  }
  std::vector<Stream> out;
  out.reserve(grouped.size());
  for (auto& [key, s] : grouped) {
    std::stable_sort(s.frames.begin(), s.frames.end(),
                     [](const SensorFrame& a, const SensorFrame& b) { return a.timestamp < b.timestamp; });
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Stream> load_recordings(const std::filesystem::path& path, const RoomVocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open recording file " + path.string());
  return read_recordings(in, vocab);
}

void write_recordings(std::ostream& out, const std::vector<Stream>& streams,
                      const RoomVocabulary& vocab) {
  const auto header = csv_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  std::string row;
  for (const auto& s : streams) {
    if (s.subject_id.find(',') != std::string::npos)
      throw std::invalid_argument("subject id may not contain ','");
    for (const auto& f : s.frames) {
      require_dims(f.rssi.size() == kRssiFeatures && f.accel.size() == kAccelFeatures,
                   "write_recordings: frame has wrong feature counts");
      row = s.subject_id;
      row += ',';
      row += std::to_string(s.day_index);
      row += ',';
      row += format_number(f.timestamp);
      for (int i = 0; i < kRssiFeatures; ++i) (row += ',') += format_number(f.rssi[i]);
      for (int i = 0; i < kAccelFeatures; ++i) (row += ',') += format_number(f.accel[i]);
      row += ',';
      if (f.room) row += vocab.name(*f.room);
      out << row << '\n';
    }
  }
}

std::vector<std::string> room_names_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open recording file " + path.string());
  std::string line;
  std::vector<std::string> names;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) continue;
    std::string room = line.substr(comma + 1);
    if (!room.empty() && std::find(names.begin(), names.end(), room) == names.end())
      names.push_back(std::move(room));
  }
  return names;
}

std::vector<SensorFrame> resample_1hz(const std::vector<SensorFrame>& raw, ResampleMode mode) {
  std::vector<SensorFrame> out;
  if (raw.empty()) return out;
  for (std::size_t i = 1; i < raw.size(); ++i)
    if (raw[i].timestamp < raw[i - 1].timestamp)
      throw std::invalid_argument("resample_1hz: timestamps must be nondecreasing");

  const auto r = raw.front().rssi.size();
  const auto a = raw.front().accel.size();
  const double first = std::floor(raw.front().timestamp);
  const double last = std::floor(raw.back().timestamp);
  std::size_t idx = 0;
  for (double sec = first; sec <= last; sec += 1.0) {
    SensorFrame f;
    f.timestamp = sec;
    f.subject_id = raw.front().subject_id;
    f.day_index = raw.front().day_index;
    Vector rs = Vector::Zero(r), ac = Vector::Zero(a);
    Eigen::VectorXi rn = Eigen::VectorXi::Zero(r), an = Eigen::VectorXi::Zero(a);
    if (mode == ResampleMode::max) {
      rs.setConstant(-std::numeric_limits<double>::infinity());
      ac.setConstant(-std::numeric_limits<double>::infinity());
    }
    std::vector<std::pair<int, int>> votes;  // (room, count) in order of first appearance
    std::size_t count = 0;
    while (idx < raw.size() && std::floor(raw[idx].timestamp) == sec) {
      const auto& x = raw[idx++];
      ++count;
      auto take = [mode](Vector& acc, Eigen::VectorXi& n, const Vector& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
          if (std::isnan(v[i])) continue;
          acc[i] = mode == ResampleMode::mean ? acc[i] + v[i] : std::max(acc[i], v[i]);
          ++n[i];
        }
      };
      take(rs, rn, x.rssi);
      take(ac, an, x.accel);
      if (x.room) {
        auto it = std::find_if(votes.begin(), votes.end(), [&](auto& p) { return p.first == *x.room; });
        if (it == votes.end())
          votes.emplace_back(*x.room, 1);
        else
          ++it->second;
      }
    }
    f.missing = count == 0;
    f.rssi = Vector::Constant(r, kNaN);
    f.accel = Vector::Constant(a, kNaN);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(r); ++i)
      if (rn[i] > 0) f.rssi[i] = mode == ResampleMode::mean ? rs[i] / rn[i] : rs[i];
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(a); ++i)
      if (an[i] > 0) f.accel[i] = mode == ResampleMode::mean ? ac[i] / an[i] : ac[i];
    int best = 0;
    for (const auto& [room, n] : votes)
      if (n > best) {
        best = n;
        f.room = room;
      }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<SensorFrame> impute(std::vector<SensorFrame> frames) {
  for (auto& f : frames) {
    for (Eigen::Index i = 0; i < f.rssi.size(); ++i)
      if (std::isnan(f.rssi[i])) f.rssi[i] = kRssiFloorDb;
    for (Eigen::Index i = 0; i < f.accel.size(); ++i)
      if (std::isnan(f.accel[i])) f.accel[i] = kAccelFill;
  }
  return frames;
}

NormStats fit_norm(const std::vector<SensorFrame>& training) {
  NormStats s;
  s.feature_names = feature_names();
  bool any = false;
  for (const auto& f : training) {
    if (f.missing) continue;
    Vector v(f.rssi.size() + f.accel.size());
    v << f.rssi, f.accel;
    if (v.hasNaN()) throw std::invalid_argument("fit_norm: impute frames before fitting");
    if (!any) {
      s.mins = s.maxs = v;
      any = true;
    } else {
      s.mins = s.mins.cwiseMin(v);
      s.maxs = s.maxs.cwiseMax(v);
    }
  }
  if (!any) throw std::invalid_argument("fit_norm: no frames in training split");
  if (s.mins.size() != static_cast<Eigen::Index>(s.feature_names.size())) s.feature_names.clear();
  return s;
}

NormStats fit_norm(const std::vector<Stream>& training) {
  std::vector<SensorFrame> all;
  for (const auto& s : training) all.insert(all.end(), s.frames.begin(), s.frames.end());
  return fit_norm(all);
}

std::vector<SensorFrame> apply_norm(std::vector<SensorFrame> frames, const NormStats& stats) {
  auto map = [&](double v, Eigen::Index k) {
    const double range = stats.maxs[k] - stats.mins[k];
    if (range <= 0.0) return 0.0;
    return std::clamp((v - stats.mins[k]) / range, 0.0, 1.0);
  };
  for (auto& f : frames) {
    require_dims(f.rssi.size() + f.accel.size() == stats.mins.size(),
                 "apply_norm: feature count differs from norm stats");
    for (Eigen::Index i = 0; i < f.rssi.size(); ++i) f.rssi[i] = map(f.rssi[i], i);
    for (Eigen::Index i = 0; i < f.accel.size(); ++i) f.accel[i] = map(f.accel[i], f.rssi.size() + i);
  }
  return frames;
}

std::vector<Stream> apply_norm(std::vector<Stream> streams, const NormStats& stats) {
  for (auto& s : streams) s.frames = apply_norm(std::move(s.frames), stats);
  return streams;
}

std::vector<Sample> window(const std::vector<SensorFrame>& frames, int steps, int stride) {
  if (steps < 1 || stride < 1) throw ConfigError("window: length and stride must be >= 1");
  std::vector<Sample> out;
  auto usable = [](const SensorFrame& f) { return !f.missing && f.room.has_value(); };
  std::size_t i = 0;
  while (i < frames.size()) {
    if (!usable(frames[i])) {
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    while (end < frames.size() && usable(frames[end]) &&
           frames[end].timestamp - frames[end - 1].timestamp == 1.0 &&
           frames[end].day_index == frames[i].day_index && frames[end].subject_id == frames[i].subject_id)
      ++end;
    for (std::size_t s = i; s + static_cast<std::size_t>(steps) <= end; s += static_cast<std::size_t>(stride)) {
      Sample w;
      const auto r = frames[s].rssi.size();
      const auto a = frames[s].accel.size();
      w.rssi.resize(steps, r);
      w.accel.resize(steps, a);
      w.labels.resize(static_cast<std::size_t>(steps));
      for (int t = 0; t < steps; ++t) {
        const auto& f = frames[s + static_cast<std::size_t>(t)];
        w.rssi.row(t) = f.rssi.transpose();
        w.accel.row(t) = f.accel.transpose();
        w.labels[static_cast<std::size_t>(t)] = *f.room;
      }
      w.meta = {frames[s].subject_id, frames[s].day_index, frames[s].timestamp};
      out.push_back(std::move(w));
    }
    i = end;
  }
  return out;
}

std::vector<Sample> window(const std::vector<Stream>& streams, int steps, int stride) {
  std::vector<Sample> out;
  for (const auto& s : streams) {
    auto w = window(s.frames, steps, stride);
    std::move(w.begin(), w.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<Stream> preprocess(std::vector<Stream> streams, ResampleMode mode) {
  for (auto& s : streams) s.frames = impute(resample_1hz(s.frames, mode));
  return streams;
}

std::vector<Stream> select_subjects(const std::vector<Stream>& streams,
                                    const std::vector<std::string>& subjects) {
  std::vector<Stream> out;
  for (const auto& s : streams)
    if (std::find(subjects.begin(), subjects.end(), s.subject_id) != subjects.end()) out.push_back(s);
  return out;
}

std::vector<std::string> subjects_of(const std::vector<Stream>& streams) {
  std::vector<std::string> out;
  for (const auto& s : streams)
    if (std::find(out.begin(), out.end(), s.subject_id) == out.end()) out.push_back(s.subject_id);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dcmn::data
