#include "dcmn/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dcmn/mobility.hpp"
#include "dcmn/model.hpp"
#include "dcmn/seed.hpp"
#include "dcmn/simulator.hpp"
#include "dcmn/training.hpp"

namespace dcmn::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

constexpr std::uint64_t kDefaultSeed = 7;
constexpr const char* kManifest = "manifest.json";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config, data, out, checkpoint, pred, ablation, cv_mode = "all-hc";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool mask = false, resume = false, smooth = false;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// Written before anything else and rewritten on completion or failure.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> args, fs::path dir)
      : dir_(std::move(dir)) {
    j_ = {{"format", "dcmn-manifest"},
          {"version", 1},
          {"command", std::move(command)},
          {"arguments", std::move(args)},
          {"config_paths", json::object()},
          {"seed", nullptr},
          {"code_version", DCMN_VERSION},
          {"output_dir", dir_.string()},
          {"started_at", utc_now()},
          {"finished_at", nullptr},
          {"status", "running"},
          {"outputs", json::array()}};
  }

  void config_path(const std::string& role, const std::string& path) {
    if (!path.empty()) j_["config_paths"][role] = path;
  }
  void seed(std::uint64_t s) { j_["seed"] = s; }
  void output(const std::string& name) { j_["outputs"].push_back(name); }
  void write() const { write_atomic(dir_ / kManifest, j_.dump(2) + "\n"); }
  void finish(const std::string& status, const std::string& error = {}) {
    j_["status"] = status;
    j_["finished_at"] = utc_now();
    if (!error.empty()) j_["error"] = error;
    write();
  }
  const fs::path& dir() const { return dir_; }

  /// Writes one artifact and records it.
  void emit(const std::string& name, const std::string& content) {
    write_atomic(dir_ / name, content);
    output(name);
  }
  void emit(const std::string& name, json j) {
    j["manifest"] = kManifest;
    emit(name, j.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  json j_;
};

json read_json(const std::string& path, const std::string& role) {
  std::ifstream f(path);
  if (!f) throw ConfigError(role + ": cannot open '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(role + ": " + path + ": " + e.what());
  }
}

void require_file(const std::string& path, const std::string& flag) {
  if (path.empty()) throw UsageError(flag + " is required");
  if (!fs::is_regular_file(path)) throw UsageError(flag + ": no such file '" + path + "'");
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return "[" + s + "]";
}

/// The standard rooms when the file uses only those, else its names sorted.
data::RoomVocabulary vocabulary_for(const std::string& path) {
  auto names = data::room_names_in(path);
  const auto standard = data::RoomVocabulary::standard();
  if (std::all_of(names.begin(), names.end(), [&](const auto& n) { return standard.find(n).has_value(); }))
    return standard;
  std::sort(names.begin(), names.end());
  return data::RoomVocabulary(names);
}

void check_vocabulary(const data::RoomVocabulary& model_vocab, const std::string& path) {
  const auto names = data::room_names_in(path);
  for (const auto& n : names)
    if (!model_vocab.find(n))
      throw VocabularyError("vocabulary mismatch: checkpoint rooms " + join(model_vocab.names()) +
                            " vs data rooms " + join(names));
}

std::optional<BoolMatrix> adjacency_mask(const data::RoomVocabulary& vocab) {
  if (vocab != data::RoomVocabulary::standard())
    throw UsageError("--mask-transitions needs the standard room vocabulary " +
                     join(data::RoomVocabulary::standard().names()) + ", data has " + join(vocab.names()));
  return sim::default_floorplan().forbidden_transitions();
}

struct LoadedTrainConfig {
  training::TrainConfig cfg;
  std::uint64_t seed = kDefaultSeed;
};

LoadedTrainConfig train_config(const Options& o, Manifest& m) {
  LoadedTrainConfig r;
  if (!o.config.empty()) {
    const auto j = read_json(o.config, "config");
    r.cfg = training::train_config_from_json(j);
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_integer()) throw ConfigError("seed: expected a non-negative integer");
      r.seed = j.at("seed").get<std::uint64_t>();
    }
    m.config_path("train", o.config);
  }
  if (o.seed) r.seed = *o.seed;
  if (!o.ablation.empty()) r.cfg.model.variant = model::parse_variant(o.ablation);
  if (o.mask) r.cfg.mask_transitions = true;
  m.seed(r.seed);
  return r;
}

std::vector<data::Stream> load_streams(const std::string& path, const data::RoomVocabulary& vocab) {
  return data::preprocess(data::load_recordings(path, vocab));
}

void log_epoch(const training::EpochLog& e) {
  spdlog::info("epoch {} loss {:.4f} val accuracy {:.2f}%", e.epoch, e.train_loss, e.val_accuracy);
}

int cmd_simulate(const Options& o, Manifest& m) {
  sim::SimConfig cfg = sim::default_sim_config();
  if (!o.config.empty()) {
    cfg = sim::parse_sim_config(read_json(o.config, "config"));
    m.config_path("simulator", o.config);
  }
  if (o.seed) cfg.seed = *o.seed;
  m.seed(cfg.seed);
  m.write();
  spdlog::info("simulating {} subjects x {} days x {} s", cfg.subjects.size(), cfg.days, cfg.duration_s);
  const auto streams = sim::make_streams(cfg, o.jobs);
  std::ostringstream csv;
  data::write_recordings(csv, streams, cfg.floorplan.rooms);
  m.emit("recordings.csv", csv.str());
  m.emit("sim_config.json", sim::to_json(cfg));
  return kExitOk;
}

// Keeps the earlier log's rows up to the resumed epoch so the epoch column stays continuous.
std::string resumed_log(const fs::path& previous, int through_epoch, const std::string& fresh) {
  std::ifstream f(previous);
  if (!f) return fresh;
  std::string out, line;
  std::getline(f, line);
  out = line + "\n";
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (std::stoi(line.substr(0, line.find(','))) <= through_epoch) out += line + "\n";
  }
  return out + fresh.substr(fresh.find('\n') + 1);
}

int cmd_train(const Options& o, Manifest& m) {
  require_file(o.data, "--data");
  m.config_path("data", o.data);
  auto [cfg, seed] = train_config(o, m);
  std::optional<model::Checkpoint> resume;
  fs::path resume_path;
  if (o.resume) {
    resume_path = o.checkpoint.empty() ? m.dir() / "checkpoint.json" : fs::path(o.checkpoint);
    if (!fs::is_regular_file(resume_path)) throw UsageError("--resume: no checkpoint at '" + resume_path.string() + "'");
    m.config_path("resume", resume_path.string());
    resume = model::load_checkpoint(resume_path);
  }
  m.write();

  const auto vocab = resume ? resume->vocabulary : vocabulary_for(o.data);
  if (resume) check_vocabulary(vocab, o.data);
  const auto streams = load_streams(o.data, vocab);
  training::TrainInputs in;
  in.vocabulary = vocab;
  in.norm = resume ? resume->norm : data::fit_norm(streams);
  in.train = data::window(data::apply_norm(streams, in.norm), cfg.model.steps, cfg.train_stride);
  training::split_validation(in.train, in.validation, cfg.val_fraction, seed);
  if (cfg.mask_transitions) in.forbidden = adjacency_mask(vocab);
  spdlog::info("training {} on {} windows ({} validation)", model::variant_name(cfg.model.variant), in.train.size(),
               in.validation.size());

  const auto result = training::train(in, cfg, seed, resume, log_epoch);
  std::string log = training::log_csv(result.log);
  if (resume) log = resumed_log(resume_path.parent_path() / "epoch_log.csv", resume->epochs_completed, log);
  auto ck = model::to_json(result.checkpoint);
  m.emit("checkpoint.json", ck);
  m.emit("epoch_log.csv", log);
  m.emit("train_summary.json", json{{"best_epoch", result.best_epoch},
                                    {"epochs_completed", result.checkpoint.epochs_completed},
                                    {"stopped_early", result.stopped_early},
                                    {"seed", seed},
                                    {"config", training::to_json(cfg)}});
  return kExitOk;
}

int cmd_evaluate(const Options& o, Manifest& m) {
  require_file(o.checkpoint, "--checkpoint");
  require_file(o.data, "--data");
  m.config_path("checkpoint", o.checkpoint);
  m.config_path("data", o.data);
  if (o.seed) m.seed(*o.seed);
  m.write();
  const auto ck = model::load_checkpoint(o.checkpoint);
  check_vocabulary(ck.vocabulary, o.data);
  const auto streams = load_streams(o.data, ck.vocabulary);
  const auto samples = data::window(data::apply_norm(streams, ck.norm), ck.config.steps, ck.config.steps);
  if (samples.empty()) throw UsageError("--data: no complete labeled windows to evaluate");
  std::optional<BoolMatrix> forbidden;
  if (o.mask) forbidden = adjacency_mask(ck.vocabulary);
  const auto tm = model::transitions(ck.config, ck.params, forbidden);
  const auto predicted = model::predict(ck.config, ck.params, samples, tm);

  std::vector<int> truth_flat, pred_flat;
  std::ostringstream csv;
  csv << "subject_id,day_index,timestamp_s,room,predicted\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    for (int t = 0; t < s.steps(); ++t) {
      const int truth = s.labels[static_cast<std::size_t>(t)];
      const int pred = predicted[i][static_cast<std::size_t>(t)];
      truth_flat.push_back(truth);
      pred_flat.push_back(pred);
      csv << s.meta.subject_id << ',' << s.meta.day_index << ','
          << data::format_number(s.meta.start_timestamp + t) << ',' << ck.vocabulary.name(truth) << ','
          << ck.vocabulary.name(pred) << '\n';
    }
  }
  const auto metrics = training::compute_metrics(truth_flat, pred_flat, ck.vocabulary.size());
  m.emit("predictions.csv", csv.str());
  m.emit("metrics.json", json{{"variant", model::variant_name(ck.config.variant)},
                              {"windows", samples.size()},
                              {"timesteps", truth_flat.size()},
                              {"mask_transitions", o.mask},
                              {"precision", metrics.precision},
                              {"accuracy", metrics.accuracy},
                              {"f1", metrics.f1}});
  spdlog::info("accuracy {:.2f}% precision {:.2f}% f1 {:.2f}%", metrics.accuracy, metrics.precision, metrics.f1);
  return kExitOk;
}

struct CvSetup {
  training::TrainConfig cfg;
  std::uint64_t seed;
  training::CvMode mode;
  data::RoomVocabulary vocab;
  std::vector<data::Stream> streams;
  training::CvOptions opt;
};

CvSetup cv_setup(const Options& o, Manifest& m) {
  require_file(o.data, "--data");
  m.config_path("data", o.data);
  auto [cfg, seed] = train_config(o, m);
  CvSetup s{cfg, seed, training::parse_mode(o.cv_mode), vocabulary_for(o.data), {}, {}};
  m.write();
  s.streams = load_streams(o.data, s.vocab);
  s.opt.jobs = o.jobs;
  if (cfg.mask_transitions) s.opt.forbidden = adjacency_mask(s.vocab);
  s.opt.on_epoch = [](const training::EpochLog& e) {
    spdlog::debug("epoch {} loss {:.4f} val accuracy {:.2f}%", e.epoch, e.train_loss, e.val_accuracy);
  };
  s.opt.on_fold = [](const training::Fold& f, const training::TrainResult& r) {
    spdlog::info("fold {} done, best epoch {}", f.name, r.best_epoch);
  };
  return s;
}

int cmd_crossval(const Options& o, Manifest& m) {
  auto s = cv_setup(o, m);
  const auto report = training::cross_validate(s.streams, s.mode, s.cfg, s.vocab, s.seed, s.opt);
  m.emit("metrics.json", training::to_json(report));
  m.emit("metrics.csv", training::to_csv({report}));
  spdlog::info("{} mean accuracy {:.2f}%", training::mode_name(s.mode), report.mean.accuracy);
  return kExitOk;
}

int cmd_ablate(const Options& o, Manifest& m) {
  if (!o.ablation.empty()) throw UsageError("ablate trains every variant; --ablation does not apply");
  auto s = cv_setup(o, m);
  const auto reports = training::ablate(s.streams, s.mode, s.cfg, s.vocab, s.seed, s.opt);
  json all = json::array();
  std::ostringstream summary;
  summary << "variant,precision_mean,precision_std,accuracy_mean,accuracy_std,f1_mean,f1_std\n";
  for (const auto& r : reports) {
    all.push_back(training::to_json(r));
    summary << model::variant_name(r.variant) << ',' << data::format_number(r.mean.precision) << ','
            << data::format_number(r.std.precision) << ',' << data::format_number(r.mean.accuracy) << ','
            << data::format_number(r.std.accuracy) << ',' << data::format_number(r.mean.f1) << ','
            << data::format_number(r.std.f1) << '\n';
  }
  m.emit("ablation.json", json{{"mode", training::mode_name(s.mode)}, {"variants", all}});
  m.emit("ablation.csv", summary.str());
  m.emit("ablation_folds.csv", training::to_csv(reports));
  return kExitOk;
}

struct PredictionTable {
  std::vector<std::string> rooms;  // every room name seen
  std::vector<mobility::RoomSequence> truth, predicted;
};

PredictionTable read_predictions(const std::string& path) {
  std::ifstream f(path);
  std::string line;
  if (!std::getline(f, line) || line != "subject_id,day_index,timestamp_s,room,predicted")
    throw ParseError(path + ": expected header subject_id,day_index,timestamp_s,room,predicted", 1);
  struct Row {
    std::string subject;
    int day;
    double ts;
    std::string room, pred;
  };
  std::vector<Row> rows;
  std::size_t n = 1;
  while (std::getline(f, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) c.push_back(cell);
    if (c.size() != 5) throw ParseError(path + ": expected 5 columns", n);
    try {
      rows.push_back({c[0], std::stoi(c[1]), std::stod(c[2]), c[3], c[4]});
    } catch (const std::exception&) {
      throw ParseError(path + ": bad day_index or timestamp_s", n);
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.subject, a.day, a.ts) < std::tie(b.subject, b.day, b.ts);
  });
  PredictionTable t;
  for (const auto& r : rows)
    for (const auto* name : {&r.room, &r.pred})
      if (std::find(t.rooms.begin(), t.rooms.end(), *name) == t.rooms.end()) t.rooms.push_back(*name);
  const auto standard = data::RoomVocabulary::standard();
  const bool is_standard =
      std::all_of(t.rooms.begin(), t.rooms.end(), [&](const auto& x) { return standard.find(x).has_value(); });
  if (!is_standard) std::sort(t.rooms.begin(), t.rooms.end());
  const auto vocab = is_standard ? standard : data::RoomVocabulary(t.rooms);
  t.rooms = vocab.names();
  for (const auto& r : rows) {
    if (t.truth.empty() || t.truth.back().subject_id != r.subject || t.truth.back().day_index != r.day) {
      t.truth.push_back({r.subject, r.day, {}, {}});
      t.predicted.push_back({r.subject, r.day, {}, {}});
    }
    t.truth.back().timestamps.push_back(r.ts);
    t.truth.back().rooms.push_back(vocab.id(r.room));
    t.predicted.back().timestamps.push_back(r.ts);
    t.predicted.back().rooms.push_back(vocab.id(r.pred));
  }
  return t;
}

int cmd_mobility(const Options& o, Manifest& m) {
  require_file(o.pred, "--pred");
  m.config_path("predictions", o.pred);
  if (o.seed) m.seed(*o.seed);
  m.write();
  auto table = read_predictions(o.pred);
  const data::RoomVocabulary vocab(table.rooms);
  if (!o.data.empty()) {
    require_file(o.data, "--data");
    m.config_path("data", o.data);
    check_vocabulary(vocab, o.data);
    table.truth = mobility::sequences_of(data::load_recordings(o.data, vocab));
  }
  const auto hub = vocab.find("hallway");
  if (!hub) throw UsageError("mobility: no 'hallway' room in " + join(vocab.names()));
  mobility::ReportOptions opt;
  opt.hub = *hub;
  opt.pairs = mobility::default_pairs(vocab);
  opt.smooth = o.smooth;
  mobility::Adjacency adj;
  if (vocab == data::RoomVocabulary::standard()) {
    adj = sim::default_floorplan().forbidden_transitions().unaryExpr([](bool f) { return !f; });
    opt.adjacency = &adj;
  }
  const auto report = mobility::mobility_report(table.predicted, table.truth, opt);
  m.emit("mobility.json", mobility::to_json(report, vocab));
  m.emit("mobility.csv", mobility::to_csv(report, vocab));
  m.emit("mobility_long.csv", mobility::to_long_csv(report, vocab));
  spdlog::info("daily transition offset {:.3f}", report.transition_offset);
  return kExitOk;
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw std::runtime_error("cannot write " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

void configure_logging() {
  static bool done = false;
  if (!done) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("dcmn"));
    spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
    done = true;
  }
  const char* level = std::getenv("DCMN_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

int run(const std::vector<std::string>& args) {
  configure_logging();
  CLI::App app{"Room-level localisation from wearable RSSI and accelerometer data", "dcmn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DCMN_VERSION);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--out", o.out, "Output directory")->required();
    c->add_option("--seed", o.seed, "Master seed");
  };
  auto training_flags = [&](CLI::App* c) {
    c->add_option("--data", o.data, "Recordings CSV")->required();
    c->add_option("--config", o.config, "Training config JSON");
    c->add_option("--ablation", o.ablation, "Model variant: full, no-lstm, no-grn, no-transformer, no-crf, no-accel");
    c->add_flag("--mask-transitions", o.mask, "Forbid transitions between non-adjacent rooms when decoding");
  };

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic recordings CSV");
  common(simulate);
  simulate->add_option("--config", o.config, "Simulator config JSON (defaults to 4 HC + 4 PD subjects)");
  simulate->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "Train a model on every subject in a recordings CSV");
  common(train);
  training_flags(train);
  train->add_flag("--resume", o.resume, "Continue from --checkpoint (or OUT/checkpoint.json)");
  train->add_option("--checkpoint", o.checkpoint, "Checkpoint to resume from");

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a recordings CSV");
  common(evaluate);
  evaluate->add_option("--checkpoint", o.checkpoint, "Checkpoint JSON")->required();
  evaluate->add_option("--data", o.data, "Recordings CSV")->required();
  evaluate->add_flag("--mask-transitions", o.mask, "Forbid transitions between non-adjacent rooms");

  auto* crossval = app.add_subcommand("crossval", "Cross-validate one variant");
  common(crossval);
  training_flags(crossval);
  crossval->add_option("--cv-mode", o.cv_mode, "all-hc, loo-hc or loo-pd")
      ->check(CLI::IsMember({"all-hc", "loo-hc", "loo-pd"}));
  crossval->add_option("--jobs", o.jobs, "Folds trained in parallel")->check(CLI::PositiveNumber);

  auto* ablate = app.add_subcommand("ablate", "Cross-validate all six variants");
  common(ablate);
  training_flags(ablate);
  ablate->add_option("--cv-mode", o.cv_mode, "all-hc, loo-hc or loo-pd")
      ->check(CLI::IsMember({"all-hc", "loo-hc", "loo-pd"}));
  ablate->add_option("--jobs", o.jobs, "Folds trained in parallel")->check(CLI::PositiveNumber);

  auto* mob = app.add_subcommand("mobility", "Transition statistics from a predictions CSV");
  common(mob);
  mob->add_option("--pred", o.pred, "predictions.csv from evaluate")->required();
  mob->add_option("--data", o.data, "Recordings CSV to use as ground truth instead of the room column");
  mob->add_flag("--smooth", o.smooth, "Width-3 majority filter on predictions");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  std::optional<Manifest> manifest;
  try {
    if (!o.ablation.empty()) model::parse_variant(o.ablation);
    manifest.emplace(cmd->get_name(), args, fs::path(o.out));
    int code = kExitInternal;
    if (cmd == simulate) code = cmd_simulate(o, *manifest);
    else if (cmd == train) code = cmd_train(o, *manifest);
    else if (cmd == evaluate) code = cmd_evaluate(o, *manifest);
    else if (cmd == crossval) code = cmd_crossval(o, *manifest);
    else if (cmd == ablate) code = cmd_ablate(o, *manifest);
    else if (cmd == mob) code = cmd_mobility(o, *manifest);
    manifest->finish("complete");
    return code;
  } catch (const DivergenceError& e) {
    spdlog::error("{}", e.what());
    if (manifest) manifest->finish("failed", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    const bool usage = dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
                       dynamic_cast<const ParseError*>(&e) || dynamic_cast<const VocabularyError*>(&e) ||
                       dynamic_cast<const PlanError*>(&e) || dynamic_cast<const ReportError*>(&e) ||
                       dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const DomainError*>(&e);
    spdlog::error("{}", e.what());
    if (manifest) {
      try {
        manifest->finish("failed", e.what());
      } catch (const std::exception&) {
      }
    }
    return usage ? kExitUsage : kExitInternal;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace dcmn::cli
