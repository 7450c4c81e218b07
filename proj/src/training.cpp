#include "dcmn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <set>
#include <sstream>

#include "dcmn/seed.hpp"

namespace dcmn::training {

double huber(double prediction, double target, double tau) {
  if (!(tau > 0)) throw ConfigError("huber: tau must be > 0");
  const double e = std::abs(prediction - target);
  return e <= tau ? 0.5 * e * e : tau * (e - 0.5 * tau);
}

void TrainConfig::validate() const {
  model.validate();
  if (epochs < 1) throw ConfigError("epochs: must be >= 1");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate: must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
  if (patience < 1) throw ConfigError("patience: must be >= 1");
  if (!(val_fraction >= 0 && val_fraction < 1)) throw ConfigError("val_fraction: must lie in [0, 1)");
  if (train_stride < 1) throw ConfigError("train_stride: must be >= 1");
  if (eval_stride < 0) throw ConfigError("eval_stride: must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("beta1/beta2: must lie in [0, 1)");
  if (!(epsilon > 0)) throw ConfigError("epsilon: must be > 0");
  if (lookahead_k < 1) throw ConfigError("lookahead_k: must be >= 1");
  if (!(lookahead_alpha > 0 && lookahead_alpha <= 1)) throw ConfigError("lookahead_alpha: must lie in (0, 1]");
  if (!(divergence_factor > 1)) throw ConfigError("divergence_factor: must be > 1");
  if (!(time_limit_s >= 0)) throw ConfigError("time_limit_s: must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"d", c.model.d},
          {"heads", c.model.heads},
          {"steps", c.model.steps},
          {"dropout", c.model.dropout},
          {"tau", c.model.tau},
          {"variant", model::variant_name(c.model.variant)},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"patience", c.patience},
          {"val_fraction", c.val_fraction},
          {"train_stride", c.train_stride},
          {"eval_stride", c.eval_stride},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"lookahead_k", c.lookahead_k},
          {"lookahead_alpha", c.lookahead_alpha},
          {"mask_transitions", c.mask_transitions},
          {"divergence_factor", c.divergence_factor},
          {"time_limit_s", c.time_limit_s},
          {"grid", {{"d", c.d_grid}, {"epochs", c.epoch_grid}, {"learning_rate", c.lr_grid}}}};
}

namespace {

template <class T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& path = "") {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + key + ": wrong type");
  }
}

}  // namespace

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train config: expected a JSON object");
  static const std::set<std::string> known = {
      "d",           "heads",        "steps",      "dropout",      "tau",       "variant",
      "epochs",      "learning_rate", "batch_size", "patience",     "val_fraction", "train_stride",
      "eval_stride", "beta1",        "beta2",      "epsilon",      "lookahead_k", "lookahead_alpha",
      "mask_transitions", "divergence_factor", "time_limit_s", "grid", "seed"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError(k + ": unknown train config key");
  TrainConfig c;
  read(j, "d", c.model.d);
  read(j, "heads", c.model.heads);
  read(j, "steps", c.model.steps);
  read(j, "dropout", c.model.dropout);
  read(j, "tau", c.model.tau);
  std::string variant = model::variant_name(c.model.variant);
  read(j, "variant", variant);
  try {
    c.model.variant = model::parse_variant(variant);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("variant: ") + e.what());
  }
  read(j, "epochs", c.epochs);
  read(j, "learning_rate", c.learning_rate);
  read(j, "batch_size", c.batch_size);
  read(j, "patience", c.patience);
  read(j, "val_fraction", c.val_fraction);
  read(j, "train_stride", c.train_stride);
  read(j, "eval_stride", c.eval_stride);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "epsilon", c.epsilon);
  read(j, "lookahead_k", c.lookahead_k);
  read(j, "lookahead_alpha", c.lookahead_alpha);
  read(j, "mask_transitions", c.mask_transitions);
  read(j, "divergence_factor", c.divergence_factor);
  read(j, "time_limit_s", c.time_limit_s);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (!g.is_object()) throw ConfigError("grid: expected an object");
    read(g, "d", c.d_grid, "grid.");
    read(g, "epochs", c.epoch_grid, "grid.");
    read(g, "learning_rate", c.lr_grid, "grid.");
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open train config " + path.string());
  try {
    return train_config_from_json(nlohmann::json::parse(f));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Optimizer::Optimizer(const TrainConfig& cfg, const model::Params& params)
    : lr_(cfg.learning_rate),
      b1_(cfg.beta1),
      b2_(cfg.beta2),
      eps_(cfg.epsilon),
      alpha_(cfg.lookahead_alpha),
      k_(cfg.lookahead_k),
      slow_(params) {
  for (const auto& [name, m] : params) {
    m_[name] = Matrix::Zero(m.rows(), m.cols());
    v_[name] = Matrix::Zero(m.rows(), m.cols());
  }
}

void Optimizer::step(model::Params& params, const model::Vars& vars) {
  ++t_;
  const double t = static_cast<double>(t_);
  const double bias1 = 1.0 - std::pow(b1_, t), bias2 = 1.0 - std::pow(b2_, t);
  const double rho_inf = 2.0 / (1.0 - b2_) - 1.0;
  const double rho = rho_inf - 2.0 * t * std::pow(b2_, t) / bias2;
  const bool rectify = rho > 4.0;
  const double r = rectify ? std::sqrt((rho - 4) * (rho - 2) * rho_inf / ((rho_inf - 4) * (rho_inf - 2) * rho)) : 0.0;
  for (auto& [name, theta] : params) {
    const Matrix& g = vars.at(name).grad();
    if (g.size() == 0) continue;
    auto& m = m_.at(name);
    auto& v = v_.at(name);
    m = b1_ * m + (1 - b1_) * g;
    v = b2_ * v + (1 - b2_) * g.cwiseAbs2();
    if (rectify)
      theta.array() -= lr_ * r * (m.array() / bias1) / ((v.array() / bias2).sqrt() + eps_);
    else
      theta -= lr_ * (m / bias1);
  }
  if (t_ % k_ == 0)
    for (auto& [name, theta] : params) {
      auto& slow = slow_.at(name);
      slow += alpha_ * (theta - slow);
      theta = slow;
    }
}

namespace {

double accuracy_of(const model::ModelConfig& mc, const model::Params& params, const std::vector<data::Sample>& samples,
                   const crf::TransitionMatrix& tm) {
  if (samples.empty()) return 0.0;
  const auto pred = model::predict(mc, params, samples, tm);
  long right = 0, total = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t t = 0; t < pred[i].size(); ++t) {
      right += pred[i][t] == samples[i].labels[t];
      ++total;
    }
  return 100.0 * static_cast<double>(right) / static_cast<double>(total);
}

crf::TransitionMatrix decoding_matrix(const model::ModelConfig& mc, const model::Params& params,
                                      const std::optional<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>>& forbidden,
                                      bool mask) {
  return model::transitions(mc, params, mask ? forbidden : std::nullopt);
}

}  // namespace

TrainResult train(const TrainInputs& in, const TrainConfig& cfg_in, std::uint64_t seed,
                  const std::optional<model::Checkpoint>& resume, const EpochCallback& on_epoch) {
  TrainConfig cfg = cfg_in;
  cfg.validate();
  if (in.train.empty()) throw PlanError("train: no training windows");
  auto& mc = cfg.model;
  mc.rooms = in.vocabulary.size();
  mc.rssi = static_cast<int>(in.train.front().rssi.cols());
  mc.accel = static_cast<int>(in.train.front().accel.cols());
  mc.steps = in.train.front().steps();
  mc.validate();
  if (cfg.mask_transitions && !in.forbidden) throw ConfigError("mask_transitions: no adjacency available");

  TrainResult result;
  model::Params params;
  int first_epoch = 1;
  if (resume) {
    model::check_params(resume->config, resume->params);
    if (resume->config.d != mc.d || resume->config.variant != mc.variant || resume->config.rooms != mc.rooms)
      throw ConfigError("resume: checkpoint configuration differs from the requested one");
    params = resume->params;
    first_epoch = resume->epochs_completed + 1;
  } else {
    params = model::init_params(mc, derive_seed(seed, {0}));
  }
  result.checkpoint = {mc, in.vocabulary, in.norm, params, first_epoch - 1};
  Optimizer opt(cfg, params);

  std::vector<std::size_t> order(in.train.size());
  std::iota(order.begin(), order.end(), 0);
  double initial_loss = std::numeric_limits<double>::quiet_NaN();
  double best_acc = -1.0;
  int since_best = 0;
  const auto started = std::chrono::steady_clock::now();
  const int last_epoch = first_epoch - 1 + cfg.epochs;
  for (int epoch = first_epoch; epoch <= last_epoch; ++epoch) {
    std::mt19937_64 rng(derive_seed(seed, {1, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    long batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<const data::Sample*> chunk;
      for (std::size_t i = begin; i < std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size)); ++i)
        chunk.push_back(&in.train[order[i]]);
      const auto batch = model::make_batch(std::span<const data::Sample* const>(chunk));
      const auto vars = model::as_parameters(params);
      model::RunOptions ro;
      ro.training = true;
      ro.rng = &rng;
      const auto graph = model::build(mc, vars, batch, ro);
      const auto loss = model::total_loss(mc, vars, graph, batch);
      const double value = loss.value()(0, 0);
      if (std::isnan(initial_loss)) initial_loss = value;
      if (!std::isfinite(value) || value > cfg.divergence_factor * std::max(initial_loss, 1e-12))
        throw DivergenceError(
            "training diverged: loss " + std::to_string(value) + ", first batch " + std::to_string(initial_loss), epoch);
      ad::backward(loss);
      opt.step(params, vars);
      loss_sum += value;
      ++batches;
    }
    for (const auto& [name, m] : params)
      if (!m.allFinite())
        throw DivergenceError("training diverged: non-finite '" + name + "'", epoch);
    EpochLog entry{epoch, loss_sum / static_cast<double>(batches), 0.0};
    const auto tm = decoding_matrix(mc, params, in.forbidden, cfg.mask_transitions);
    entry.val_accuracy = accuracy_of(mc, params, in.validation.empty() ? in.train : in.validation, tm);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (entry.val_accuracy > best_acc) {
      best_acc = entry.val_accuracy;
      since_best = 0;
      result.best_epoch = epoch;
      result.checkpoint.params = params;
    } else if (++since_best >= cfg.patience) {
      result.stopped_early = true;
      result.checkpoint.epochs_completed = epoch;
      break;
    }
    result.checkpoint.epochs_completed = epoch;
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (cfg.time_limit_s > 0 && elapsed >= cfg.time_limit_s) {
      result.stopped_early = epoch < last_epoch;
      break;
    }
  }
  return result;
}

std::string log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch,train_loss,val_accuracy\n";
  for (const auto& e : log)
    out << e.epoch << ',' << data::format_number(e.train_loss) << ',' << data::format_number(e.val_accuracy) << '\n';
  return out.str();
}

void split_validation(std::vector<data::Sample>& train, std::vector<data::Sample>& validation, double fraction,
                      std::uint64_t seed) {
  if (fraction <= 0) return;
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < train.size(); ++i) by_subject[train[i].meta.subject_id].push_back(i);
  std::vector<bool> to_val(train.size(), false);
  for (auto& [subject, idx] : by_subject) {
    std::mt19937_64 rng(derive_seed(seed, {hash_name(subject)}));
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    if (n == 0 && idx.size() >= 2) n = 1;
    for (std::size_t i = 0; i < n; ++i) to_val[idx[i]] = true;
  }
  std::vector<data::Sample> keep;
  for (std::size_t i = 0; i < train.size(); ++i)
    (to_val[i] ? validation : keep).push_back(std::move(train[i]));
  train = std::move(keep);
}

Metrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted, int rooms) {
  if (truth.empty()) throw PlanError("metrics: empty test set");
  require_dims(truth.size() == predicted.size(), "metrics: truth and predictions differ in length");
  Matrix confusion = Matrix::Zero(rooms, rooms);  // truth x predicted
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= rooms || predicted[i] < 0 || predicted[i] >= rooms)
      throw DomainError("metrics: room id out of range");
    confusion(truth[i], predicted[i]) += 1;
  }
  Metrics m;
  m.accuracy = 100.0 * confusion.trace() / static_cast<double>(truth.size());
  double psum = 0, fsum = 0;
  int classes = 0;
  for (int c = 0; c < rooms; ++c) {
    const double tp = confusion(c, c), pred = confusion.col(c).sum(), real = confusion.row(c).sum();
    if (pred == 0 && real == 0) continue;
    ++classes;
    const double p = pred > 0 ? tp / pred : 0.0, r = real > 0 ? tp / real : 0.0;
    psum += p;
    fsum += p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  m.precision = 100.0 * psum / classes;
  m.f1 = 100.0 * fsum / classes;
  return m;
}

Metrics evaluate(const model::Checkpoint& ck, const std::vector<data::Sample>& test,
                 const std::optional<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>>& forbidden) {
  if (test.empty()) throw PlanError("evaluate: empty test set");
  const auto tm = model::transitions(ck.config, ck.params, forbidden);
  const auto pred = model::predict(ck.config, ck.params, test, tm);
  std::vector<int> truth, flat;
  for (std::size_t i = 0; i < test.size(); ++i) {
    truth.insert(truth.end(), test[i].labels.begin(), test[i].labels.end());
    flat.insert(flat.end(), pred[i].begin(), pred[i].end());
  }
  return compute_metrics(truth, flat, ck.config.rooms);
}

double majority_accuracy(const std::vector<data::Sample>& train, const std::vector<data::Sample>& test, int rooms) {
  std::vector<long> counts(static_cast<std::size_t>(rooms), 0);
  for (const auto& s : train)
    for (int l : s.labels) ++counts[static_cast<std::size_t>(l)];
  const auto major = std::max_element(counts.begin(), counts.end()) - counts.begin();
  long right = 0, total = 0;
  for (const auto& s : test)
    for (int l : s.labels) {
      right += l == major;
      ++total;
    }
  if (total == 0) throw PlanError("majority baseline: empty test set");
  return 100.0 * static_cast<double>(right) / static_cast<double>(total);
}

std::string mode_name(CvMode m) {
  switch (m) {
    case CvMode::all_hc: return "all-hc";
    case CvMode::loo_hc: return "loo-hc";
    case CvMode::loo_pd: return "loo-pd";
  }
  return "all-hc";
}

CvMode parse_mode(const std::string& s) {
  for (auto m : {CvMode::all_hc, CvMode::loo_hc, CvMode::loo_pd})
    if (mode_name(m) == s) return m;
  throw ConfigError("cv-mode: expected all-hc, loo-hc or loo-pd, got '" + s + "'");
}

FoldPlan make_plan(CvMode mode, const std::vector<std::string>& subjects) {
  std::vector<std::string> pd, hc;
  for (const auto& s : subjects) {
    const auto g = data::group_of(s);
    if (g == data::SubjectGroup::pd) pd.push_back(s);
    if (g == data::SubjectGroup::hc) hc.push_back(s);
  }
  std::sort(pd.begin(), pd.end());
  std::sort(hc.begin(), hc.end());
  FoldPlan plan;
  plan.mode = mode;
  switch (mode) {
    case CvMode::all_hc:
      if (hc.empty() || pd.empty()) throw PlanError("all-hc needs at least one HC and one PD subject");
      plan.folds.push_back({"ALL-HC", hc, pd});
      break;
    case CvMode::loo_hc:
      if (hc.empty() || pd.empty()) throw PlanError("loo-hc needs at least one HC and one PD subject");
      for (const auto& h : hc) plan.folds.push_back({h, {h}, pd});
      break;
    case CvMode::loo_pd:
      if (pd.size() < 2) throw PlanError("loo-pd needs at least two PD subjects");
      for (const auto& p : pd) {
        Fold f{p, {p}, {}};
        for (const auto& q : pd)
          if (q != p) f.test_subjects.push_back(q);
        plan.folds.push_back(std::move(f));
      }
      break;
  }
  return plan;
}

Metrics mean_of(const std::vector<FoldResult>& folds) {
  Metrics m;
  if (folds.empty()) return m;
  for (const auto& f : folds) {
    m.precision += f.metrics.precision;
    m.accuracy += f.metrics.accuracy;
    m.f1 += f.metrics.f1;
  }
  const double n = static_cast<double>(folds.size());
  return {m.precision / n, m.accuracy / n, m.f1 / n};
}

Metrics std_of(const std::vector<FoldResult>& folds) {
  if (folds.size() < 2) return {};
  const Metrics mu = mean_of(folds);
  Metrics s;
  for (const auto& f : folds) {
    s.precision += std::pow(f.metrics.precision - mu.precision, 2);
    s.accuracy += std::pow(f.metrics.accuracy - mu.accuracy, 2);
    s.f1 += std::pow(f.metrics.f1 - mu.f1, 2);
  }
  const double n = static_cast<double>(folds.size()) - 1.0;
  return {std::sqrt(s.precision / n), std::sqrt(s.accuracy / n), std::sqrt(s.f1 / n)};
}

nlohmann::json to_json(const MetricsReport& r) {
  auto metrics = [](const Metrics& m) {
    return nlohmann::json{{"precision", m.precision}, {"accuracy", m.accuracy}, {"f1", m.f1}};
  };
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    auto j = metrics(f.metrics);
    j["subject"] = f.subject;
    j["majority_accuracy"] = f.majority_accuracy;
    j["best_epoch"] = f.best_epoch;
    folds.push_back(j);
  }
  return {{"mode", mode_name(r.mode)},
          {"variant", model::variant_name(r.variant)},
          {"folds", folds},
          {"mean", metrics(r.mean)},
          {"std", metrics(r.std)}};
}

std::string to_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  out << "mode,variant,fold,precision,accuracy,f1\n";
  auto line = [&](const MetricsReport& r, const std::string& fold, const Metrics& m) {
    out << mode_name(r.mode) << ',' << model::variant_name(r.variant) << ',' << fold << ','
        << data::format_number(m.precision) << ',' << data::format_number(m.accuracy) << ','
        << data::format_number(m.f1) << '\n';
  };
  for (const auto& r : reports) {
    for (const auto& f : r.folds) line(r, f.subject, f.metrics);
    line(r, "mean", r.mean);
    line(r, "std", r.std);
  }
  return out.str();
}

FoldData prepare_fold(const std::vector<data::Stream>& streams, const Fold& fold, const TrainConfig& cfg,
                      const data::RoomVocabulary& vocab, std::uint64_t seed) {
  const auto train_streams = data::select_subjects(streams, fold.train_subjects);
  const auto test_streams = data::select_subjects(streams, fold.test_subjects);
  if (train_streams.empty()) throw PlanError("fold " + fold.name + ": no training recordings");
  if (test_streams.empty()) throw PlanError("fold " + fold.name + ": no test recordings");
  FoldData fd;
  fd.inputs.vocabulary = vocab;
  fd.inputs.norm = data::fit_norm(train_streams);
  fd.inputs.train = data::window(data::apply_norm(train_streams, fd.inputs.norm), cfg.model.steps, cfg.train_stride);
  fd.test = data::window(data::apply_norm(test_streams, fd.inputs.norm), cfg.model.steps, cfg.effective_eval_stride());
  split_validation(fd.inputs.train, fd.inputs.validation, cfg.val_fraction, seed);
  if (fd.inputs.train.empty()) throw PlanError("fold " + fold.name + ": no training windows");
  if (fd.test.empty()) throw PlanError("fold " + fold.name + ": no test windows");
  return fd;
}

MetricsReport cross_validate(const std::vector<data::Stream>& streams, CvMode mode, const TrainConfig& cfg,
                             const data::RoomVocabulary& vocab, std::uint64_t seed, const CvOptions& opt) {
  const auto plan = make_plan(mode, data::subjects_of(streams));
  auto run = [&](std::size_t i) {
    const auto& fold = plan.folds[i];
    const std::uint64_t fold_seed = derive_seed(seed, {static_cast<std::uint64_t>(mode), i});
    auto fd = prepare_fold(streams, fold, cfg, vocab, fold_seed);
    fd.inputs.forbidden = opt.forbidden;
    const auto result = train(fd.inputs, cfg, fold_seed, std::nullopt, opt.on_epoch);
    if (opt.on_fold) opt.on_fold(fold, result);
    FoldResult fr;
    fr.subject = fold.name;
    fr.metrics = evaluate(result.checkpoint, fd.test, cfg.mask_transitions ? opt.forbidden : std::nullopt);
    fr.majority_accuracy = majority_accuracy(fd.inputs.train, fd.test, vocab.size());
    fr.best_epoch = result.best_epoch;
    return fr;
  };
  MetricsReport report;
  report.mode = mode;
  report.variant = cfg.model.variant;
  report.folds.resize(plan.folds.size());
  const std::size_t workers = static_cast<std::size_t>(std::max(1, opt.jobs));
  for (std::size_t begin = 0; begin < plan.folds.size(); begin += workers) {
    std::vector<std::future<FoldResult>> batch;
    for (std::size_t i = begin; i < std::min(plan.folds.size(), begin + workers); ++i)
      batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, run, i));
    for (std::size_t i = 0; i < batch.size(); ++i) report.folds[begin + i] = batch[i].get();
  }
  report.mean = mean_of(report.folds);
  report.std = std_of(report.folds);
  return report;
}

std::vector<MetricsReport> ablate(const std::vector<data::Stream>& streams, CvMode mode, const TrainConfig& cfg,
                                  const data::RoomVocabulary& vocab, std::uint64_t seed, const CvOptions& opt) {
  std::vector<MetricsReport> out;
  for (auto v : model::kAllVariants) {
    TrainConfig c = cfg;
    c.model.variant = v;
    out.push_back(cross_validate(streams, mode, c, vocab, seed, opt));
  }
  return out;
}

std::vector<GridPoint> grid_search(const TrainInputs& inputs, const TrainConfig& cfg, std::uint64_t seed) {
  if (inputs.validation.empty()) throw PlanError("grid search needs validation windows");
  std::vector<GridPoint> out;
  for (int d : cfg.d_grid)
    for (int epochs : cfg.epoch_grid)
      for (double lr : cfg.lr_grid) {
        TrainConfig c = cfg;
        c.model.d = d;
        c.epochs = epochs;
        c.learning_rate = lr;
        GridPoint gp{d, epochs, lr, 0.0};
        try {
          const auto r = train(inputs, c, seed);
          for (const auto& e : r.log) gp.val_accuracy = std::max(gp.val_accuracy, e.val_accuracy);
        } catch (const DivergenceError&) {
          gp.val_accuracy = 0.0;  // a diverging setting simply loses
        }
        out.push_back(gp);
      }
  return out;
}

TrainConfig best_config(const TrainConfig& cfg, const std::vector<GridPoint>& grid) {
  if (grid.empty()) throw PlanError("best_config: empty grid");
  const auto best = std::max_element(grid.begin(), grid.end(),
                                     [](const GridPoint& a, const GridPoint& b) { return a.val_accuracy < b.val_accuracy; });
  TrainConfig c = cfg;
  c.model.d = best->d;
  c.epochs = best->epochs;
  c.learning_rate = best->learning_rate;
  return c;
}

}  // namespace dcmn::training
