#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "dcmn/simulator.hpp"
#include "dcmn/training.hpp"
#include "model_fixture.hpp"

using namespace dcmn;
using namespace dcmn::training;
using dcmn::testing::tiny_config;

namespace {

// Labels are recoverable from the RSSI: feature `room` peaks in that room.
std::vector<data::Sample> learnable_samples(const model::ModelConfig& cfg, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, 0.2);
  std::uniform_int_distribution<int> room(0, cfg.rooms - 1);
  std::vector<data::Sample> out(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& s = out[i];
    s.meta.subject_id = i % 2 ? "HC01" : "HC02";
    s.rssi.resize(cfg.steps, cfg.rssi);
    s.accel.resize(cfg.steps, cfg.accel);
    int r = room(rng);
    for (int t = 0; t < cfg.steps; ++t) {
      if (t > 0 && noise(rng) < 0.05) r = room(rng);
      s.labels.push_back(r);
      for (int j = 0; j < cfg.rssi; ++j) s.rssi(t, j) = noise(rng) + (j == r ? 0.8 : 0.0);
      for (int j = 0; j < cfg.accel; ++j) s.accel(t, j) = noise(rng);
    }
  }
  return out;
}

TrainConfig tiny_train_config() {
  TrainConfig c;
  c.model = tiny_config();
  c.model.dropout = 0.0;
  c.learning_rate = 0.01;
  c.batch_size = 10;
  c.epochs = 150;
  c.patience = 1000;
  c.val_fraction = 0.0;
  return c;
}

TrainInputs inputs_of(std::vector<data::Sample> train, int rooms) {
  TrainInputs in;
  in.train = std::move(train);
  std::vector<std::string> names;
  for (int i = 0; i < rooms; ++i) names.push_back("room" + std::to_string(i));
  in.vocabulary = data::RoomVocabulary(names);
  return in;
}

double training_accuracy(const model::Checkpoint& ck, const std::vector<data::Sample>& s) {
  return evaluate(ck, s).accuracy;
}

}  // namespace

TEST_CASE("huber") {
  CHECK(huber(1.5, 1.5, 1.0) == 0.0);
  for (double tau : {0.3, 1.0, 2.5}) {
    CHECK(huber(tau, 0.0, tau) == doctest::Approx(0.5 * tau * tau).epsilon(1e-15));
    CHECK(tau * (tau - 0.5 * tau) == doctest::Approx(0.5 * tau * tau).epsilon(1e-15));
    const double eps = 1e-6;
    const double slope = (huber(tau + eps, 0.0, tau) - huber(tau - eps, 0.0, tau)) / (2 * eps);
    CHECK(std::abs(slope - tau) < 1e-6);
    // continuity from both sides
    CHECK(std::abs(huber(tau + 1e-12, 0, tau) - huber(tau - 1e-12, 0, tau)) < 1e-11);
  }
  CHECK(huber(3.0, 0.0, 1.0) == doctest::Approx(2.5));
  CHECK(huber(-3.0, 0.0, 1.0) == doctest::Approx(2.5));
  CHECK_THROWS_AS(huber(0, 0, 0), ConfigError);
}

TEST_CASE("perfect backcast leaves only the sequence loss") {
  const auto cfg = tiny_config();
  auto params = dcmn::testing::jittered_params(cfg, 1);
  params["back.wr"].setZero();
  auto samples = dcmn::testing::random_samples(cfg, 3, 2);
  for (auto& s : samples) s.rssi = params["back.br"].replicate(cfg.steps, 1);
  const auto batch = model::make_batch(samples);
  const auto vars = model::as_constants(params);
  const auto g = model::build(cfg, vars, batch, {});
  CHECK(ad::huber_sum(g.backcast, batch.rssi, cfg.tau).value()(0, 0) == 0.0);
  const auto tm = model::transitions(cfg, params);
  double nll = 0;
  for (int b = 0; b < 3; ++b)
    nll += crf::nll(g.emissions.value().middleRows(b * cfg.steps, cfg.steps), samples[static_cast<std::size_t>(b)].labels, tm);
  CHECK(model::total_loss(cfg, vars, g, batch).value()(0, 0) == doctest::Approx(nll / 3).epsilon(1e-12));
}

TEST_CASE("rectified Adam with lookahead") {
  TrainConfig c;
  c.learning_rate = 0.1;
  c.lookahead_k = 1000;
  model::Params p{{"w", Matrix::Constant(1, 1, 1.0)}};
  Optimizer opt(c, p);
  auto grad_step = [&](double g) {
    model::Vars v{{"w", ad::parameter(p["w"])}};
    ad::backward(ad::scale(ad::sum(v["w"]), g));
    opt.step(p, v);
  };
  // while the variance estimate is unreliable the update is plain momentum SGD
  grad_step(2.0);
  CHECK(p["w"](0, 0) == doctest::Approx(1.0 - 0.1 * 2.0).epsilon(1e-15));
  double w = p["w"](0, 0), m = (1 - 0.9) * 2.0, v = (1 - 0.999) * 4.0;
  for (int t = 2; t <= 8; ++t) {
    grad_step(2.0);
    m = 0.9 * m + 0.1 * 2.0;
    v = 0.999 * v + 0.001 * 4.0;
    const double b1 = 1 - std::pow(0.9, t), b2 = 1 - std::pow(0.999, t);
    const double rinf = 2 / 0.001 - 1, rho = rinf - 2 * t * std::pow(0.999, t) / b2;
    if (rho > 4) {
      const double r = std::sqrt((rho - 4) * (rho - 2) * rinf / ((rinf - 4) * (rinf - 2) * rho));
      w -= 0.1 * r * (m / b1) / (std::sqrt(v / b2) + 1e-8);
    } else {
      w -= 0.1 * m / b1;
    }
    CHECK(p["w"](0, 0) == doctest::Approx(w).epsilon(1e-12));
  }

  SUBCASE("lookahead pulls fast weights halfway back") {
    TrainConfig k1;
    k1.learning_rate = 0.1;
    k1.lookahead_k = 1;
    model::Params q{{"w", Matrix::Constant(1, 1, 1.0)}};
    Optimizer o(k1, q);
    model::Vars vv{{"w", ad::parameter(q["w"])}};
    ad::backward(ad::scale(ad::sum(vv["w"]), 2.0));
    o.step(q, vv);
    CHECK(q["w"](0, 0) == doctest::Approx(1.0 - 0.5 * 0.2).epsilon(1e-15));
  }
}

TEST_CASE("overfits a small learnable set") {
  const auto cfg = tiny_train_config();
  const auto samples = learnable_samples(cfg.model, 50, 3);
  const auto result = train(inputs_of(samples, cfg.model.rooms), cfg, 4);
  CHECK(training_accuracy(result.checkpoint, samples) >= 99.0);
  REQUIRE(result.log.size() >= 10);
  const double early = (result.log[0].train_loss + result.log[1].train_loss + result.log[2].train_loss) / 3;
  const double later = (result.log[7].train_loss + result.log[8].train_loss + result.log[9].train_loss) / 3;
  CHECK(later < early);
}

TEST_CASE("training is deterministic and resumable") {
  auto cfg = tiny_train_config();
  cfg.epochs = 4;
  cfg.model.dropout = 0.15;
  const auto samples = learnable_samples(cfg.model, 30, 5);
  const auto in = inputs_of(samples, cfg.model.rooms);
  const auto a = train(in, cfg, 6);
  const auto b = train(in, cfg, 6);
  CHECK(a.log.back().train_loss == b.log.back().train_loss);
  for (const auto& [name, m] : a.checkpoint.params) CHECK(b.checkpoint.params.at(name) == m);

  cfg.epochs = 2;
  const auto more = train(in, cfg, 6, a.checkpoint);
  CHECK(more.log.front().epoch == a.checkpoint.epochs_completed + 1);
  CHECK(more.checkpoint.epochs_completed == a.checkpoint.epochs_completed + 2);
  CHECK(log_csv(more.log).rfind("epoch,train_loss,val_accuracy\n", 0) == 0);
}

TEST_CASE("huge learning rate diverges") {
  auto cfg = tiny_train_config();
  cfg.learning_rate = 1e3;
  cfg.epochs = 50;
  const auto samples = learnable_samples(cfg.model, 30, 7);
  try {
    train(inputs_of(samples, cfg.model.rooms), cfg, 8);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() >= 1);
    CHECK(e.epoch() <= 50);
  }
}

TEST_CASE("metrics") {
  const std::vector<int> truth = {0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
  const std::vector<int> pred = {0, 0, 0, 1, 1, 1, 1, 1, 0, 0};
  auto m = compute_metrics(truth, truth, 2);
  CHECK(m.accuracy == 100.0);
  CHECK(m.precision == 100.0);
  CHECK(m.f1 == 100.0);
  // room 0: tp 3, predicted 5, actual 4; room 1: tp 4, predicted 5, actual 6
  m = compute_metrics(truth, pred, 2);
  CHECK(m.accuracy == doctest::Approx(70.0));
  CHECK(m.precision == doctest::Approx(100.0 * (3.0 / 5 + 4.0 / 5) / 2));
  CHECK(m.f1 == doctest::Approx(100.0 * (2.0 / 3 + 8.0 / 11) / 2));
  // a room never predicted contributes zero precision; absent rooms are ignored
  m = compute_metrics({0, 1}, {0, 0}, 6);
  CHECK(m.precision == doctest::Approx(25.0));
  CHECK(m.f1 == doctest::Approx(100.0 * (2.0 / 3) / 2));
  CHECK_THROWS_AS(compute_metrics({}, {}, 2), PlanError);

  std::vector<FoldResult> folds(2);
  folds[0].metrics = {80, 80, 80};
  folds[1].metrics = {90, 90, 90};
  CHECK(mean_of(folds).accuracy == doctest::Approx(85.0));
  CHECK(std_of(folds).accuracy == doctest::Approx(std::sqrt(50.0)));
  folds.pop_back();
  CHECK(std_of(folds).accuracy == 0.0);
}

TEST_CASE("fold plans") {
  const std::vector<std::string> subjects = {"HC01", "HC02", "HC03", "HC04", "PD01", "PD02", "PD03", "PD04"};
  const auto loo_pd = make_plan(CvMode::loo_pd, subjects);
  CHECK(loo_pd.folds.size() == 4);
  for (const auto& f : loo_pd.folds) {
    CHECK(f.train_subjects.size() == 1);
    CHECK(f.test_subjects.size() == 3);
  }
  CHECK(make_plan(CvMode::all_hc, subjects).folds.size() == 1);
  const auto loo_hc = make_plan(CvMode::loo_hc, subjects);
  CHECK(loo_hc.folds.size() == 4);
  for (auto mode : {CvMode::all_hc, CvMode::loo_hc, CvMode::loo_pd})
    for (const auto& f : make_plan(mode, subjects).folds) {
      for (const auto& s : f.train_subjects)
        CHECK(std::find(f.test_subjects.begin(), f.test_subjects.end(), s) == f.test_subjects.end());
      for (const auto& s : f.test_subjects) CHECK(data::group_of(s) == data::SubjectGroup::pd);
    }
  CHECK_THROWS_AS(make_plan(CvMode::loo_pd, {"HC01", "PD01"}), PlanError);
  CHECK_THROWS_AS(make_plan(CvMode::all_hc, {"HC01", "HC02"}), PlanError);
  CHECK(parse_mode("loo-hc") == CvMode::loo_hc);
  CHECK_THROWS_AS(parse_mode("kfold"), ConfigError);
}

TEST_CASE("validation split") {
  const auto cfg = tiny_train_config();
  auto train_set = learnable_samples(cfg.model, 40, 9);
  std::vector<data::Sample> val;
  split_validation(train_set, val, 0.1, 10);
  CHECK(val.size() == 4);
  CHECK(train_set.size() == 36);
  std::map<std::string, int> per;
  for (const auto& s : val) ++per[s.meta.subject_id];
  CHECK(per["HC01"] == 2);
  CHECK(per["HC02"] == 2);
}

TEST_CASE("train config json") {
  TrainConfig c;
  c.learning_rate = 0.01;
  c.model.variant = model::Variant::no_grn;
  const auto back = train_config_from_json(to_json(c));
  CHECK(back.learning_rate == 0.01);
  CHECK(back.model.variant == model::Variant::no_grn);
  CHECK_THROWS_AS(train_config_from_json({{"learning_rat", 0.1}}), ConfigError);
  try {
    train_config_from_json({{"batch_size", "big"}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("batch_size") != std::string::npos);
  }
  CHECK_THROWS_AS(train_config_from_json({{"tau", -1.0}}), ConfigError);
}

TEST_CASE("cross-validation, ablation and grid on a small simulated home") {
  auto sim = sim::default_sim_config();
  sim.subjects = {sim.subjects[0], sim.subjects[1], sim.subjects[4], sim.subjects[5]};
  sim.days = 1;
  sim.duration_s = 400;
  const auto streams = data::preprocess(sim::make_streams(sim));
  auto cfg = tiny_train_config();
  cfg.model.d = 8;
  cfg.epochs = 2;
  cfg.val_fraction = 0.1;
  cfg.train_stride = 5;

  const auto report = cross_validate(streams, CvMode::loo_pd, cfg, sim.floorplan.rooms, 11);
  CHECK(report.folds.size() == 2);
  for (const auto& f : report.folds) {
    CHECK(f.metrics.accuracy >= 0.0);
    CHECK(f.metrics.accuracy <= 100.0);
  }
  const auto j = to_json(report);
  CHECK(j.at("mode") == "loo-pd");
  CHECK(j.at("folds").size() == 2);
  CHECK(j.at("std").contains("f1"));
  const auto again = cross_validate(streams, CvMode::loo_pd, cfg, sim.floorplan.rooms, 11);
  CHECK(to_json(again) == j);

  cfg.epochs = 1;
  const auto table = ablate(streams, CvMode::all_hc, cfg, sim.floorplan.rooms, 12);
  REQUIRE(table.size() == 6);
  std::set<std::string> names;
  for (const auto& r : table) names.insert(model::variant_name(r.variant));
  CHECK(names.size() == 6);
  const auto csv = to_csv(table);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 6 * 3);

  const auto plan = make_plan(CvMode::all_hc, data::subjects_of(streams));
  const auto fd = prepare_fold(streams, plan.folds[0], cfg, sim.floorplan.rooms, 13);
  cfg.d_grid = {4, 8};
  cfg.epoch_grid = {1};
  cfg.lr_grid = {0.01, 1e-3};
  const auto grid = grid_search(fd.inputs, cfg, 14);
  CHECK(grid.size() == 4);
  const auto best = best_config(cfg, grid);
  double top = 0;
  for (const auto& g : grid) top = std::max(top, g.val_accuracy);
  bool found = false;
  for (const auto& g : grid) found = found || (g.d == best.model.d && g.learning_rate == best.learning_rate && g.val_accuracy == top);
  CHECK(found);

  SUBCASE("evaluation is repeatable") {
    const auto r = train(fd.inputs, cfg, 15);
    const auto m1 = evaluate(r.checkpoint, fd.test), m2 = evaluate(r.checkpoint, fd.test);
    CHECK(m1.accuracy == m2.accuracy);
    CHECK(m1.f1 == m2.f1);
  }
}
