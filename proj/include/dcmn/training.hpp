#pragma once

// Joint CRF + backcast training with RAdam wrapped in Lookahead, early
// stopping on validation accuracy, classification metrics and the
// subject-level cross-validation and ablation harness.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcmn/dataio.hpp"
#include "dcmn/model.hpp"

namespace dcmn::training {

/// 0.5 e^2 for |e| <= tau, tau (|e| - tau/2) beyond.
double huber(double prediction, double target, double tau);

struct TrainConfig {
  model::ModelConfig model;
  int epochs = 200;
  double learning_rate = 1e-4;
  int batch_size = 64;
  int patience = 20;
  double val_fraction = 0.1;
  int train_stride = 1;
  int eval_stride = 0;  // 0 means the window length
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int lookahead_k = 5;
  double lookahead_alpha = 0.5;
  bool mask_transitions = false;  // adjacency mask applied at decoding time
  double divergence_factor = 1e3;  // loss above this multiple of the first batch loss aborts
  double time_limit_s = 0.0;       // 0 disables; stops after the epoch that crosses it
  std::vector<int> d_grid = {128, 256};
  std::vector<int> epoch_grid = {200, 300};
  std::vector<double> lr_grid = {0.01, 1e-4};

  int effective_eval_stride() const { return eval_stride > 0 ? eval_stride : model.steps; }
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Unknown keys are rejected; errors name the offending field.
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::filesystem::path& path);

/// Rectified Adam with a Lookahead slow-weight copy.
class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, const model::Params& params);
  void step(model::Params& params, const model::Vars& vars);
  long steps() const { return t_; }

 private:
  double lr_, b1_, b2_, eps_, alpha_;
  int k_;
  long t_ = 0;
  model::Params m_, v_, slow_;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  model::Checkpoint checkpoint;  // best validation epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
  bool stopped_early = false;
};

struct TrainInputs {
  std::vector<data::Sample> train;
  std::vector<data::Sample> validation;
  data::RoomVocabulary vocabulary;
  data::NormStats norm;
  std::optional<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> forbidden;  // adjacency mask
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Throws DivergenceError (with the epoch) on a non-finite or runaway loss.
TrainResult train(const TrainInputs& inputs, const TrainConfig& cfg, std::uint64_t seed,
                  const std::optional<model::Checkpoint>& resume = std::nullopt,
                  const EpochCallback& on_epoch = {});

std::string log_csv(const std::vector<EpochLog>& log);

/// Per subject, a seeded random `fraction` of windows (rounded, at least one
/// when the subject has two or more) moves to validation.
void split_validation(std::vector<data::Sample>& train, std::vector<data::Sample>& validation, double fraction,
                      std::uint64_t seed);

struct Metrics {
  double precision = 0.0;  // percent, macro over rooms seen in truth or predictions
  double accuracy = 0.0;
  double f1 = 0.0;
};

Metrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted, int rooms);

Metrics evaluate(const model::Checkpoint& ck, const std::vector<data::Sample>& test,
                 const std::optional<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>>& forbidden = std::nullopt);

/// Per-timestep majority-class baseline accuracy (percent): the most frequent
/// training room predicted everywhere.
double majority_accuracy(const std::vector<data::Sample>& train, const std::vector<data::Sample>& test, int rooms);

enum class CvMode { all_hc, loo_hc, loo_pd };
std::string mode_name(CvMode m);
CvMode parse_mode(const std::string& s);

struct Fold {
  std::string name;
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
};

struct FoldPlan {
  CvMode mode = CvMode::all_hc;
  std::vector<Fold> folds;
};

/// Throws PlanError when the subjects cannot support the mode.
FoldPlan make_plan(CvMode mode, const std::vector<std::string>& subjects);

struct FoldResult {
  std::string subject;  // fold name
  Metrics metrics;
  double majority_accuracy = 0.0;
  int best_epoch = 0;
};

struct MetricsReport {
  CvMode mode = CvMode::all_hc;
  model::Variant variant = model::Variant::full;
  std::vector<FoldResult> folds;
  Metrics mean;
  Metrics std;  // sample standard deviation, 0 for a single fold
};

Metrics mean_of(const std::vector<FoldResult>& folds);
Metrics std_of(const std::vector<FoldResult>& folds);

nlohmann::json to_json(const MetricsReport& r);
std::string to_csv(const std::vector<MetricsReport>& reports);

struct FoldData {
  TrainInputs inputs;
  std::vector<data::Sample> test;
};

/// Normalisation fitted on the fold's training streams only, then windowed.
FoldData prepare_fold(const std::vector<data::Stream>& streams, const Fold& fold, const TrainConfig& cfg,
                      const data::RoomVocabulary& vocab, std::uint64_t seed);

struct CvOptions {
  int jobs = 1;
  std::optional<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> forbidden;
  EpochCallback on_epoch;
  std::function<void(const Fold&, const TrainResult&)> on_fold;
};

/// `streams` must already be resampled and imputed (data::preprocess).
MetricsReport cross_validate(const std::vector<data::Stream>& streams, CvMode mode, const TrainConfig& cfg,
                             const data::RoomVocabulary& vocab, std::uint64_t seed, const CvOptions& opt = {});

/// All six variants with identical folds and seeds.
std::vector<MetricsReport> ablate(const std::vector<data::Stream>& streams, CvMode mode, const TrainConfig& cfg,
                                  const data::RoomVocabulary& vocab, std::uint64_t seed, const CvOptions& opt = {});

struct GridPoint {
  int d = 0;
  int epochs = 0;
  double learning_rate = 0.0;
  double val_accuracy = 0.0;
};

/// Trains every (d, epochs, lr) combination on `inputs` and returns the points
/// in grid order; the best is the first with maximal validation accuracy.
std::vector<GridPoint> grid_search(const TrainInputs& inputs, const TrainConfig& cfg, std::uint64_t seed);
TrainConfig best_config(const TrainConfig& cfg, const std::vector<GridPoint>& grid);

}  // namespace dcmn::training
