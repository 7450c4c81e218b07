#pragma once

// The localisation network: per-modality input-attention LSTM encoders, a
// gated residual fusion of RSSI with accelerometer embeddings, multi-head
// self-attention over the window, a residual MLP map and two heads (room
// emissions for the CRF, RSSI backcast).
//
// Everything runs on batches laid out sample-major: row b*T + t holds time
// step t of sample b.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcmn/autodiff.hpp"
#include "dcmn/crf.hpp"
#include "dcmn/dataio.hpp"
#include "dcmn/types.hpp"

namespace dcmn::model {

enum class Variant { full, no_lstm, no_grn, no_transformer, no_crf, no_accel };

inline constexpr std::array<Variant, 6> kAllVariants = {Variant::full,           Variant::no_lstm,
                                                         Variant::no_grn,         Variant::no_transformer,
                                                         Variant::no_crf,         Variant::no_accel};

std::string variant_name(Variant v);
/// Accepts "full", "no-lstm" / "no_lstm", ...; throws ConfigError otherwise.
Variant parse_variant(const std::string& name);

struct ModelConfig {
  int d = 128;
  int heads = 4;
  int steps = data::kDefaultWindow;
  int rssi = data::kRssiFeatures;
  int accel = data::kAccelFeatures;
  int rooms = 6;
  double dropout = 0.15;
  double tau = 1.0;
  Variant variant = Variant::full;

  bool uses_accel() const { return variant != Variant::no_accel; }
  bool uses_crf() const { return variant != Variant::no_crf; }
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

using Params = std::map<std::string, Matrix>;
using Vars = std::map<std::string, ad::Var>;

/// Uniform(+-1/sqrt(fan_in)) weights, zero biases, unit LayerNorm gains,
/// forget-gate bias 1, zero CRF scores.
Params init_params(const ModelConfig& cfg, std::uint64_t seed);
/// Throws DimensionError on a missing, extra or mis-shaped entry.
void check_params(const ModelConfig& cfg, const Params& params);
Vars as_parameters(const Params& params);
Vars as_constants(const Params& params);
std::size_t parameter_count(const Params& params);

struct Batch {
  int size = 0;
  int steps = 0;
  Matrix rssi;              // (size*steps) x r
  Matrix accel;             // (size*steps) x a
  std::vector<int> labels;  // size*steps, may be empty for unlabeled inference
};

Batch make_batch(std::span<const data::Sample> samples);
Batch make_batch(std::span<const data::Sample* const> samples);

struct RunOptions {
  bool training = false;
  bool diagnostics = false;
  std::mt19937_64* rng = nullptr;  // required when training with dropout > 0
};

struct Diagnostics {
  Matrix rssi_attention;   // (B*T) x r input-attention weights
  Matrix accel_attention;  // (B*T) x a
  // maps[b * heads + h] is the T x T self-attention of head h on sample b
  std::vector<Matrix> attention_maps;
};

struct Graph {
  ad::Var emissions;  // (B*T) x n
  ad::Var backcast;   // (B*T) x r
  Diagnostics diagnostics;
};

struct EncoderOutput {
  ad::Var hidden;  // (B*T) x d
  Matrix alpha;    // (B*T) x k, filled when requested
};

// Building blocks. `prefix` selects the parameter group, e.g. "enc_r".

/// Input-attention LSTM over a batch of T x k windows, h_0 = c_0 = 0.
/// Dropout acts on the emitted states only, not on the recurrence.
EncoderOutput attn_lstm_encode(const Vars& p, const std::string& prefix, const Matrix& x, int batch,
                               int steps, const RunOptions& opt, double dropout);
/// Positional encoding plus per-timestep linear embedding (no-lstm variant).
ad::Var linear_encode(const Vars& p, const std::string& prefix, const Matrix& x, int steps, int d);
/// LayerNorm(x + GLU(W1 ELU(W2 x + W3 y + b2) + b1)); `y` may be invalid for the unary form.
ad::Var grn(const Vars& p, const std::string& prefix, const ad::Var& x, const ad::Var& y,
            const RunOptions& opt, double dropout);
/// Unmasked scaled dot-product multi-head self-attention within each sample.
ad::Var self_attend(const Vars& p, const std::string& prefix, const ad::Var& h, int batch, int steps,
                    int heads, std::vector<Matrix>* maps);
/// tanh(LN(x) + MLP(LN(x))) with a 4d Mish hidden layer, x = h_hat + h_tilde.
ad::Var nonlinear_map(const Vars& p, const std::string& prefix, const ad::Var& h_hat,
                      const ad::Var& h_tilde);

Matrix positional_encoding(int steps, int d);

Graph build(const ModelConfig& cfg, const Vars& p, const Batch& batch, const RunOptions& opt);

/// Mean over samples of CRF negative log-likelihood (or cross-entropy for
/// the no-crf variant) plus summed Huber backcast loss against the input RSSI.
ad::Var total_loss(const ModelConfig& cfg, const Vars& p, const Graph& g, const Batch& batch,
                   const crf::TransitionMatrix* mask = nullptr);

struct ForwardOutput {
  Matrix emissions;  // T x n
  Matrix backcast;   // T x r
  Diagnostics diagnostics;
};

/// Single-sample forward pass on plain matrices.
ForwardOutput forward(const ModelConfig& cfg, const Params& params, const data::Sample& sample,
                      bool training = false, std::mt19937_64* rng = nullptr);

crf::TransitionMatrix transitions(const ModelConfig& cfg, const Params& params,
                                  const std::optional<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>>& forbidden = std::nullopt);

/// Viterbi (or per-step argmax for no-crf) room ids for each sample, batched internally.
std::vector<std::vector<int>> predict(const ModelConfig& cfg, const Params& params,
                                      std::span<const data::Sample> samples,
                                      const crf::TransitionMatrix& tm, int batch_size = 64);

struct Checkpoint {
  ModelConfig config;
  data::RoomVocabulary vocabulary;
  data::NormStats norm;
  Params params;
  int epochs_completed = 0;
};

nlohmann::json to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dcmn::model
