#include "dcmn/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dcmn/nn.hpp"
#include "dcmn/seed.hpp"

namespace dcmn::model {

namespace {

using ad::Var;

const Var& get(const Vars& p, const std::string& key) {
  const auto it = p.find(key);
  if (it == p.end()) throw DimensionError("missing parameter '" + key + "'");
  return it->second;
}

Var dropout_rows(const Var& x, double rate, const RunOptions& opt) {
  if (!opt.training || rate == 0.0) return x;
  if (opt.rng == nullptr) throw ConfigError("training with dropout needs a random generator");
  return ad::mul_const(x, nn::dropout_mask(x.rows(), x.cols(), rate, *opt.rng));
}

Var affine(const Vars& p, const std::string& w, const std::string& b, const Var& x) {
  return ad::add_row(ad::matmul_nt(x, get(p, w)), get(p, b));
}

struct Shape {
  Eigen::Index rows, cols;
};

// Name -> shape for every parameter a configuration owns.
std::map<std::string, Shape> layout(const ModelConfig& cfg) {
  const Eigen::Index d = cfg.d, T = cfg.steps, n = cfg.rooms;
  std::map<std::string, Shape> s;
  auto encoder = [&](const std::string& pre, Eigen::Index k) {
    if (cfg.variant == Variant::no_lstm) {
      s[pre + ".embed_w"] = {d, k};
      s[pre + ".embed_b"] = {1, d};
      return;
    }
    s[pre + ".att_p"] = {T, d};
    s[pre + ".att_w"] = {T, T};
    s[pre + ".att_u"] = {T, T};
    s[pre + ".att_b"] = {1, T};
    s[pre + ".att_v"] = {1, T};
    s[pre + ".lstm_wx"] = {4 * d, k};
    s[pre + ".lstm_wh"] = {4 * d, d};
    s[pre + ".lstm_b"] = {1, 4 * d};
  };
  auto grn_block = [&](const std::string& pre, bool binary) {
    s[pre + ".w2"] = {d, d};
    if (binary) s[pre + ".w3"] = {d, d};
    s[pre + ".b2"] = {1, d};
    s[pre + ".w1"] = {d, d};
    s[pre + ".b1"] = {1, d};
    s[pre + ".glu_wv"] = {d, d};
    s[pre + ".glu_bv"] = {1, d};
    s[pre + ".glu_wg"] = {d, d};
    s[pre + ".glu_bg"] = {1, d};
    s[pre + ".ln_g"] = {1, d};
    s[pre + ".ln_b"] = {1, d};
  };
  encoder("enc_r", cfg.rssi);
  if (cfg.uses_accel()) encoder("enc_a", cfg.accel);
  if (cfg.variant == Variant::no_grn) {
    s["fuse.concat_w"] = {d, 2 * d};
    s["fuse.concat_b"] = {1, d};
  } else {
    grn_block("fuse", cfg.uses_accel());
  }
  if (cfg.variant != Variant::no_transformer)
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wh"}) s[w] = {d, d};
  s["map.ln_g"] = {1, d};
  s["map.ln_b"] = {1, d};
  s["map.mlp_w2"] = {4 * d, d};
  s["map.mlp_b2"] = {1, 4 * d};
  s["map.mlp_w1"] = {d, 4 * d};
  s["map.mlp_b1"] = {1, d};
  s["head.wp"] = {n, d};
  s["head.bp"] = {1, n};
  grn_block("back.grn", true);
  s["back.wr"] = {cfg.rssi, d};
  s["back.br"] = {1, cfg.rssi};
  if (cfg.uses_crf()) {
    s["crf.transitions"] = {n, n};
    s["crf.start"] = {1, n};
  }
  return s;
}

// Fused scaled dot-product attention for all samples and heads at once.
Var attention_core(const Var& q, const Var& k, const Var& v, int batch, int steps, int heads,
                   std::vector<Matrix>* maps) {
  const Eigen::Index d = q.cols(), dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  auto probs = std::make_shared<std::vector<Matrix>>(static_cast<std::size_t>(batch * heads));
  Matrix out(q.rows(), d);
  for (int b = 0; b < batch; ++b)
    for (int h = 0; h < heads; ++h) {
      const auto Q = q.value().block(b * steps, h * dk, steps, dk);
      const auto K = k.value().block(b * steps, h * dk, steps, dk);
      const auto V = v.value().block(b * steps, h * dk, steps, dk);
      Matrix s = (Q * K.transpose()) * scale;
      for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const double mx = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - mx).exp().matrix();
        s.row(r) /= s.row(r).sum();
      }
      out.block(b * steps, h * dk, steps, dk).noalias() = s * V;
      (*probs)[static_cast<std::size_t>(b * heads + h)] = std::move(s);
    }
  if (maps) *maps = *probs;
  return ad::make_op(std::move(out), {q, k, v}, [=](ad::Node& o) {
    auto& nq = *o.inputs[0];
    auto& nk = *o.inputs[1];
    auto& nv = *o.inputs[2];
    Matrix gq = Matrix::Zero(nq.value.rows(), d), gk = gq, gv = gq;
    for (int b = 0; b < batch; ++b)
      for (int h = 0; h < heads; ++h) {
        const Matrix& A = (*probs)[static_cast<std::size_t>(b * heads + h)];
        const auto G = o.grad.block(b * steps, h * dk, steps, dk);
        const auto Q = nq.value.block(b * steps, h * dk, steps, dk);
        const auto K = nk.value.block(b * steps, h * dk, steps, dk);
        const auto V = nv.value.block(b * steps, h * dk, steps, dk);
        gv.block(b * steps, h * dk, steps, dk).noalias() = A.transpose() * G;
        const Matrix ga = G * V.transpose();
        Matrix gs = A.cwiseProduct(ga);
        const Vector rows = gs.rowwise().sum();
        gs -= A.cwiseProduct(rows.replicate(1, A.cols()));
        gs *= scale;
        gq.block(b * steps, h * dk, steps, dk).noalias() = gs * K;
        gk.block(b * steps, h * dk, steps, dk).noalias() = gs.transpose() * Q;
      }
    if (nq.needs_grad) nq.accumulate(gq);
    if (nk.needs_grad) nk.accumulate(gk);
    if (nv.needs_grad) nv.accumulate(gv);
  });
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_lstm: return "no-lstm";
    case Variant::no_grn: return "no-grn";
    case Variant::no_transformer: return "no-transformer";
    case Variant::no_crf: return "no-crf";
    case Variant::no_accel: return "no-accel";
  }
  return "full";
}

Variant parse_variant(const std::string& name) {
  std::string n = name;
  std::replace(n.begin(), n.end(), '_', '-');
  for (auto v : kAllVariants)
    if (variant_name(v) == n) return v;
  throw ConfigError("ablation: unknown variant '" + name +
                    "' (expected full, no-lstm, no-grn, no-transformer, no-crf, no-accel)");
}

void ModelConfig::validate() const {
  if (d < 1) throw ConfigError("d: must be >= 1");
  if (heads < 1 || d % heads != 0) throw ConfigError("heads: must divide d");
  if (steps < 1) throw ConfigError("steps: must be >= 1");
  if (rssi < 1 || accel < 1) throw ConfigError("feature counts must be >= 1");
  if (rooms < 1) throw ConfigError("rooms: must be >= 1");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("dropout: must lie in [0, 1)");
  if (!(tau > 0)) throw ConfigError("tau: must be > 0");
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"d", cfg.d},         {"heads", cfg.heads},     {"steps", cfg.steps},
          {"rssi", cfg.rssi},   {"accel", cfg.accel},     {"rooms", cfg.rooms},
          {"dropout", cfg.dropout}, {"tau", cfg.tau}, {"variant", variant_name(cfg.variant)}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.d = j.value("d", c.d);
    c.heads = j.value("heads", c.heads);
    c.steps = j.value("steps", c.steps);
    c.rssi = j.value("rssi", c.rssi);
    c.accel = j.value("accel", c.accel);
    c.rooms = j.value("rooms", c.rooms);
    c.dropout = j.value("dropout", c.dropout);
    c.tau = j.value("tau", c.tau);
    c.variant = parse_variant(j.value("variant", std::string("full")));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

Params init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Params p;
  for (const auto& [name, shape] : layout(cfg)) {
    // each tensor gets its own stream so adding a parameter never shifts the others
    std::mt19937_64 rng(derive_seed(seed, {hash_name(name)}));
    Matrix m;
    const std::string leaf = name.substr(name.rfind('.') + 1);
    if (name.rfind("crf.", 0) == 0)
      m = Matrix::Zero(shape.rows, shape.cols);
    else if (leaf == "ln_g")
      m = Matrix::Ones(shape.rows, shape.cols);
    else if (leaf == "att_v")
      m = nn::init_uniform(shape.rows, shape.cols, shape.cols, rng);
    else if (shape.rows == 1)
      m = Matrix::Zero(shape.rows, shape.cols);
    else
      m = nn::init_uniform(shape.rows, shape.cols, shape.cols, rng);
    if (leaf == "lstm_b") m.middleCols(cfg.d, cfg.d).setOnes();  // forget gate starts open
    p[name] = std::move(m);
  }
  return p;
}

void check_params(const ModelConfig& cfg, const Params& params) {
  const auto want = layout(cfg);
  for (const auto& [name, shape] : want) {
    const auto it = params.find(name);
    if (it == params.end()) throw DimensionError("missing parameter '" + name + "'");
    if (it->second.rows() != shape.rows || it->second.cols() != shape.cols)
      throw DimensionError("parameter '" + name + "' is " + std::to_string(it->second.rows()) + "x" +
                           std::to_string(it->second.cols()) + ", expected " + std::to_string(shape.rows) +
                           "x" + std::to_string(shape.cols));
  }
  for (const auto& [name, m] : params)
    if (!want.count(name)) throw DimensionError("unexpected parameter '" + name + "'");
}

Vars as_parameters(const Params& params) {
  Vars v;
  for (const auto& [k, m] : params) v.emplace(k, ad::parameter(m));
  return v;
}

Vars as_constants(const Params& params) {
  Vars v;
  for (const auto& [k, m] : params) v.emplace(k, ad::constant(m));
  return v;
}

std::size_t parameter_count(const Params& params) {
  std::size_t n = 0;
  for (const auto& [k, m] : params) n += static_cast<std::size_t>(m.size());
  return n;
}

Batch make_batch(std::span<const data::Sample* const> samples) {
  Batch b;
  if (samples.empty()) throw DimensionError("make_batch: no samples");
  b.size = static_cast<int>(samples.size());
  b.steps = static_cast<int>(samples.front()->rssi.rows());
  const auto r = samples.front()->rssi.cols(), a = samples.front()->accel.cols();
  b.rssi.resize(b.size * b.steps, r);
  b.accel.resize(b.size * b.steps, a);
  bool labeled = true;
  for (const auto* s : samples) labeled = labeled && static_cast<int>(s->labels.size()) == b.steps;
  for (int i = 0; i < b.size; ++i) {
    const auto& s = *samples[static_cast<std::size_t>(i)];
    if (s.rssi.rows() != b.steps || s.accel.rows() != b.steps || s.rssi.cols() != r || s.accel.cols() != a)
      throw DimensionError("make_batch: samples differ in shape");
    b.rssi.middleRows(i * b.steps, b.steps) = s.rssi;
    b.accel.middleRows(i * b.steps, b.steps) = s.accel;
    if (labeled) b.labels.insert(b.labels.end(), s.labels.begin(), s.labels.end());
  }
  return b;
}

Batch make_batch(std::span<const data::Sample> samples) {
  std::vector<const data::Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return make_batch(std::span<const data::Sample* const>(ptrs));
}

EncoderOutput attn_lstm_encode(const Vars& p, const std::string& prefix, const Matrix& x, int batch,
                               int steps, const RunOptions& opt, double dropout) {
  const Var& P = get(p, prefix + ".att_p");
  const Var& W = get(p, prefix + ".att_w");
  const Var& U = get(p, prefix + ".att_u");
  const Var& wx = get(p, prefix + ".lstm_wx");
  const Var& wh = get(p, prefix + ".lstm_wh");
  const Var& lb = get(p, prefix + ".lstm_b");
  const Eigen::Index k = x.cols(), d = wh.cols();
  require_dims(x.rows() == static_cast<Eigen::Index>(batch) * steps, prefix + ": input rows != batch*steps");
  require_dims(wx.cols() == k && W.rows() == steps, prefix + ": input shape does not match parameters");

  // Row b*k + j holds the whole window of feature j in sample b.
  Matrix series(batch * k, steps);
  for (int b = 0; b < batch; ++b)
    series.middleRows(b * k, k) = x.middleRows(b * steps, steps).transpose();
  const Var series_term = ad::add_row(ad::matmul_nt(ad::constant(std::move(series)), U), get(p, prefix + ".att_b"));
  const Var state_proj = ad::matmul(W, P);  // T x d: W_e applied after projecting h to length T
  std::vector<Eigen::Index> owner(static_cast<std::size_t>(batch * k));
  for (Eigen::Index i = 0; i < batch * k; ++i) owner[static_cast<std::size_t>(i)] = i / k;

  EncoderOutput out;
  if (opt.diagnostics) out.alpha.resize(x.rows(), k);
  Var h, c;
  std::vector<Var> states;
  states.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    Matrix xt(batch, k);
    for (int b = 0; b < batch; ++b) xt.row(b) = x.row(b * steps + t);
    Var pre = series_term;
    if (h.valid()) pre = ad::add(ad::gather_rows(ad::matmul_nt(h, state_proj), owner), pre);
    const Var scores = ad::reshape(ad::matmul_nt(ad::tanh(pre), get(p, prefix + ".att_v")), batch, k);
    const Var alpha = ad::softmax_rows(scores);
    if (opt.diagnostics)
      for (int b = 0; b < batch; ++b) out.alpha.row(b * steps + t) = alpha.value().row(b);
    const Var xin = ad::mul_const(alpha, xt);

    Var gates = ad::matmul_nt(xin, wx);
    if (h.valid()) gates = ad::add(gates, ad::matmul_nt(h, wh));
    gates = ad::add_row(gates, lb);
    const Var ig = ad::sigmoid(ad::slice_cols(gates, 0, d));
    const Var fg = ad::sigmoid(ad::slice_cols(gates, d, d));
    const Var gg = ad::tanh(ad::slice_cols(gates, 2 * d, d));
    const Var og = ad::sigmoid(ad::slice_cols(gates, 3 * d, d));
    c = c.valid() ? ad::add(ad::mul(fg, c), ad::mul(ig, gg)) : ad::mul(ig, gg);
    h = ad::mul(og, ad::tanh(c));
    states.push_back(h);
  }
  // time-major stack -> sample-major rows
  const Var stacked = ad::concat_rows(states);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(batch * steps));
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < steps; ++t) order[static_cast<std::size_t>(b * steps + t)] = t * batch + b;
  out.hidden = dropout_rows(ad::gather_rows(stacked, std::move(order)), dropout, opt);
  return out;
}

Matrix positional_encoding(int steps, int d) {
  Matrix pe(steps, d);
  for (int t = 0; t < steps; ++t)
    for (int i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / d);
      pe(t, i) = i % 2 == 0 ? std::sin(t * rate) : std::cos(t * rate);
    }
  return pe;
}

Var linear_encode(const Vars& p, const std::string& prefix, const Matrix& x, int steps, int d) {
  const Eigen::Index batch = x.rows() / steps;
  const Matrix pe = positional_encoding(steps, d);
  Matrix tiled(x.rows(), d);
  for (Eigen::Index b = 0; b < batch; ++b) tiled.middleRows(b * steps, steps) = pe;
  return ad::add(affine(p, prefix + ".embed_w", prefix + ".embed_b", ad::constant(x)), ad::constant(std::move(tiled)));
}

Var grn(const Vars& p, const std::string& prefix, const Var& x, const Var& y, const RunOptions& opt,
        double dropout) {
  Var inner = ad::matmul_nt(x, get(p, prefix + ".w2"));
  if (y.valid()) inner = ad::add(inner, ad::matmul_nt(y, get(p, prefix + ".w3")));
  const Var xi2 = ad::elu(ad::add_row(inner, get(p, prefix + ".b2")));
  const Var xi1 = dropout_rows(affine(p, prefix + ".w1", prefix + ".b1", xi2), dropout, opt);
  const Var value = affine(p, prefix + ".glu_wv", prefix + ".glu_bv", xi1);
  const Var gate = ad::sigmoid(affine(p, prefix + ".glu_wg", prefix + ".glu_bg", xi1));
  return ad::layer_norm_rows(ad::add(x, ad::mul(value, gate)), get(p, prefix + ".ln_g"), get(p, prefix + ".ln_b"),
                             nn::kLayerNormEpsilon);
}

Var self_attend(const Vars& p, const std::string& prefix, const Var& h, int batch, int steps, int heads,
                std::vector<Matrix>* maps) {
  require_dims(h.cols() % heads == 0, "self_attend: heads must divide d");
  const Var q = ad::matmul_nt(h, get(p, prefix + ".wq"));
  const Var k = ad::matmul_nt(h, get(p, prefix + ".wk"));
  const Var v = ad::matmul_nt(h, get(p, prefix + ".wv"));
  return ad::matmul_nt(attention_core(q, k, v, batch, steps, heads, maps), get(p, prefix + ".wh"));
}

Var nonlinear_map(const Vars& p, const std::string& prefix, const Var& h_hat, const Var& h_tilde) {
  const Var z = ad::layer_norm_rows(ad::add(h_hat, h_tilde), get(p, prefix + ".ln_g"), get(p, prefix + ".ln_b"),
                                    nn::kLayerNormEpsilon);
  const Var hidden = ad::mish(affine(p, prefix + ".mlp_w2", prefix + ".mlp_b2", z));
  return ad::tanh(ad::add(z, affine(p, prefix + ".mlp_w1", prefix + ".mlp_b1", hidden)));
}

Graph build(const ModelConfig& cfg, const Vars& p, const Batch& batch, const RunOptions& opt) {
  require_dims(batch.steps == cfg.steps, "batch window length " + std::to_string(batch.steps) +
                                             " != model steps " + std::to_string(cfg.steps));
  require_dims(batch.rssi.cols() == cfg.rssi && batch.accel.cols() == cfg.accel,
               "batch feature counts do not match the model");
  Graph g;
  auto encode = [&](const std::string& pre, const Matrix& x, Matrix* alpha) {
    if (cfg.variant == Variant::no_lstm) return linear_encode(p, pre, x, cfg.steps, cfg.d);
    auto enc = attn_lstm_encode(p, pre, x, batch.size, cfg.steps, opt, cfg.dropout);
    if (opt.diagnostics) *alpha = std::move(enc.alpha);
    return enc.hidden;
  };
  const Var hr = encode("enc_r", batch.rssi, &g.diagnostics.rssi_attention);
  Var h_hat;
  if (!cfg.uses_accel()) {
    h_hat = grn(p, "fuse", hr, Var(), opt, cfg.dropout);
  } else {
    const Var ha = encode("enc_a", batch.accel, &g.diagnostics.accel_attention);
    if (cfg.variant == Variant::no_grn) {
      const std::array<Var, 2> parts = {hr, ha};
      h_hat = affine(p, "fuse.concat_w", "fuse.concat_b", ad::concat_cols(parts));
    } else {
      h_hat = grn(p, "fuse", hr, ha, opt, cfg.dropout);
    }
  }
  Var h_tilde = h_hat;
  if (cfg.variant != Variant::no_transformer)
    h_tilde = dropout_rows(self_attend(p, "attn", h_hat, batch.size, cfg.steps, cfg.heads,
                                       opt.diagnostics ? &g.diagnostics.attention_maps : nullptr),
                           cfg.dropout, opt);
  const Var h_check = nonlinear_map(p, "map", h_hat, h_tilde);
  g.emissions = affine(p, "head.wp", "head.bp", h_check);
  g.backcast = affine(p, "back.wr", "back.br", grn(p, "back.grn", h_check, h_check, opt, cfg.dropout));
  return g;
}

Var total_loss(const ModelConfig& cfg, const Vars& p, const Graph& g, const Batch& batch,
               const crf::TransitionMatrix* mask) {
  require_dims(static_cast<int>(batch.labels.size()) == batch.size * batch.steps, "total_loss: batch is unlabeled");
  Var label_loss;
  if (cfg.uses_crf()) {
    label_loss = mask && mask->forbidden.size() > 0
                     ? crf::nll_op(g.emissions, get(p, "crf.transitions"), get(p, "crf.start"), batch.labels,
                                   batch.steps, mask->forbidden)
                     : crf::nll_op(g.emissions, get(p, "crf.transitions"), get(p, "crf.start"), batch.labels,
                                   batch.steps);
  } else {
    label_loss = ad::cross_entropy_rows(g.emissions, batch.labels);
  }
  const Var back = ad::huber_sum(g.backcast, batch.rssi, cfg.tau);
  return ad::scale(ad::add(label_loss, back), 1.0 / batch.size);
}

ForwardOutput forward(const ModelConfig& cfg, const Params& params, const data::Sample& sample, bool training,
                      std::mt19937_64* rng) {
  const std::array<const data::Sample*, 1> one = {&sample};
  const Batch batch = make_batch(std::span<const data::Sample* const>(one));
  RunOptions opt;
  opt.training = training;
  opt.diagnostics = true;
  opt.rng = rng;
  auto g = build(cfg, as_constants(params), batch, opt);
  return {g.emissions.value(), g.backcast.value(), std::move(g.diagnostics)};
}

crf::TransitionMatrix transitions(const ModelConfig& cfg, const Params& params,
                                  const std::optional<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>>& forbidden) {
  auto tm = crf::TransitionMatrix::zeros(cfg.rooms);
  if (cfg.uses_crf()) {
    tm.scores = params.at("crf.transitions");
    tm.start = params.at("crf.start").transpose();
  }
  if (forbidden) {
    require_dims(forbidden->rows() == cfg.rooms && forbidden->cols() == cfg.rooms, "forbidden mask shape");
    tm.forbidden = *forbidden;
  }
  return tm;
}

std::vector<std::vector<int>> predict(const ModelConfig& cfg, const Params& params,
                                      std::span<const data::Sample> samples, const crf::TransitionMatrix& tm,
                                      int batch_size) {
  const Vars p = as_constants(params);
  std::vector<std::vector<int>> out;
  out.reserve(samples.size());
  for (std::size_t begin = 0; begin < samples.size(); begin += static_cast<std::size_t>(batch_size)) {
    const auto chunk = samples.subspan(begin, std::min<std::size_t>(static_cast<std::size_t>(batch_size), samples.size() - begin));
    const Batch batch = make_batch(chunk);
    const Matrix e = build(cfg, p, batch, {}).emissions.value();
    for (int b = 0; b < batch.size; ++b) {
      const Matrix eb = e.middleRows(b * batch.steps, batch.steps);
      if (cfg.uses_crf()) {
        out.push_back(crf::viterbi(eb, tm).labels);
        continue;
      }
      std::vector<int> labels(static_cast<std::size_t>(batch.steps));
      for (int t = 0; t < batch.steps; ++t) eb.row(t).maxCoeff(&labels[static_cast<std::size_t>(t)]);
      out.push_back(std::move(labels));
    }
  }
  return out;
}

nlohmann::json to_json(const Checkpoint& ck) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, m] : ck.params)
    params[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
  std::vector<std::string> rooms;
  for (int i = 0; i < ck.vocabulary.size(); ++i) rooms.push_back(ck.vocabulary.name(i));
  return {{"format", "dcmn-checkpoint"}, {"version", 1},           {"config", to_json(ck.config)},
          {"vocabulary", rooms},         {"norm_stats", ck.norm.to_json()}, {"params", params},
          {"epochs_completed", ck.epochs_completed}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", std::string()) != "dcmn-checkpoint")
    throw ConfigError("checkpoint: not a dcmn checkpoint");
  if (j.value("version", 0) != 1) throw ConfigError("checkpoint: unsupported version");
  Checkpoint ck;
  try {
    ck.config = model_config_from_json(j.at("config"));
    ck.vocabulary = data::RoomVocabulary(j.at("vocabulary").get<std::vector<std::string>>());
    ck.norm = data::NormStats::from_json(j.at("norm_stats"));
    for (const auto& [name, v] : j.at("params").items()) {
      const auto rows = v.at("rows").get<Eigen::Index>(), cols = v.at("cols").get<Eigen::Index>();
      const auto values = v.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(values.size()) != rows * cols)
        throw DimensionError("checkpoint: parameter '" + name + "' has the wrong element count");
      ck.params[name] = Eigen::Map<const Matrix>(values.data(), rows, cols);
    }
    ck.epochs_completed = j.value("epochs_completed", 0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
  if (ck.vocabulary.size() != ck.config.rooms) throw DimensionError("checkpoint: vocabulary size != rooms");
  check_params(ck.config, ck.params);
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write checkpoint " + path.string());
  f << to_json(ck).dump() << '\n';
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("checkpoint: cannot open " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace dcmn::model
