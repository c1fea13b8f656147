#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "realcl/errors.hpp"
#include "realcl/fused.hpp"
#include "realcl/loss.hpp"
#include "realcl/numeric.hpp"
#include "realcl/rng.hpp"

namespace realcl {

/// Encoder/projector/classifier stack dimensions. encoder_dims and
/// projector_dims list every layer width including input and output; the
/// classifier is a single linear map from the encoder output.
struct ModelConfig {
  std::vector<int> encoder_dims;    // {input, hidden..., embed}
  std::vector<int> projector_dims;  // {embed, hidden..., proj}
  int num_classes = 2;

  static ModelConfig desk_default(int input_dim) {
    ModelConfig c;
    c.encoder_dims = {input_dim, 64, 32};
    c.projector_dims = {32, 32, 16};
    return c;
  }

  void validate() const {
    if (encoder_dims.size() < 2 || projector_dims.size() < 2) {
      throw ConfigError("model: encoder and projector need >= 2 dims each");
    }
    for (int d : encoder_dims) {
      if (d < 1) throw ConfigError("model: encoder dims must be >= 1");
    }
    for (int d : projector_dims) {
      if (d < 1) throw ConfigError("model: projector dims must be >= 1");
    }
    if (projector_dims.front() != encoder_dims.back()) {
      throw ConfigError("model: projector input must match encoder output");
    }
    if (num_classes != 2) throw ConfigError("model: num_classes must be 2");
  }

  int input_dim() const { return encoder_dims.front(); }
  int embed_dim() const { return encoder_dims.back(); }
  int proj_dim() const { return projector_dims.back(); }

  bool operator==(const ModelConfig&) const = default;
};

namespace detail {

/// Offsets of one affine layer inside the flat parameter array. Weights are
/// row-major [out][in], bias follows.
struct LayerSpan {
  int in = 0;
  int out = 0;
  std::size_t weights = 0;
  std::size_t bias = 0;
  std::size_t end = 0;
};

inline std::vector<LayerSpan> layer_spans(const ModelConfig& cfg) {
  std::vector<LayerSpan> spans;
  std::size_t off = 0;
  auto push = [&](int in, int out) {
    LayerSpan s;
    s.in = in;
    s.out = out;
    s.weights = off;
    s.bias = off + static_cast<std::size_t>(in) * out;
    s.end = s.bias + out;
    off = s.end;
    spans.push_back(s);
  };
  for (std::size_t l = 0; l + 1 < cfg.encoder_dims.size(); ++l) {
    push(cfg.encoder_dims[l], cfg.encoder_dims[l + 1]);
  }
  for (std::size_t l = 0; l + 1 < cfg.projector_dims.size(); ++l) {
    push(cfg.projector_dims[l], cfg.projector_dims[l + 1]);
  }
  push(cfg.encoder_dims.back(), cfg.num_classes);
  return spans;
}

}  // namespace detail

/// All trainable parameters in one flat array, laid out encoder layers,
/// projector layers, classifier.
struct ModelParams {
  ModelConfig config;
  std::vector<double> data;

  std::size_t encoder_layer_count() const {
    return config.encoder_dims.size() - 1;
  }
  std::size_t projector_layer_count() const {
    return config.projector_dims.size() - 1;
  }

  /// [begin, end) of the classifier segment; everything before it is the
  /// encoder + projector.
  std::size_t classifier_begin() const {
    const auto spans = detail::layer_spans(config);
    return spans.back().weights;
  }
};

inline std::size_t param_count(const ModelConfig& cfg) {
  return detail::layer_spans(cfg).back().end;
}

/// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
inline ModelParams init_params(const ModelConfig& cfg, SeededRng& rng) {
  cfg.validate();
  ModelParams p;
  p.config = cfg;
  p.data.assign(param_count(cfg), 0.0);
  for (const auto& span : detail::layer_spans(cfg)) {
    const double bound = std::sqrt(6.0 / (span.in + span.out));
    for (std::size_t i = span.weights; i < span.bias; ++i) {
      p.data[i] = rng.uniform(-bound, bound);
    }
  }
  return p;
}

namespace detail {

inline void affine_forward(const std::vector<double>& data,
                           const LayerSpan& span, const FeatureVec& x,
                           FeatureVec& out) {
  out.assign(span.out, 0.0);
  for (int o = 0; o < span.out; ++o) {
    double acc = data[span.bias + o];
    const double* w = data.data() + span.weights +
                      static_cast<std::size_t>(o) * span.in;
    for (int i = 0; i < span.in; ++i) acc += w[i] * x[i];
    out[o] = acc;
  }
}

// dW/db accumulate into grads; returns dx.
inline FeatureVec affine_backward(const std::vector<double>& data,
                                  const LayerSpan& span, const FeatureVec& x,
                                  const FeatureVec& dout,
                                  std::vector<double>& grads) {
  FeatureVec dx(span.in, 0.0);
  for (int o = 0; o < span.out; ++o) {
    const double g = dout[o];
    grads[span.bias + o] += g;
    const std::size_t row = span.weights + static_cast<std::size_t>(o) * span.in;
    const double* w = data.data() + row;
    double* gw = grads.data() + row;
    for (int i = 0; i < span.in; ++i) {
      gw[i] += g * x[i];
      dx[i] += g * w[i];
    }
  }
  return dx;
}

inline void relu_inplace(FeatureVec& v) {
  for (auto& x : v) x = x > 0.0 ? x : 0.0;
}

}  // namespace detail

/// Per-view activations retained for the backward pass. acts[k] is the
/// input to layer k of the stage; the last entry is the stage output.
/// Rectifier activations are applied between layers, never after the last.
struct ForwardCache {
  std::vector<FeatureVec> encoder_acts;
  std::vector<FeatureVec> projector_acts;
  FeatureVec z;
  double p_norm = 0.0;
};

/// Encoder output h (the pre-projection embedding used by the classifier).
inline FeatureVec encode(const ModelParams& params, const FeatureVec& x,
                         ForwardCache* cache = nullptr) {
  if (static_cast<int>(x.size()) != params.config.input_dim()) {
    throw DimensionMismatch("encode: input dim " + std::to_string(x.size()) +
                            ", model expects " +
                            std::to_string(params.config.input_dim()));
  }
  const auto spans = detail::layer_spans(params.config);
  FeatureVec act = x;
  if (cache) cache->encoder_acts.clear();
  for (std::size_t l = 0; l < params.encoder_layer_count(); ++l) {
    if (cache) cache->encoder_acts.push_back(act);
    FeatureVec next;
    detail::affine_forward(params.data, spans[l], act, next);
    if (l + 1 < params.encoder_layer_count()) detail::relu_inplace(next);
    act = std::move(next);
  }
  if (cache) cache->encoder_acts.push_back(act);
  return act;
}

/// Raw projector output (before normalization).
inline FeatureVec project(const ModelParams& params, const FeatureVec& h,
                          ForwardCache* cache = nullptr) {
  const auto spans = detail::layer_spans(params.config);
  const std::size_t base = params.encoder_layer_count();
  FeatureVec act = h;
  if (cache) cache->projector_acts.clear();
  for (std::size_t l = 0; l < params.projector_layer_count(); ++l) {
    if (cache) cache->projector_acts.push_back(act);
    FeatureVec next;
    detail::affine_forward(params.data, spans[base + l], act, next);
    if (l + 1 < params.projector_layer_count()) detail::relu_inplace(next);
    act = std::move(next);
  }
  if (cache) cache->projector_acts.push_back(act);
  return act;
}

struct EncodeProjectResult {
  FeatureVec h;  // pre-projection embedding
  FeatureVec z;  // unit feature on the hypersphere
};

/// Forward through encoder and projector, normalizing onto the hypersphere.
inline EncodeProjectResult encode_project(const ModelParams& params,
                                          const FeatureVec& x,
                                          ForwardCache* cache = nullptr) {
  EncodeProjectResult r;
  r.h = encode(params, x, cache);
  FeatureVec p = project(params, r.h, cache);
  r.z = l2_normalize(p);
  if (cache) {
    cache->p_norm = norm2(p);
    cache->z = r.z;
  }
  return r;
}

/// Affine classifier head on the embedding h; no softmax.
inline std::array<double, 2> classify(const ModelParams& params,
                                      const FeatureVec& h) {
  if (static_cast<int>(h.size()) != params.config.embed_dim()) {
    throw DimensionMismatch("classify: embedding dim " +
                            std::to_string(h.size()) + ", model expects " +
                            std::to_string(params.config.embed_dim()));
  }
  const auto spans = detail::layer_spans(params.config);
  FeatureVec logits;
  detail::affine_forward(params.data, spans.back(), h, logits);
  return {logits[0], logits[1]};
}

namespace detail {

// Backprop dL/dz through normalization and the projector; returns dL/dh.
inline FeatureVec backward_projection(const ModelParams& params,
                                      const ForwardCache& cache,
                                      const FeatureVec& dz,
                                      std::vector<double>& grads) {
  const auto spans = layer_spans(params.config);
  const std::size_t base = params.encoder_layer_count();
  // z = p / ||p||  =>  dp = (dz - (z . dz) z) / ||p||
  const double zdz = dot(cache.z, dz);
  FeatureVec dact(dz.size());
  for (std::size_t d = 0; d < dz.size(); ++d) {
    dact[d] = (dz[d] - zdz * cache.z[d]) / cache.p_norm;
  }
  for (std::size_t l = params.projector_layer_count(); l-- > 0;) {
    if (l + 1 < params.projector_layer_count()) {
      const FeatureVec& post = cache.projector_acts[l + 1];
      for (std::size_t d = 0; d < dact.size(); ++d) {
        if (post[d] <= 0.0) dact[d] = 0.0;
      }
    }
    dact = affine_backward(params.data, spans[base + l],
                           cache.projector_acts[l], dact, grads);
  }
  return dact;
}

// Backprop dL/dh through the encoder.
inline void backward_encoder(const ModelParams& params,
                             const ForwardCache& cache, FeatureVec dh,
                             std::vector<double>& grads) {
  const auto spans = layer_spans(params.config);
  for (std::size_t l = params.encoder_layer_count(); l-- > 0;) {
    if (l + 1 < params.encoder_layer_count()) {
      const FeatureVec& post = cache.encoder_acts[l + 1];
      for (std::size_t d = 0; d < dh.size(); ++d) {
        if (post[d] <= 0.0) dh[d] = 0.0;
      }
    }
    dh = affine_backward(params.data, spans[l], cache.encoder_acts[l], dh,
                         grads);
  }
}

}  // namespace detail

enum class LossKind { SupconMargin, SupconPlain, CrossEntropy };

struct LossGradResult {
  double loss = 0.0;
  std::vector<double> grads;  // same layout as ModelParams::data
};

/// Loss value only, along the same forward path the gradients use. This is
/// what finite differencing probes.
inline double loss_value(const ModelParams& params,
                         const std::vector<FeatureVec>& views,
                         const std::vector<Label>& labels,
                         const std::vector<FusedPositive>& fused_pos,
                         const std::vector<FusedNegative>& fused_neg,
                         LossKind kind, const LossConfig& loss_cfg) {
  if (views.empty()) throw EmptyBatch("loss_value: no views");
  if (kind == LossKind::CrossEntropy) {
    std::vector<std::array<double, 2>> logits;
    logits.reserve(views.size());
    for (const auto& x : views) {
      logits.push_back(classify(params, encode(params, x)));
    }
    return cross_entropy(logits, labels);
  }
  std::vector<FeatureVec> z;
  z.reserve(views.size());
  for (const auto& x : views) z.push_back(encode_project(params, x).z);
  if (kind == LossKind::SupconPlain) {
    return supcon_plain_loss(z, labels, loss_cfg.tau);
  }
  return supcon_margin_loss(z, labels, fused_pos, fused_neg, loss_cfg);
}

/// Exact gradients of the scalar loss with respect to every parameter, via
/// hand-derived backward passes. Fused features are constants: no gradient
/// flows into them.
inline LossGradResult loss_gradients(const ModelParams& params,
                                     const std::vector<FeatureVec>& views,
                                     const std::vector<Label>& labels,
                                     const std::vector<FusedPositive>& fused_pos,
                                     const std::vector<FusedNegative>& fused_neg,
                                     LossKind kind,
                                     const LossConfig& loss_cfg) {
  if (views.empty()) throw EmptyBatch("loss_gradients: no views");
  LossGradResult result;
  result.grads.assign(params.data.size(), 0.0);

  if (kind == LossKind::CrossEntropy) {
    std::vector<ForwardCache> caches(views.size());
    std::vector<std::array<double, 2>> logits;
    logits.reserve(views.size());
    for (std::size_t i = 0; i < views.size(); ++i) {
      const FeatureVec h = encode(params, views[i], &caches[i]);
      logits.push_back(classify(params, h));
    }
    const auto ce = cross_entropy_eval(logits, labels, /*want_grad=*/true);
    result.loss = ce.loss;
    const auto spans = detail::layer_spans(params.config);
    for (std::size_t i = 0; i < views.size(); ++i) {
      const FeatureVec dlogits{ce.grad_logits[i][0], ce.grad_logits[i][1]};
      const FeatureVec& h = caches[i].encoder_acts.back();
      FeatureVec dh = detail::affine_backward(params.data, spans.back(), h,
                                              dlogits, result.grads);
      detail::backward_encoder(params, caches[i], std::move(dh), result.grads);
    }
  } else {
    std::vector<ForwardCache> caches(views.size());
    std::vector<FeatureVec> z;
    z.reserve(views.size());
    for (std::size_t i = 0; i < views.size(); ++i) {
      z.push_back(encode_project(params, views[i], &caches[i]).z);
    }
    SupconEval eval;
    if (kind == LossKind::SupconPlain) {
      eval = supcon_plain_eval(z, labels, loss_cfg.tau, /*want_grad=*/true);
    } else {
      eval = supcon_margin_eval(z, labels, fused_pos, fused_neg, loss_cfg,
                                /*want_grad=*/true);
    }
    result.loss = eval.loss;
    for (std::size_t i = 0; i < views.size(); ++i) {
      FeatureVec dh = detail::backward_projection(params, caches[i],
                                                  eval.grad_z[i], result.grads);
      detail::backward_encoder(params, caches[i], std::move(dh), result.grads);
    }
  }

  if (!std::isfinite(result.loss)) {
    throw NonFiniteLoss("loss_gradients: loss is not finite");
  }
  for (const double g : result.grads) {
    if (!std::isfinite(g)) {
      throw NonFiniteLoss("loss_gradients: gradient is not finite");
    }
  }
  return result;
}

/// SGD with classical momentum: buffer <- momentum * buffer + grad,
/// param <- param - lr * buffer.
struct OptimState {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::vector<double> velocity;
};

/// Updates parameters in [begin, end); the default covers everything.
/// Stage-2 passes the classifier segment only, leaving encoder bytes
/// untouched.
inline void sgd_step(ModelParams& params, const std::vector<double>& grads,
                     OptimState& opt, std::size_t begin = 0,
                     std::size_t end = static_cast<std::size_t>(-1)) {
  if (grads.size() != params.data.size()) {
    throw DimensionMismatch("sgd_step: gradient/parameter size mismatch");
  }
  if (opt.velocity.empty()) opt.velocity.assign(params.data.size(), 0.0);
  if (opt.velocity.size() != params.data.size()) {
    throw DimensionMismatch("sgd_step: stale optimizer state");
  }
  end = std::min(end, params.data.size());
  for (std::size_t i = begin; i < end; ++i) {
    opt.velocity[i] = opt.momentum * opt.velocity[i] + grads[i];
    params.data[i] -= opt.learning_rate * opt.velocity[i];
  }
}

// ---------------------------------------------------------------------------
// Checkpoint I/O: versioned JSON with nested per-layer arrays. Doubles are
// serialized round-trip exactly, so save/load/save is byte-stable.

namespace detail {

inline nlohmann::json layer_to_json(const std::vector<double>& data,
                                    const LayerSpan& span) {
  nlohmann::json w = nlohmann::json::array();
  for (int o = 0; o < span.out; ++o) {
    nlohmann::json row = nlohmann::json::array();
    for (int i = 0; i < span.in; ++i) {
      row.push_back(data[span.weights + static_cast<std::size_t>(o) * span.in + i]);
    }
    w.push_back(std::move(row));
  }
  nlohmann::json b = nlohmann::json::array();
  for (int o = 0; o < span.out; ++o) b.push_back(data[span.bias + o]);
  return nlohmann::json{{"w", std::move(w)}, {"b", std::move(b)}};
}

inline void layer_from_json(const nlohmann::json& j, std::vector<double>& data,
                            const LayerSpan& span) {
  const auto& w = j.at("w");
  const auto& b = j.at("b");
  if (static_cast<int>(w.size()) != span.out ||
      static_cast<int>(b.size()) != span.out) {
    throw SchemaError("checkpoint: layer shape mismatch");
  }
  for (int o = 0; o < span.out; ++o) {
    const auto& row = w.at(o);
    if (static_cast<int>(row.size()) != span.in) {
      throw SchemaError("checkpoint: layer shape mismatch");
    }
    for (int i = 0; i < span.in; ++i) {
      data[span.weights + static_cast<std::size_t>(o) * span.in + i] =
          row.at(i).get<double>();
    }
    data[span.bias + o] = b.at(o).get<double>();
  }
}

}  // namespace detail

inline constexpr int kCheckpointVersion = 1;

inline std::string checkpoint_to_string(const ModelParams& params,
                                        const nlohmann::json& meta = {}) {
  const auto spans = detail::layer_spans(params.config);
  nlohmann::json j;
  j["format"] = "realcl-checkpoint";
  j["version"] = kCheckpointVersion;
  j["encoder_dims"] = params.config.encoder_dims;
  j["projector_dims"] = params.config.projector_dims;
  j["num_classes"] = params.config.num_classes;
  nlohmann::json enc = nlohmann::json::array();
  nlohmann::json proj = nlohmann::json::array();
  std::size_t s = 0;
  for (std::size_t l = 0; l < params.encoder_layer_count(); ++l, ++s) {
    enc.push_back(detail::layer_to_json(params.data, spans[s]));
  }
  for (std::size_t l = 0; l < params.projector_layer_count(); ++l, ++s) {
    proj.push_back(detail::layer_to_json(params.data, spans[s]));
  }
  j["encoder"] = std::move(enc);
  j["projector"] = std::move(proj);
  j["classifier"] = detail::layer_to_json(params.data, spans.back());
  if (!meta.is_null() && !meta.empty()) j["train_summary"] = meta;
  return j.dump(2) + "\n";
}

struct Checkpoint {
  ModelParams params;
  nlohmann::json meta;
};

inline Checkpoint checkpoint_from_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError("checkpoint: invalid JSON");
  try {
    if (j.at("format").get<std::string>() != "realcl-checkpoint") {
      throw SchemaError("checkpoint: unrecognized format tag");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw SchemaError("checkpoint: unsupported version");
    }
    Checkpoint ck;
    ck.params.config.encoder_dims = j.at("encoder_dims").get<std::vector<int>>();
    ck.params.config.projector_dims =
        j.at("projector_dims").get<std::vector<int>>();
    ck.params.config.num_classes = j.at("num_classes").get<int>();
    ck.params.config.validate();
    ck.params.data.assign(param_count(ck.params.config), 0.0);
    const auto spans = detail::layer_spans(ck.params.config);
    std::size_t s = 0;
    for (const auto& layer : j.at("encoder")) {
      detail::layer_from_json(layer, ck.params.data, spans.at(s++));
    }
    for (const auto& layer : j.at("projector")) {
      detail::layer_from_json(layer, ck.params.data, spans.at(s++));
    }
    if (s != spans.size() - 1) {
      throw SchemaError("checkpoint: layer count mismatch");
    }
    detail::layer_from_json(j.at("classifier"), ck.params.data, spans.back());
    if (j.contains("train_summary")) ck.meta = j.at("train_summary");
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const ModelParams& params, const std::string& path,
                            const nlohmann::json& meta = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open checkpoint for writing: " + path);
  out << checkpoint_to_string(params, meta);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return checkpoint_from_string(text);
}

}  // namespace realcl
