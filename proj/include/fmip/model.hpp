// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmip/autodiff.hpp"
#include "fmip/graph.hpp"
#include "fmip/rng.hpp"

namespace fmip {

struct ModelConfig {
  int layers = 12;
  int hidden = 64;
  int int_categories = 2;  // K + 1
  bool normalize = true;   // graph feature scaling; must match train and inference
};

/// Network output for one (or one batch of) augmented graph(s).
struct ModelOutput {
  Mat int_logits;   // q x (K+1)
  Vec cont_values;  // n - q
};

// ---- parameter containers, templated so matrices and tape vars share shape

template <typename T>
struct LinearT {
  T w, b;  // w: in x out, b: 1 x out
};

template <typename T>
struct LayerNormT {
  T g, b;  // 1 x h each
};

template <typename T>
struct MlpT {
  LinearT<T> l1, l2;
};

// One gated message-passing block. BiConv shares the architecture but has a
// single source partition, so s2 is absent (has_s2 = false).
template <typename T>
struct ConvT {
  LinearT<T> t, s1, s2, e, fin, fg, o1, o2;
  LayerNormT<T> pn, pc, out;
  bool has_s2 = true;
};

template <typename T>
struct LayerT {
  MlpT<T> time, con_mlp, ivar_mlp, cvar_mlp;
  ConvT<T> tri, bi_ivar, bi_cvar;
};

template <typename T>
struct ParamsT {
  MlpT<T> enc_ivar, enc_cvar, enc_con;
  std::vector<LayerT<T>> layers;
  MlpT<T> head_int, head_cont;
};

using ModelParams = ParamsT<Mat>;
using BoundParams = ParamsT<ad::Var>;

namespace detail {

template <typename T, typename F>
void visit_linear(const std::string& name, LinearT<T>& l, F&& f) {
  f(name + ".w", l.w);
  f(name + ".b", l.b);
}

template <typename T, typename F>
void visit_ln(const std::string& name, LayerNormT<T>& l, F&& f) {
  f(name + ".g", l.g);
  f(name + ".b", l.b);
}

template <typename T, typename F>
void visit_mlp(const std::string& name, MlpT<T>& m, F&& f) {
  visit_linear(name + ".l1", m.l1, f);
  visit_linear(name + ".l2", m.l2, f);
}

template <typename T, typename F>
void visit_conv(const std::string& name, ConvT<T>& c, F&& f) {
  visit_linear(name + ".t", c.t, f);
  visit_linear(name + ".s1", c.s1, f);
  if (c.has_s2) visit_linear(name + ".s2", c.s2, f);
  visit_linear(name + ".e", c.e, f);
  visit_linear(name + ".final", c.fin, f);
  visit_linear(name + ".fg", c.fg, f);
  visit_linear(name + ".o1", c.o1, f);
  visit_linear(name + ".o2", c.o2, f);
  visit_ln(name + ".ln_pn", c.pn, f);
  visit_ln(name + ".ln_pc", c.pc, f);
  visit_ln(name + ".ln_out", c.out, f);
}

}  // namespace detail

/// Calls f(name, entry&) for every parameter in a fixed, documented order.
template <typename T, typename F>
void visit_params(ParamsT<T>& p, F&& f) {
  detail::visit_mlp<T>("enc_ivar", p.enc_ivar, f);
  detail::visit_mlp<T>("enc_cvar", p.enc_cvar, f);
  detail::visit_mlp<T>("enc_con", p.enc_con, f);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const std::string base = "layer" + std::to_string(i);
    detail::visit_mlp<T>(base + ".time", p.layers[i].time, f);
    detail::visit_conv<T>(base + ".tri", p.layers[i].tri, f);
    detail::visit_conv<T>(base + ".bi_ivar", p.layers[i].bi_ivar, f);
    detail::visit_conv<T>(base + ".bi_cvar", p.layers[i].bi_cvar, f);
    detail::visit_mlp<T>(base + ".mlp_con", p.layers[i].con_mlp, f);
    detail::visit_mlp<T>(base + ".mlp_ivar", p.layers[i].ivar_mlp, f);
    detail::visit_mlp<T>(base + ".mlp_cvar", p.layers[i].cvar_mlp, f);
  }
  detail::visit_mlp<T>("head_int", p.head_int, f);
  detail::visit_mlp<T>("head_cont", p.head_cont, f);
}

namespace detail {

inline Mat uniform_fan_in(Rng& rng, int in, int out) {
  const double a = 1.0 / std::sqrt(static_cast<double>(std::max(in, 1)));
  Mat m(in, out);
  for (int i = 0; i < in; ++i)
    for (int j = 0; j < out; ++j) m(i, j) = (rng.uniform() * 2.0 - 1.0) * a;
  return m;
}

inline LinearT<Mat> init_linear(Rng& rng, int in, int out) {
  return {uniform_fan_in(rng, in, out), Mat::Zero(1, out)};
}

inline LayerNormT<Mat> init_ln(int h) { return {Mat::Ones(1, h), Mat::Zero(1, h)}; }

inline MlpT<Mat> init_mlp(Rng& rng, int in, int hidden, int out) {
  return {init_linear(rng, in, hidden), init_linear(rng, hidden, out)};
}

inline ConvT<Mat> init_conv(Rng& rng, int h, bool has_s2) {
  ConvT<Mat> c;
  c.has_s2 = has_s2;
  c.t = init_linear(rng, h, h);
  c.s1 = init_linear(rng, h, h);
  if (has_s2) c.s2 = init_linear(rng, h, h);
  c.e = init_linear(rng, 1, h);
  c.fin = init_linear(rng, h, h);
  c.fg = init_linear(rng, 2 * h, h);
  c.o1 = init_linear(rng, 2 * h, h);
  c.o2 = init_linear(rng, h, h);
  c.pn = init_ln(h);
  c.pc = init_ln(h);
  c.out = init_ln(h);
  return c;
}

}  // namespace detail

inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.layers < 1 || cfg.hidden < 1 || cfg.int_categories < 2)
    throw std::invalid_argument("ModelConfig: layers/hidden/int_categories out of range");
  Rng rng(seed);
  const int h = cfg.hidden;
  ModelParams p;
  p.enc_ivar = detail::init_mlp(rng, 6, h, h);
  p.enc_cvar = detail::init_mlp(rng, 6, h, h);
  p.enc_con = detail::init_mlp(rng, 1, h, h);
  p.layers.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l) {
    p.layers[l].time = detail::init_mlp(rng, h, h, h);
    p.layers[l].tri = detail::init_conv(rng, h, /*has_s2=*/true);
    p.layers[l].bi_ivar = detail::init_conv(rng, h, /*has_s2=*/false);
    p.layers[l].bi_cvar = detail::init_conv(rng, h, /*has_s2=*/false);
    p.layers[l].con_mlp = detail::init_mlp(rng, h, h, h);
    p.layers[l].ivar_mlp = detail::init_mlp(rng, h, h, h);
    p.layers[l].cvar_mlp = detail::init_mlp(rng, h, h, h);
  }
  p.head_int = detail::init_mlp(rng, h, h, cfg.int_categories);
  p.head_cont = detail::init_mlp(rng, h, h, 1);
  return p;
}

/// Binds parameter matrices onto a tape (with or without gradients).
inline BoundParams bind_params(ad::Tape& tape, const ModelParams& params, bool requires_grad) {
  BoundParams b;
  b.layers.resize(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    b.layers[i].tri.has_s2 = params.layers[i].tri.has_s2;
    b.layers[i].bi_ivar.has_s2 = params.layers[i].bi_ivar.has_s2;
    b.layers[i].bi_cvar.has_s2 = params.layers[i].bi_cvar.has_s2;
  }
  std::vector<const Mat*> mats;
  visit_params(const_cast<ModelParams&>(params),
               [&](const std::string&, Mat& m) { mats.push_back(&m); });
  std::vector<ad::Var*> vars;
  visit_params(b, [&](const std::string&, ad::Var& v) { vars.push_back(&v); });
  for (std::size_t i = 0; i < mats.size(); ++i) *vars[i] = ad::input(tape, *mats[i], requires_grad);
  return b;
}

// Sinusoidal positional encoding of t*1000; the scaling constant widens the
// [0,1] time interval so nearby schedule times stay distinguishable.
inline Vec time_embedding(double t, int h) {
  if (h % 2 != 0) throw std::invalid_argument("time_embedding: width must be even");
  Vec e(h);
  const double scaled = t * 1000.0;
  for (int i = 0; i < h / 2; ++i) {
    const double denom = std::pow(10000.0, (2.0 * i) / static_cast<double>(h));
    e[2 * i] = std::sin(scaled / denom);
    e[2 * i + 1] = std::cos(scaled / denom);
  }
  return e;
}

namespace detail {

inline ad::Var linear(ad::Var x, const LinearT<ad::Var>& l) {
  return ad::add_rowvec(ad::matmul(x, l.w), l.b);
}

inline ad::Var mlp(ad::Var x, const MlpT<ad::Var>& m) {
  return linear(ad::gelu(linear(x, m.l1)), m.l2);
}

struct EdgeIndex {
  std::vector<int> tgt, src;
  Mat coef;  // E x 1
};

inline EdgeIndex edge_index(const std::vector<GraphEdge>& edges, bool target_is_con) {
  EdgeIndex e;
  e.tgt.reserve(edges.size());
  e.src.reserve(edges.size());
  e.coef.resize(static_cast<Eigen::Index>(edges.size()), 1);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    e.tgt.push_back(target_is_con ? edges[k].con : edges[k].var);
    e.src.push_back(target_is_con ? edges[k].var : edges[k].con);
    e.coef(static_cast<Eigen::Index>(k), 0) = edges[k].coef;
  }
  return e;
}

// One aggregated message a_k = sum_{u in N_k(v)} final(GELU(LN(t(h_v) + s(h_u) + e(coef)))).
inline ad::Var conv_message(ad::Var tgt_feats, ad::Var src_feats, const EdgeIndex& edges,
                            const ConvT<ad::Var>& p, const LinearT<ad::Var>& src_linear,
                            int num_targets) {
  ad::Tape& tape = *tgt_feats.tape;
  ad::Var th = gather_rows(linear(tgt_feats, p.t), edges.tgt);
  ad::Var sh = gather_rows(linear(src_feats, src_linear), edges.src);
  ad::Var eh = linear(ad::input(tape, edges.coef), p.e);
  ad::Var m = ad::add(ad::add(th, sh), eh);
  m = ad::layer_norm(m, p.pn.g, p.pn.b);
  m = ad::gelu(m);
  m = linear(m, p.fin);
  return ad::scatter_sum_rows(m, edges.tgt, num_targets);
}

// Gated fusion of the aggregated messages plus the output MLP; a2 may be a
// zero tensor (BiConv). `residual` adds the target features back.
inline ad::Var conv_combine(ad::Var tgt_feats, ad::Var a1, ad::Var a2, const ConvT<ad::Var>& p,
                            bool residual) {
  ad::Tape& tape = *tgt_feats.tape;
  ad::Var gate = ad::sigmoid(linear(ad::concat_cols(a1, a2), p.fg));
  ad::Var ones = ad::input(tape, Mat::Ones(tape.value(gate).rows(), tape.value(gate).cols()));
  ad::Var pooled =
      ad::add(ad::hadamard(gate, a1), ad::hadamard(ad::sub(ones, gate), a2));
  ad::Var pc = ad::layer_norm(pooled, p.pc.g, p.pc.b);
  ad::Var o = linear(ad::gelu(linear(ad::concat_cols(pc, tgt_feats), p.o1)), p.o2);
  ad::Var out = ad::layer_norm(o, p.out.g, p.out.b);
  if (residual) out = ad::add(out, tgt_feats);
  return out;
}

inline ad::Var tri_conv_tape(ad::Var tgt, ad::Var src1, ad::Var src2, const EdgeIndex& e1,
                             const EdgeIndex& e2, const ConvT<ad::Var>& p, bool residual) {
  const int n_tgt = static_cast<int>(tgt.tape->value(tgt).rows());
  ad::Var a1 = conv_message(tgt, src1, e1, p, p.s1, n_tgt);
  ad::Var a2 = conv_message(tgt, src2, e2, p, p.s2, n_tgt);
  return conv_combine(tgt, a1, a2, p, residual);
}

inline ad::Var bi_conv_tape(ad::Var tgt, ad::Var src, const EdgeIndex& e, const ConvT<ad::Var>& p,
                            bool residual) {
  ad::Tape& tape = *tgt.tape;
  const int n_tgt = static_cast<int>(tape.value(tgt).rows());
  ad::Var a1 = conv_message(tgt, src, e, p, p.s1, n_tgt);
  ad::Var a2 = ad::input(tape, Mat::Zero(n_tgt, tape.value(a1).cols()));
  return conv_combine(tgt, a1, a2, p, residual);
}

}  // namespace detail

/// Tape handles for the two output heads of a forward pass.
struct ForwardVars {
  ad::Var int_logits;   // sum(q) x (K+1)
  ad::Var cont_values;  // sum(n-q) x 1
};

// Full network: type-specific encoders, L residual message-passing layers
// with additive per-layer time conditioning, and the two output heads.
inline ForwardVars forward_tape(ad::Tape& tape, const BoundParams& p, const ModelConfig& cfg,
                                const GraphBatch& batch) {
  if (static_cast<int>(p.layers.size()) != cfg.layers)
    throw std::invalid_argument("forward: params do not match config layer count");
  const int n_items = static_cast<int>(batch.times.size());
  Mat emb(n_items, cfg.hidden);
  for (int k = 0; k < n_items; ++k) emb.row(k) = time_embedding(batch.times[k], cfg.hidden).transpose();
  ad::Var time_emb = ad::input(tape, std::move(emb));

  ad::Var h_ivar = detail::mlp(ad::input(tape, batch.ivar_x), p.enc_ivar);
  ad::Var h_cvar = detail::mlp(ad::input(tape, batch.cvar_x), p.enc_cvar);
  ad::Var h_con = detail::mlp(ad::input(tape, batch.con_x), p.enc_con);

  const detail::EdgeIndex e_i2c = detail::edge_index(batch.edges_int, /*target_is_con=*/true);
  const detail::EdgeIndex e_c2c = detail::edge_index(batch.edges_cont, /*target_is_con=*/true);
  const detail::EdgeIndex e_c2i = detail::edge_index(batch.edges_int, /*target_is_con=*/false);
  const detail::EdgeIndex e_c2v = detail::edge_index(batch.edges_cont, /*target_is_con=*/false);

  for (int l = 0; l < cfg.layers; ++l) {
    const LayerT<ad::Var>& lay = p.layers[l];
    ad::Var ht = detail::mlp(time_emb, lay.time);  // n_items x h
    ad::Var ht_con = gather_rows(ht, batch.con_item);
    ad::Var ht_ivar = gather_rows(ht, batch.ivar_item);
    ad::Var ht_cvar = gather_rows(ht, batch.cvar_item);

    // constraint update pulls from both variable partitions
    ad::Var tri = detail::tri_conv_tape(h_con, h_ivar, h_cvar, e_i2c, e_c2c, lay.tri,
                                        /*residual=*/false);
    ad::Var h_con_new = ad::add(ad::add(h_con, ht_con), detail::mlp(tri, lay.con_mlp));

    // each variable partition pulls from the updated constraints
    ad::Var bi_i = detail::bi_conv_tape(h_ivar, h_con_new, e_c2i, lay.bi_ivar, /*residual=*/false);
    ad::Var h_ivar_new = ad::add(ad::add(h_ivar, ht_ivar), detail::mlp(bi_i, lay.ivar_mlp));
    ad::Var bi_c = detail::bi_conv_tape(h_cvar, h_con_new, e_c2v, lay.bi_cvar, /*residual=*/false);
    ad::Var h_cvar_new = ad::add(ad::add(h_cvar, ht_cvar), detail::mlp(bi_c, lay.cvar_mlp));

    h_con = h_con_new;
    h_ivar = h_ivar_new;
    h_cvar = h_cvar_new;
  }

  ForwardVars out;
  out.int_logits = detail::mlp(h_ivar, p.head_int);
  out.cont_values = detail::mlp(h_cvar, p.head_cont);
  return out;
}

struct Model {
  ModelConfig config;
  ModelParams params;
};

inline ModelOutput forward(const Model& model, const AugmentedGraph& graph) {
  ad::Tape tape;
  BoundParams bp = bind_params(tape, model.params, /*requires_grad=*/false);
  GraphBatch batch = GraphBatch::build({graph});
  ForwardVars fv = forward_tape(tape, bp, model.config, batch);
  ModelOutput out;
  out.int_logits = tape.value(fv.int_logits);
  out.cont_values = tape.value(fv.cont_values).col(0);
  return out;
}

/// Batched inference; outputs are split back per item.
inline std::vector<ModelOutput> forward_batch(const Model& model, const GraphBatch& batch) {
  ad::Tape tape;
  BoundParams bp = bind_params(tape, model.params, /*requires_grad=*/false);
  ForwardVars fv = forward_tape(tape, bp, model.config, batch);
  const Mat& logits = tape.value(fv.int_logits);
  const Mat& cont = tape.value(fv.cont_values);
  const int n_items = static_cast<int>(batch.times.size());
  std::vector<ModelOutput> outs(n_items);
  for (int k = 0; k < n_items; ++k) {
    const int q0 = batch.ivar_offset[k], q1 = batch.ivar_offset[k + 1];
    const int c0 = batch.cvar_offset[k], c1 = batch.cvar_offset[k + 1];
    outs[k].int_logits = logits.middleRows(q0, q1 - q0);
    outs[k].cont_values = cont.col(0).segment(c0, c1 - c0);
  }
  return outs;
}

/// Spec-level single conv entry point (plain matrices), used by tests.
inline Mat tri_conv(const Mat& target_feats, const Mat& src1_feats, const Mat& src2_feats,
                    const std::vector<GraphEdge>& edges1, const std::vector<GraphEdge>& edges2,
                    const ConvT<Mat>& params, bool residual) {
  ad::Tape tape;
  ConvT<ad::Var> bp;
  bp.has_s2 = params.has_s2;
  std::vector<const Mat*> mats;
  ConvT<Mat>& pm = const_cast<ConvT<Mat>&>(params);
  detail::visit_conv<Mat>("c", pm, [&](const std::string&, Mat& m) { mats.push_back(&m); });
  std::vector<ad::Var*> vars;
  detail::visit_conv<ad::Var>("c", bp, [&](const std::string&, ad::Var& v) { vars.push_back(&v); });
  for (std::size_t i = 0; i < mats.size(); ++i) *vars[i] = ad::input(tape, *mats[i], false);

  ad::Var tgt = ad::input(tape, target_feats);
  ad::Var s1 = ad::input(tape, src1_feats);
  const detail::EdgeIndex e1 = detail::edge_index(edges1, /*target_is_con=*/true);
  if (params.has_s2) {
    ad::Var s2 = ad::input(tape, src2_feats);
    const detail::EdgeIndex e2 = detail::edge_index(edges2, /*target_is_con=*/true);
    return tape.value(detail::tri_conv_tape(tgt, s1, s2, e1, e2, bp, residual));
  }
  return tape.value(detail::bi_conv_tape(tgt, s1, e1, bp, residual));
}

// ---- checkpoint format "fmip-ckpt-1": JSON with base64 little-endian f32

namespace detail {

inline std::string base64_encode(const std::vector<unsigned char>& data) {
  static const char tbl[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < data.size(); i += 3) {
    std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16;
    if (i + 1 < data.size()) v |= static_cast<std::uint32_t>(data[i + 1]) << 8;
    if (i + 2 < data.size()) v |= static_cast<std::uint32_t>(data[i + 2]);
    out += tbl[(v >> 18) & 63];
    out += tbl[(v >> 12) & 63];
    out += i + 1 < data.size() ? tbl[(v >> 6) & 63] : '=';
    out += i + 2 < data.size() ? tbl[v & 63] : '=';
  }
  return out;
}

inline std::vector<unsigned char> base64_decode(const std::string& text) {
  const auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    if (c == '=') return -1;
    throw std::invalid_argument("base64: bad character");
  };
  std::vector<unsigned char> out;
  int buffer = 0, bits = 0;
  for (char c : text) {
    const int v = val(c);
    if (v < 0) break;
    buffer = (buffer << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((buffer >> bits) & 0xFF));
    }
  }
  return out;
}

inline nlohmann::json tensor_to_json(const Mat& m) {
  std::vector<unsigned char> bytes(sizeof(float) * static_cast<std::size_t>(m.size()));
  std::size_t off = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const float f = static_cast<float>(m(r, c));
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      bytes[off++] = static_cast<unsigned char>(u & 0xFF);  // little-endian
      bytes[off++] = static_cast<unsigned char>((u >> 8) & 0xFF);
      bytes[off++] = static_cast<unsigned char>((u >> 16) & 0xFF);
      bytes[off++] = static_cast<unsigned char>((u >> 24) & 0xFF);
    }
  return {{"shape", {m.rows(), m.cols()}}, {"data", base64_encode(bytes)}};
}

inline Mat tensor_from_json(const nlohmann::json& j) {
  const auto shape = j.at("shape").get<std::vector<long>>();
  if (shape.size() != 2) throw std::invalid_argument("checkpoint: tensor shape must be 2-d");
  const std::vector<unsigned char> bytes = base64_decode(j.at("data").get<std::string>());
  if (bytes.size() != sizeof(float) * static_cast<std::size_t>(shape[0] * shape[1]))
    throw std::invalid_argument("checkpoint: tensor byte count mismatch");
  Mat m(shape[0], shape[1]);
  std::size_t off = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::uint32_t u = static_cast<std::uint32_t>(bytes[off]) |
                        (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
                        (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
                        (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
      off += 4;
      float f;
      std::memcpy(&f, &u, 4);
      m(r, c) = static_cast<double>(f);
    }
  return m;
}

}  // namespace detail

inline nlohmann::json params_to_json(const ModelParams& params) {
  nlohmann::json j = nlohmann::json::object();
  visit_params(const_cast<ModelParams&>(params), [&](const std::string& name, Mat& m) {
    j[name] = detail::tensor_to_json(m);
  });
  return j;
}

inline void params_from_json(const nlohmann::json& j, ModelParams& params) {
  visit_params(params, [&](const std::string& name, Mat& m) {
    if (!j.contains(name)) throw std::invalid_argument("checkpoint: missing tensor '" + name + "'");
    Mat loaded = detail::tensor_from_json(j.at(name));
    if (loaded.rows() != m.rows() || loaded.cols() != m.cols())
      throw std::invalid_argument("checkpoint: shape mismatch for '" + name + "'");
    m = std::move(loaded);
  });
}

struct Checkpoint {
  Model model;
  std::uint64_t seed = 0;
  nlohmann::json extra;  // optional training state, kept round-trippable
};

inline std::string save_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json j;
  j["version"] = "fmip-ckpt-1";
  j["config"] = {{"layers", ckpt.model.config.layers},
                 {"hidden", ckpt.model.config.hidden},
                 {"int_categories", ckpt.model.config.int_categories},
                 {"normalize", ckpt.model.config.normalize}};
  j["seed"] = ckpt.seed;
  j["params"] = params_to_json(ckpt.model.params);
  if (!ckpt.extra.is_null()) j["train_state"] = ckpt.extra;
  return j.dump();
}

inline Checkpoint load_checkpoint(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("version", "") != std::string("fmip-ckpt-1"))
    throw std::invalid_argument("checkpoint: unknown version");
  Checkpoint ckpt;
  const auto& cfg = j.at("config");
  ckpt.model.config.layers = cfg.at("layers").get<int>();
  ckpt.model.config.hidden = cfg.at("hidden").get<int>();
  ckpt.model.config.int_categories = cfg.at("int_categories").get<int>();
  ckpt.model.config.normalize = cfg.value("normalize", true);
  ckpt.seed = j.at("seed").get<std::uint64_t>();
  ckpt.model.params = init_params(ckpt.model.config, ckpt.seed);
  params_from_json(j.at("params"), ckpt.model.params);
  if (j.contains("train_state")) ckpt.extra = j.at("train_state");
  return ckpt;
}

}  // namespace fmip
