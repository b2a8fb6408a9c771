// Copyright 2026 The CoAT Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coat/error.hpp"
#include "coat/microlm/tokenizer.hpp"

namespace coat::microlm {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using MatMap = Eigen::Map<Mat>;
using CMatMap = Eigen::Map<const Mat>;

struct ModelConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 2;
  int context_len = 512;
  int d_ff = 256;
  std::uint64_t seed = 0;
  double init_std = 0.02;

  void Validate() const {
    if (vocab_size < static_cast<int>(Tokenizer::kNumSpecials)) Fail(ErrorCode::kConfigInvalid, "vocab_size too small");
    if (d_model < 1 || n_layers < 0 || n_heads < 1 || context_len < 2 || d_ff < 1)
      Fail(ErrorCode::kConfigInvalid, "model dimensions must be positive");
    if (d_model % n_heads != 0) Fail(ErrorCode::kConfigInvalid, "d_model must be divisible by n_heads");
  }
};

struct TensorInfo {
  std::string name;
  int rows;
  int cols;
  std::size_t offset;
  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

// Per-layer tensor slots, in storage order.
enum LayerSlot { kLn1G, kLn1B, kWq, kWk, kWv, kWo, kLn2G, kLn2B, kW1, kB1, kW2, kB2, kLayerSlots };
enum FinalSlot { kLnfG, kLnfB, kWout, kBout, kFinalSlots };

// Cached activations of one sequence for the backward pass.
struct Activations {
  struct Layer {
    Mat x_in, xhat1, h1, q, k, v, att, x_mid, xhat2, h2, u, gelu;
    Vec rstd1, rstd2;
    std::vector<Mat> probs;  // per head, T x T
  };
  std::vector<int> ids;
  std::vector<Layer> layers;
  Mat x_out, xhat_f, h_f;
  Vec rstd_f;
};

// Decoder-only transformer with pre-norm blocks, learned positions, GELU
// MLPs and an untied output projection. Parameters live in one flat buffer
// of doubles; gradients use the same layout.
class Model {
 public:
  Model() = default;

  Model(ModelConfig cfg, Tokenizer tokenizer) : cfg_(cfg), tokenizer_(std::move(tokenizer)) {
    cfg_.vocab_size = static_cast<int>(tokenizer_.size());
    cfg_.Validate();
    Layout();
    Initialize();
  }

  // Rebuilds a model from stored parameters.
  Model(ModelConfig cfg, Tokenizer tokenizer, std::vector<double> params)
      : cfg_(cfg), tokenizer_(std::move(tokenizer)) {
    cfg_.vocab_size = static_cast<int>(tokenizer_.size());
    cfg_.Validate();
    Layout();
    if (params.size() != params_.size()) Fail(ErrorCode::kCheckpointInvalid, "parameter count mismatch");
    params_ = std::move(params);
  }

  const ModelConfig& config() const { return cfg_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  std::size_t layer_tensor(int layer, LayerSlot slot) const {
    return 2 + static_cast<std::size_t>(layer) * kLayerSlots + slot;
  }
  std::size_t final_tensor(FinalSlot slot) const {
    return 2 + static_cast<std::size_t>(cfg_.n_layers) * kLayerSlots + slot;
  }

  CMatMap P(std::size_t t) const {
    const auto& ti = tensors_[t];
    return CMatMap(params_.data() + ti.offset, ti.rows, ti.cols);
  }
  MatMap G(std::vector<double>& grads, std::size_t t) const {
    const auto& ti = tensors_[t];
    return MatMap(grads.data() + ti.offset, ti.rows, ti.cols);
  }

  void Zero() { std::fill(params_.begin(), params_.end(), 0.0); }

  // Next-token distributions for the requested positions (all positions when
  // `rows` is empty). With `cache`, activations are kept for Backward.
  Mat Forward(std::span<const int> ids, std::span<const int> rows = {}, Activations* cache = nullptr) const {
    const int T = static_cast<int>(ids.size());
    if (T == 0) Fail(ErrorCode::kEmptyTarget, "empty input");
    if (T > cfg_.context_len)
      Fail(ErrorCode::kContextOverflow,
           std::to_string(T) + " tokens exceed context_len " + std::to_string(cfg_.context_len));
    const int d = cfg_.d_model, H = cfg_.n_heads, dh = d / H;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Activations local;
    Activations& a = cache ? *cache : local;
    a.ids.assign(ids.begin(), ids.end());
    a.layers.assign(static_cast<std::size_t>(cfg_.n_layers), {});

    Mat x(T, d);
    auto tok = P(0);
    auto pos = P(1);
    for (int t = 0; t < T; ++t) {
      if (ids[t] < 0 || ids[t] >= cfg_.vocab_size) Fail(ErrorCode::kContextOverflow, "token id out of range");
      x.row(t) = tok.row(ids[t]) + pos.row(t);
    }

    for (int l = 0; l < cfg_.n_layers; ++l) {
      auto& L = a.layers[static_cast<std::size_t>(l)];
      L.x_in = x;
      LayerNorm(x, P(layer_tensor(l, kLn1G)), P(layer_tensor(l, kLn1B)), L.xhat1, L.rstd1, L.h1);
      L.q = L.h1 * P(layer_tensor(l, kWq));
      L.k = L.h1 * P(layer_tensor(l, kWk));
      L.v = L.h1 * P(layer_tensor(l, kWv));
      L.att.resize(T, d);
      L.probs.resize(static_cast<std::size_t>(H));
      for (int h = 0; h < H; ++h) {
        Mat s = (L.q.middleCols(h * dh, dh) * L.k.middleCols(h * dh, dh).transpose()) * scale;
        for (int i = 0; i < T; ++i) {
          double mx = s(i, 0);
          for (int j = 1; j <= i; ++j) mx = std::max(mx, s(i, j));
          double z = 0.0;
          for (int j = 0; j <= i; ++j) z += (s(i, j) = std::exp(s(i, j) - mx));
          for (int j = 0; j <= i; ++j) s(i, j) /= z;
          for (int j = i + 1; j < T; ++j) s(i, j) = 0.0;
        }
        L.att.middleCols(h * dh, dh) = s * L.v.middleCols(h * dh, dh);
        L.probs[static_cast<std::size_t>(h)] = std::move(s);
      }
      x += L.att * P(layer_tensor(l, kWo));
      L.x_mid = x;
      LayerNorm(x, P(layer_tensor(l, kLn2G)), P(layer_tensor(l, kLn2B)), L.xhat2, L.rstd2, L.h2);
      L.u = L.h2 * P(layer_tensor(l, kW1));
      L.u.rowwise() += Vec(P(layer_tensor(l, kB1)));
      L.gelu = L.u.unaryExpr([](double v) { return Gelu(v); });
      x += L.gelu * P(layer_tensor(l, kW2));
      x.rowwise() += Vec(P(layer_tensor(l, kB2)));
    }
    a.x_out = x;

    std::vector<int> all;
    if (rows.empty()) {
      all.resize(static_cast<std::size_t>(T));
      for (int t = 0; t < T; ++t) all[static_cast<std::size_t>(t)] = t;
      rows = all;
    }
    Mat picked(static_cast<int>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r) picked.row(static_cast<int>(r)) = x.row(rows[r]);
    LayerNorm(picked, P(final_tensor(kLnfG)), P(final_tensor(kLnfB)), a.xhat_f, a.rstd_f, a.h_f);
    Mat logits = a.h_f * P(final_tensor(kWout));
    logits.rowwise() += Vec(P(final_tensor(kBout)));
    for (int r = 0; r < logits.rows(); ++r) {
      const double mx = logits.row(r).maxCoeff();
      logits.row(r) = (logits.row(r).array() - mx).exp();
      logits.row(r) /= logits.row(r).sum();
    }
    return logits;
  }

  // Accumulates parameter gradients into `grads` given dL/dlogits for the
  // rows selected in the cached forward pass.
  void Backward(const Activations& a, std::span<const int> rows, const Mat& dlogits, std::vector<double>& grads) const {
    const int T = static_cast<int>(a.ids.size());
    const int d = cfg_.d_model, H = cfg_.n_heads, dh = d / H;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    G(grads, final_tensor(kWout)).noalias() += a.h_f.transpose() * dlogits;
    G(grads, final_tensor(kBout)) += dlogits.colwise().sum();
    Mat dh_f = dlogits * P(final_tensor(kWout)).transpose();
    Mat dpicked = LayerNormBackward(dh_f, a.xhat_f, a.rstd_f, P(final_tensor(kLnfG)), G(grads, final_tensor(kLnfG)),
                                    G(grads, final_tensor(kLnfB)));
    Mat dx = Mat::Zero(T, d);
    for (std::size_t r = 0; r < rows.size(); ++r) dx.row(rows[r]) += dpicked.row(static_cast<int>(r));

    for (int l = cfg_.n_layers - 1; l >= 0; --l) {
      const auto& L = a.layers[static_cast<std::size_t>(l)];
      // MLP
      G(grads, layer_tensor(l, kW2)).noalias() += L.gelu.transpose() * dx;
      G(grads, layer_tensor(l, kB2)) += dx.colwise().sum();
      Mat du = dx * P(layer_tensor(l, kW2)).transpose();
      du.array() *= L.u.unaryExpr([](double v) { return GeluGrad(v); }).array();
      G(grads, layer_tensor(l, kW1)).noalias() += L.h2.transpose() * du;
      G(grads, layer_tensor(l, kB1)) += du.colwise().sum();
      Mat dh2 = du * P(layer_tensor(l, kW1)).transpose();
      dx += LayerNormBackward(dh2, L.xhat2, L.rstd2, P(layer_tensor(l, kLn2G)), G(grads, layer_tensor(l, kLn2G)),
                              G(grads, layer_tensor(l, kLn2B)));
      // Attention
      G(grads, layer_tensor(l, kWo)).noalias() += L.att.transpose() * dx;
      Mat datt = dx * P(layer_tensor(l, kWo)).transpose();
      Mat dq(T, d), dk(T, d), dv(T, d);
      for (int h = 0; h < H; ++h) {
        const Mat& prob = L.probs[static_cast<std::size_t>(h)];
        auto da = datt.middleCols(h * dh, dh);
        dv.middleCols(h * dh, dh) = prob.transpose() * da;
        Mat dp = da * L.v.middleCols(h * dh, dh).transpose();
        Eigen::VectorXd rs = (dp.array() * prob.array()).rowwise().sum();
        Mat ds = prob.array() * (dp.colwise() - rs).array();
        ds *= scale;
        dq.middleCols(h * dh, dh) = ds * L.k.middleCols(h * dh, dh);
        dk.middleCols(h * dh, dh) = ds.transpose() * L.q.middleCols(h * dh, dh);
      }
      G(grads, layer_tensor(l, kWq)).noalias() += L.h1.transpose() * dq;
      G(grads, layer_tensor(l, kWk)).noalias() += L.h1.transpose() * dk;
      G(grads, layer_tensor(l, kWv)).noalias() += L.h1.transpose() * dv;
      Mat dh1 = dq * P(layer_tensor(l, kWq)).transpose() + dk * P(layer_tensor(l, kWk)).transpose() +
                dv * P(layer_tensor(l, kWv)).transpose();
      dx += LayerNormBackward(dh1, L.xhat1, L.rstd1, P(layer_tensor(l, kLn1G)), G(grads, layer_tensor(l, kLn1G)),
                              G(grads, layer_tensor(l, kLn1B)));
    }
    auto gtok = G(grads, 0);
    auto gpos = G(grads, 1);
    for (int t = 0; t < T; ++t) {
      gtok.row(a.ids[static_cast<std::size_t>(t)]) += dx.row(t);
      gpos.row(t) += dx.row(t);
    }
  }

  static double Gelu(double v) {
    constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
    return 0.5 * v * (1.0 + std::tanh(c * (v + 0.044715 * v * v * v)));
  }
  static double GeluGrad(double v) {
    constexpr double c = 0.7978845608028654;
    const double t = std::tanh(c * (v + 0.044715 * v * v * v));
    return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * c * (1.0 + 3.0 * 0.044715 * v * v);
  }

 private:
  static constexpr double kLnEps = 1e-5;

  static void LayerNorm(const Mat& x, const CMatMap& g, const CMatMap& b, Mat& xhat, Vec& rstd, Mat& y) {
    const int T = static_cast<int>(x.rows()), d = static_cast<int>(x.cols());
    xhat.resize(T, d);
    rstd.resize(T);
    for (int t = 0; t < T; ++t) {
      const double mu = x.row(t).mean();
      const double var = (x.row(t).array() - mu).square().mean();
      rstd(t) = 1.0 / std::sqrt(var + kLnEps);
      xhat.row(t) = (x.row(t).array() - mu) * rstd(t);
    }
    y = (xhat.array().rowwise() * g.row(0).array()).rowwise() + b.row(0).array();
  }

  static Mat LayerNormBackward(const Mat& dy, const Mat& xhat, const Vec& rstd, const CMatMap& g, MatMap dg,
                               MatMap db) {
    dg += (dy.array() * xhat.array()).colwise().sum().matrix();
    db += dy.colwise().sum();
    Mat dxhat = dy.array().rowwise() * g.row(0).array();
    Mat dx(dy.rows(), dy.cols());
    for (int t = 0; t < dy.rows(); ++t) {
      const double m1 = dxhat.row(t).mean();
      const double m2 = (dxhat.row(t).array() * xhat.row(t).array()).mean();
      dx.row(t) = rstd(t) * (dxhat.row(t).array() - m1 - xhat.row(t).array() * m2);
    }
    return dx;
  }

  void Layout() {
    tensors_.clear();
    std::size_t offset = 0;
    auto add = [&](std::string name, int r, int c) {
      tensors_.push_back({std::move(name), r, c, offset});
      offset += static_cast<std::size_t>(r) * static_cast<std::size_t>(c);
    };
    const int V = cfg_.vocab_size, d = cfg_.d_model, f = cfg_.d_ff;
    add("tok_emb", V, d);
    add("pos_emb", cfg_.context_len, d);
    for (int l = 0; l < cfg_.n_layers; ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      add(p + "ln1.g", 1, d);
      add(p + "ln1.b", 1, d);
      add(p + "attn.wq", d, d);
      add(p + "attn.wk", d, d);
      add(p + "attn.wv", d, d);
      add(p + "attn.wo", d, d);
      add(p + "ln2.g", 1, d);
      add(p + "ln2.b", 1, d);
      add(p + "mlp.w1", d, f);
      add(p + "mlp.b1", 1, f);
      add(p + "mlp.w2", f, d);
      add(p + "mlp.b2", 1, d);
    }
    add("lnf.g", 1, d);
    add("lnf.b", 1, d);
    add("out.w", d, V);
    add("out.b", 1, V);
    params_.assign(offset, 0.0);
  }

  void Initialize() {
    std::mt19937_64 rng(cfg_.seed);
    std::normal_distribution<double> normal(0.0, cfg_.init_std);
    for (const auto& t : tensors_) {
      const bool gain = t.name.ends_with(".g");
      const bool bias = t.name.ends_with(".b") || t.name.ends_with(".b1") || t.name.ends_with(".b2");
      for (std::size_t i = 0; i < t.size(); ++i)
        params_[t.offset + i] = gain ? 1.0 : bias ? 0.0 : normal(rng);
    }
  }

  ModelConfig cfg_;
  Tokenizer tokenizer_;
  std::vector<TensorInfo> tensors_;
  std::vector<double> params_;
};

}  // namespace coat::microlm
