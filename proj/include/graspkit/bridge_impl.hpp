#pragma once

// Template definitions for bridge.hpp.

#include <cmath>
#include <limits>

#include "graspkit/errors.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

namespace bridge_detail {

constexpr double kProbClamp = 1e-12;

template <typename Scalar>
Linear<Scalar> make_linear(int out, int in) {
  return {MatrixX<Scalar>::Zero(out, in), VectorX<Scalar>::Zero(out)};
}

template <typename Scalar>
MatrixX<Scalar> tanh_rows(const MatrixX<Scalar>& x, const Linear<Scalar>& layer) {
  MatrixX<Scalar> pre = x * layer.weight.transpose();
  pre.rowwise() += layer.bias.transpose();
  return pre.array().tanh().matrix();
}

template <typename Scalar>
MatrixX<Scalar> affine_rows(const MatrixX<Scalar>& x, const Linear<Scalar>& layer) {
  MatrixX<Scalar> pre = x * layer.weight.transpose();
  pre.rowwise() += layer.bias.transpose();
  return pre;
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  return z >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-z)) : std::exp(z) / (Scalar(1) + std::exp(z));
}

template <typename Scalar>
struct ForwardCache {
  VectorX<Scalar> zg, zl, zcat, g;
  MatrixX<Scalar> local, H, A1, E1, Q, C, M1;
  VectorX<Scalar> logits, aff, match_prob;
};

template <typename Scalar>
void check_shapes(const FeatureBundle<Scalar>& b, const BridgeParams<Scalar>& p, const PairBatch& pairs) {
  const auto& d = p.dims;
  const auto n = b.points.rows();
  if (b.global_visual.size() != d.global_in) throw ShapeError("global feature has wrong length");
  if (b.language.size() != d.language_in) throw ShapeError("language feature has wrong length");
  if (b.local_visual.cols() != d.local_in) throw ShapeError("local feature has wrong width");
  if (b.points.cols() != 3) throw ShapeError("points must be n x 3");
  if (b.local_visual.rows() != n) throw ShapeError("per-point arrays differ in length");
  if (n == 0) throw ShapeError("no points");
  if (p.global_enc.weight.cols() != d.global_in || p.mix.weight.rows() != d.mix_out ||
      p.aff_hidden.weight.cols() != d.point_features() || p.match_hidden.weight.cols() != 2 * d.embed_dim)
    throw ShapeError("parameters do not match their dims");
  if (pairs.match.size() != pairs.pairs.size()) throw ShapeError("pair flags and pairs differ in length");
  for (const auto& pr : pairs.pairs)
    if (pr[0] >= n || pr[1] >= n) throw ShapeError("pair index out of range");
}

template <typename Scalar>
void forward(const FeatureBundle<Scalar>& b, const BridgeParams<Scalar>& p, const PairBatch& pairs,
             ForwardCache<Scalar>& c) {
  check_shapes(b, p, pairs);
  const auto& d = p.dims;
  const Eigen::Index n = b.points.rows();

  c.zg = (p.global_enc.weight * b.global_visual + p.global_enc.bias).array().tanh().matrix();
  c.zl = (p.language_enc.weight * b.language + p.language_enc.bias).array().tanh().matrix();
  c.zcat.resize(c.zg.size() + c.zl.size());
  c.zcat << c.zg, c.zl;
  c.g = (p.mix.weight * c.zcat + p.mix.bias).array().tanh().matrix();

  c.local = tanh_rows(b.local_visual, p.local);
  c.H.resize(n, d.point_features());
  c.H.leftCols(d.local_out) = c.local;
  c.H.middleCols(d.local_out, d.mix_out) = c.g.transpose().replicate(n, 1);
  c.H.rightCols(3) = b.points;

  c.A1 = tanh_rows(c.H, p.aff_hidden);
  const VectorX<Scalar> logits = affine_rows(c.A1, p.aff_out).col(0);
  const Scalar peak = logits.maxCoeff();
  c.aff = (logits.array() - peak).exp().matrix();
  c.aff /= c.aff.sum();

  c.E1 = tanh_rows(c.H, p.emb_hidden);
  c.Q = affine_rows(c.E1, p.emb_out);

  const auto K = static_cast<Eigen::Index>(pairs.pairs.size());
  const int E = d.embed_dim;
  c.C.resize(K, 2 * E);
  for (Eigen::Index k = 0; k < K; ++k) {
    c.C.row(k).head(E) = c.Q.row(pairs.pairs[k][0]);
    c.C.row(k).tail(E) = c.Q.row(pairs.pairs[k][1]);
  }
  if (K > 0) {
    c.M1 = tanh_rows(c.C, p.match_hidden);
    c.logits = affine_rows(c.M1, p.match_out).col(0);
  } else {
    c.M1.resize(0, d.match_hidden);
    c.logits.resize(0);
  }
  c.match_prob.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) c.match_prob(k) = sigmoid(c.logits(k));
}

template <typename Scalar>
void accumulate_linear(Linear<Scalar>& g, const MatrixX<Scalar>& dpre, const MatrixX<Scalar>& input) {
  g.weight.noalias() += dpre.transpose() * input;
  g.bias += dpre.colwise().sum().transpose();
}

// Back-propagates upstream gradients w.r.t. the affordance map, the
// embeddings and the match logits into `grad`.
template <typename Scalar>
void backward(const FeatureBundle<Scalar>& b, const BridgeParams<Scalar>& p, const PairBatch& pairs,
              const ForwardCache<Scalar>& c, const VectorX<Scalar>& d_aff, MatrixX<Scalar> dQ,
              const VectorX<Scalar>& d_logit, BridgeParams<Scalar>& grad) {
  const auto& d = p.dims;
  const int E = d.embed_dim;

  // Softmax over points.
  const VectorX<Scalar> ds = c.aff.cwiseProduct((d_aff.array() - c.aff.dot(d_aff)).matrix());
  grad.aff_out.weight.noalias() += ds.transpose() * c.A1;
  grad.aff_out.bias(0) += ds.sum();
  const MatrixX<Scalar> dA1 =
      (ds * p.aff_out.weight).cwiseProduct((Scalar(1) - c.A1.array().square()).matrix());
  accumulate_linear(grad.aff_hidden, dA1, c.H);
  MatrixX<Scalar> dH = dA1 * p.aff_hidden.weight;

  // Match classifier.
  const auto K = static_cast<Eigen::Index>(pairs.pairs.size());
  if (K > 0) {
    grad.match_out.weight.noalias() += d_logit.transpose() * c.M1;
    grad.match_out.bias(0) += d_logit.sum();
    const MatrixX<Scalar> dM1 =
        (d_logit * p.match_out.weight).cwiseProduct((Scalar(1) - c.M1.array().square()).matrix());
    accumulate_linear(grad.match_hidden, dM1, c.C);
    const MatrixX<Scalar> dC = dM1 * p.match_hidden.weight;
    for (Eigen::Index k = 0; k < K; ++k) {
      dQ.row(pairs.pairs[k][0]) += dC.row(k).head(E);
      dQ.row(pairs.pairs[k][1]) += dC.row(k).tail(E);
    }
  }

  // Embedding head.
  accumulate_linear(grad.emb_out, dQ, c.E1);
  const MatrixX<Scalar> dE1 = (dQ * p.emb_out.weight).cwiseProduct((Scalar(1) - c.E1.array().square()).matrix());
  accumulate_linear(grad.emb_hidden, dE1, c.H);
  dH.noalias() += dE1 * p.emb_hidden.weight;

  // Per-point trunk.
  const MatrixX<Scalar> dLocal =
      dH.leftCols(d.local_out).cwiseProduct((Scalar(1) - c.local.array().square()).matrix());
  accumulate_linear(grad.local, dLocal, b.local_visual);
  const VectorX<Scalar> dg = dH.middleCols(d.local_out, d.mix_out).colwise().sum().transpose();

  // Global branch.
  const VectorX<Scalar> dg_pre = dg.cwiseProduct((Scalar(1) - c.g.array().square()).matrix());
  grad.mix.weight.noalias() += dg_pre * c.zcat.transpose();
  grad.mix.bias += dg_pre;
  const VectorX<Scalar> dz = p.mix.weight.transpose() * dg_pre;
  const VectorX<Scalar> dzg = dz.head(d.global_hidden).cwiseProduct((Scalar(1) - c.zg.array().square()).matrix());
  const VectorX<Scalar> dzl = dz.tail(d.language_hidden).cwiseProduct((Scalar(1) - c.zl.array().square()).matrix());
  grad.global_enc.weight.noalias() += dzg * b.global_visual.transpose();
  grad.global_enc.bias += dzg;
  grad.language_enc.weight.noalias() += dzl * b.language.transpose();
  grad.language_enc.bias += dzl;
}

template <typename Scalar>
Scalar clamp_prob(Scalar p) {
  if (!(p >= Scalar(0) && p <= Scalar(1))) throw DomainError("match probability outside [0, 1]");
  return std::clamp(p, Scalar(kProbClamp), Scalar(1) - Scalar(kProbClamp));
}

}  // namespace bridge_detail

template <typename Scalar>
BridgeParams<Scalar> BridgeParams<Scalar>::zeros(const BridgeDims& d) {
  using bridge_detail::make_linear;
  BridgeParams p;
  p.dims = d;
  p.global_enc = make_linear<Scalar>(d.global_hidden, d.global_in);
  p.language_enc = make_linear<Scalar>(d.language_hidden, d.language_in);
  p.mix = make_linear<Scalar>(d.mix_out, d.global_hidden + d.language_hidden);
  p.local = make_linear<Scalar>(d.local_out, d.local_in);
  p.aff_hidden = make_linear<Scalar>(d.head_hidden, d.point_features());
  p.aff_out = make_linear<Scalar>(1, d.head_hidden);
  p.emb_hidden = make_linear<Scalar>(d.head_hidden, d.point_features());
  p.emb_out = make_linear<Scalar>(d.embed_dim, d.head_hidden);
  p.match_hidden = make_linear<Scalar>(d.match_hidden, 2 * d.embed_dim);
  p.match_out = make_linear<Scalar>(1, d.match_hidden);
  p.log_sigma = VectorX<Scalar>::Zero(3);
  return p;
}

template <typename Scalar>
BridgeParams<Scalar> BridgeParams<Scalar>::init(const BridgeDims& d, std::uint64_t seed) {
  BridgeParams p = zeros(d);
  Rng rng(derive_seed(seed, "bridge-init"));
  p.for_each([&](const char* name, auto& t) {
    const std::string_view n(name);
    if (n.ends_with(".weight")) {
      const double s = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = Scalar(rng.uniform(-s, s));
    }
  });
  return p;
}

template <typename Scalar>
template <typename F>
void BridgeParams<Scalar>::for_each(F&& f) {
  f("global_enc.weight", global_enc.weight);
  f("global_enc.bias", global_enc.bias);
  f("language_enc.weight", language_enc.weight);
  f("language_enc.bias", language_enc.bias);
  f("mix.weight", mix.weight);
  f("mix.bias", mix.bias);
  f("local.weight", local.weight);
  f("local.bias", local.bias);
  f("aff_hidden.weight", aff_hidden.weight);
  f("aff_hidden.bias", aff_hidden.bias);
  f("aff_out.weight", aff_out.weight);
  f("aff_out.bias", aff_out.bias);
  f("emb_hidden.weight", emb_hidden.weight);
  f("emb_hidden.bias", emb_hidden.bias);
  f("emb_out.weight", emb_out.weight);
  f("emb_out.bias", emb_out.bias);
  f("match_hidden.weight", match_hidden.weight);
  f("match_hidden.bias", match_hidden.bias);
  f("match_out.weight", match_out.weight);
  f("match_out.bias", match_out.bias);
  f("awl.log_sigma", log_sigma);
}

template <typename Scalar>
template <typename F>
void BridgeParams<Scalar>::for_each(F&& f) const {
  const_cast<BridgeParams*>(this)->for_each(
      [&](const char* name, auto& t) { f(name, static_cast<const std::remove_reference_t<decltype(t)>&>(t)); });
}

template <typename Scalar>
std::size_t BridgeParams<Scalar>::size() const {
  std::size_t n = 0;
  for_each([&](const char*, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

template <typename Scalar>
VectorX<Scalar> BridgeParams<Scalar>::flatten() const {
  VectorX<Scalar> flat(static_cast<Eigen::Index>(size()));
  Eigen::Index at = 0;
  for_each([&](const char*, const auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) flat(at++) = t.data()[i];
  });
  return flat;
}

template <typename Scalar>
void BridgeParams<Scalar>::unflatten(const VectorX<Scalar>& flat) {
  if (static_cast<std::size_t>(flat.size()) != size()) throw ShapeError("flat parameter vector has wrong size");
  Eigen::Index at = 0;
  for_each([&](const char*, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = flat(at++);
  });
}

template <typename Scalar>
template <typename Other>
BridgeParams<Other> BridgeParams<Scalar>::cast() const {
  BridgeParams<Other> out = BridgeParams<Other>::zeros(dims);
  out.unflatten(flatten().template cast<Other>());
  return out;
}

template <typename Scalar>
BridgeOutput<Scalar> bridge_forward(const FeatureBundle<Scalar>& bundle, const BridgeParams<Scalar>& params,
                                    const PairBatch& pairs) {
  bridge_detail::ForwardCache<Scalar> c;
  bridge_detail::forward(bundle, params, pairs, c);
  return {c.aff, c.Q, c.match_prob};
}

template <typename Scalar>
Scalar loss_global(const std::vector<VectorX<Scalar>>& pred, const std::vector<VectorX<Scalar>>& gt, bool l1) {
  if (pred.size() != gt.size() || pred.empty()) throw ShapeError("loss_global needs matching, non-empty batches");
  Scalar total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != gt[i].size()) throw ShapeError("affordance maps differ in length");
    total += l1 ? (pred[i] - gt[i]).template lpNorm<1>() : (pred[i] - gt[i]).norm();
  }
  return total / Scalar(pred.size());
}

template <typename Scalar>
EmbeddingLoss<Scalar> loss_embedding(const std::vector<MatrixX<Scalar>>& embeddings,
                                     const std::vector<PairBatch>& pairs, const LossConfig& config) {
  config.validate();
  if (embeddings.size() != pairs.size() || embeddings.empty())
    throw ShapeError("loss_embedding needs one pair batch per instance");
  EmbeddingLoss<Scalar> out;
  const Scalar n = Scalar(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const auto& Q = embeddings[i];
    const auto& batch = pairs[i];
    if (batch.match.size() != batch.pairs.size()) throw ShapeError("pair flags and pairs differ in length");
    const auto kp = batch.positives(), kn = batch.negatives();
    Scalar sp = 0, sn = 0;
    for (std::size_t k = 0; k < batch.pairs.size(); ++k) {
      const auto [a, b] = batch.pairs[k];
      if (a >= Q.rows() || b >= Q.rows()) throw ShapeError("pair index out of range");
      const Scalar dist = (Q.row(a) - Q.row(b)).norm();
      if (batch.match[k]) sp += std::pow(std::max(dist - Scalar(config.delta_p), Scalar(0)), 2);
      else sn += std::pow(std::max(Scalar(config.delta_n) - dist, Scalar(0)), 2);
    }
    if (kp > 0) out.positive += sp / Scalar(kp) / n;
    if (kn > 0) out.negative += sn / Scalar(kn) / n;
  }
  out.total = Scalar(config.lambda) * out.positive + out.negative;
  return out;
}

template <typename Scalar>
Scalar loss_match(const std::vector<VectorX<Scalar>>& match_prob, const std::vector<PairBatch>& pairs) {
  if (match_prob.size() != pairs.size()) throw ShapeError("loss_match needs one pair batch per instance");
  Scalar total = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (static_cast<std::size_t>(match_prob[i].size()) != pairs[i].match.size())
      throw ShapeError("probabilities and flags differ in length");
    for (std::size_t k = 0; k < pairs[i].match.size(); ++k) {
      const Scalar p = bridge_detail::clamp_prob(match_prob[i](static_cast<Eigen::Index>(k)));
      total -= pairs[i].match[k] ? std::log(p) : std::log(Scalar(1) - p);
    }
  }
  return total;
}

template <typename Scalar>
Scalar awl_combine(const std::array<Scalar, 3>& losses, const std::array<Scalar, 3>& sigmas) {
  Scalar total = 0;
  for (int i = 0; i < 3; ++i) {
    if (!(sigmas[i] > Scalar(0))) throw DomainError("AWL sigma must be > 0");
    total += losses[i] / (Scalar(2) * sigmas[i] * sigmas[i]) + std::log(sigmas[i]);
  }
  return total;
}

template <typename Scalar>
std::array<Scalar, 3> awl_sigma_gradient(const std::array<Scalar, 3>& losses, const std::array<Scalar, 3>& sigmas) {
  std::array<Scalar, 3> g{};
  for (int i = 0; i < 3; ++i) {
    if (!(sigmas[i] > Scalar(0))) throw DomainError("AWL sigma must be > 0");
    g[i] = -losses[i] / (sigmas[i] * sigmas[i] * sigmas[i]) + Scalar(1) / sigmas[i];
  }
  return g;
}

template <typename Scalar>
LossBreakdown<Scalar> bridge_loss(const std::vector<TrainingExample<Scalar>>& batch,
                                  const BridgeParams<Scalar>& params, const LossConfig& config,
                                  BridgeParams<Scalar>* grad) {
  config.validate();
  if (batch.empty()) throw ShapeError("empty training batch");
  const Scalar N = Scalar(batch.size());
  std::array<Scalar, 3> sigma;
  std::array<Scalar, 3> weight;
  for (int j = 0; j < 3; ++j) {
    sigma[j] = std::exp(params.log_sigma(j));
    weight[j] = Scalar(1) / (Scalar(2) * sigma[j] * sigma[j]);
  }
  if (grad) *grad = BridgeParams<Scalar>::zeros(params.dims);

  LossBreakdown<Scalar> out;
  Scalar emb_pos = 0, emb_neg = 0;
  std::vector<bridge_detail::ForwardCache<Scalar>> caches(batch.size());
  std::vector<VectorX<Scalar>> d_affs(batch.size());
  std::vector<MatrixX<Scalar>> dQs(batch.size());
  std::vector<VectorX<Scalar>> d_logits(batch.size());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& ex = batch[i];
    auto& c = caches[i];
    bridge_detail::forward(ex.features, params, ex.pairs, c);
    if (ex.gt_affordance.size() != c.aff.size()) throw ShapeError("ground-truth map has wrong length");

    const VectorX<Scalar> diff = c.aff - ex.gt_affordance;
    VectorX<Scalar> d_aff = VectorX<Scalar>::Zero(diff.size());
    if (config.l1_global) {
      out.global += diff.template lpNorm<1>() / N;
      d_aff = diff.array().sign().matrix() / N;
    } else {
      const Scalar norm = diff.norm();
      out.global += norm / N;
      if (norm > Scalar(0)) d_aff = diff / (norm * N);
    }
    d_affs[i] = d_aff;

    const auto kp = ex.pairs.positives(), kn = ex.pairs.negatives();
    MatrixX<Scalar> dQ = MatrixX<Scalar>::Zero(c.Q.rows(), c.Q.cols());
    VectorX<Scalar> d_logit = VectorX<Scalar>::Zero(static_cast<Eigen::Index>(ex.pairs.pairs.size()));
    for (std::size_t k = 0; k < ex.pairs.pairs.size(); ++k) {
      const auto [a, b] = ex.pairs.pairs[k];
      const VectorX<Scalar> delta = (c.Q.row(a) - c.Q.row(b)).transpose();
      const Scalar dist = delta.norm();
      Scalar d_dist = 0;
      if (ex.pairs.match[k]) {
        const Scalar h = dist - Scalar(config.delta_p);
        if (h > Scalar(0)) {
          emb_pos += h * h / (Scalar(kp) * N);
          d_dist = Scalar(config.lambda) * Scalar(2) * h / (Scalar(kp) * N);
        }
      } else {
        const Scalar h = Scalar(config.delta_n) - dist;
        if (h > Scalar(0)) {
          emb_neg += h * h / (Scalar(kn) * N);
          d_dist = -Scalar(2) * h / (Scalar(kn) * N);
        }
      }
      if (dist > Scalar(0) && d_dist != Scalar(0)) {
        dQ.row(a) += (d_dist / dist) * delta.transpose();
        dQ.row(b) -= (d_dist / dist) * delta.transpose();
      }

      const Scalar p_raw = c.match_prob(static_cast<Eigen::Index>(k));
      const Scalar p = bridge_detail::clamp_prob(p_raw);
      const int y = ex.pairs.match[k];
      out.match -= y ? std::log(p) : std::log(Scalar(1) - p);
      if (p == p_raw) d_logit(static_cast<Eigen::Index>(k)) = p - Scalar(y);
    }
    dQs[i] = std::move(dQ);
    d_logits[i] = std::move(d_logit);
  }
  out.embedding = Scalar(config.lambda) * emb_pos + emb_neg;

  const std::array<Scalar, 3> losses = {out.global, out.embedding, out.match};
  out.combined = awl_combine(losses, sigma);

  if (grad) {
    for (std::size_t i = 0; i < batch.size(); ++i)
      bridge_detail::backward(batch[i].features, params, batch[i].pairs, caches[i],
                              VectorX<Scalar>(d_affs[i] * weight[0]), MatrixX<Scalar>(dQs[i] * weight[1]),
                              VectorX<Scalar>(d_logits[i] * weight[2]), *grad);
    for (int j = 0; j < 3; ++j) grad->log_sigma(j) = Scalar(1) - Scalar(2) * weight[j] * losses[j];
  }
  return out;
}

}  // namespace graspkit
