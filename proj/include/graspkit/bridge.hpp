#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "graspkit/affordance.hpp"

namespace graspkit {

/// Layer widths. The defaults are the full-size network; tiny() builds
/// a small net for finite-difference checks.
struct BridgeDims {
  int global_in = 1024;
  int language_in = 4096;
  int local_in = 64;
  int global_hidden = 128;
  int language_hidden = 128;
  int mix_out = 64;
  int local_out = 64;
  int head_hidden = 32;
  int embed_dim = 32;
  int match_hidden = 32;

  int point_features() const { return local_out + mix_out + 3; }
  static BridgeDims tiny(int width);

  friend bool operator==(const BridgeDims&, const BridgeDims&) = default;
};

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct Linear {
  MatrixX<Scalar> weight;  // out x in
  VectorX<Scalar> bias;
};

/// All trainable tensors, including the three AWL log-sigmas.
template <typename Scalar>
struct BridgeParams {
  BridgeDims dims;
  Linear<Scalar> global_enc, language_enc, mix, local;
  Linear<Scalar> aff_hidden, aff_out;
  Linear<Scalar> emb_hidden, emb_out;
  Linear<Scalar> match_hidden, match_out;
  VectorX<Scalar> log_sigma;  // ln of the AWL sigmas, one per loss

  /// Weights ~ U(-s, s) with s = sqrt(6 / (in + out)); zero biases and log-sigmas.
  static BridgeParams init(const BridgeDims& dims, std::uint64_t seed);
  static BridgeParams zeros(const BridgeDims& dims);

  /// Tensors in declaration order; every parameter visitor uses this order.
  template <typename F>
  void for_each(F&& f);
  template <typename F>
  void for_each(F&& f) const;

  std::size_t size() const;
  VectorX<Scalar> flatten() const;
  void unflatten(const VectorX<Scalar>& flat);

  template <typename Other>
  BridgeParams<Other> cast() const;
};

/// Network inputs for one instance (encoder features plus the point cloud).
template <typename Scalar>
struct FeatureBundle {
  VectorX<Scalar> global_visual;
  VectorX<Scalar> language;
  MatrixX<Scalar> local_visual;  // n x local_in
  MatrixX<Scalar> points;        // n x 3
};

/// Candidate pairs with match flags (1 = positive, 0 = negative).
struct PairBatch {
  std::vector<IndexPair> pairs;
  std::vector<int> match;

  std::size_t positives() const;
  std::size_t negatives() const;
};

template <typename Scalar>
struct BridgeOutput {
  VectorX<Scalar> affordance;   // softmax over points
  MatrixX<Scalar> embeddings;   // n x embed_dim
  VectorX<Scalar> match_prob;   // one per pair in the batch
};

/// Throws ShapeError on mismatched inputs or parameters.
template <typename Scalar>
BridgeOutput<Scalar> bridge_forward(const FeatureBundle<Scalar>& bundle, const BridgeParams<Scalar>& params,
                                    const PairBatch& pairs = {});

struct LossConfig {
  double delta_p = 0.1;
  double delta_n = 1.0;
  double lambda = 1.0;
  bool l1_global = false;  // swap the affordance-map norm from L2 to L1

  void validate() const;
};

/// (1/N) sum_i |pred_i - gt_i|.
template <typename Scalar>
Scalar loss_global(const std::vector<VectorX<Scalar>>& pred, const std::vector<VectorX<Scalar>>& gt,
                   bool l1 = false);

template <typename Scalar>
struct EmbeddingLoss {
  Scalar total = 0;
  Scalar positive = 0;
  Scalar negative = 0;
};

/// Squared-hinge contrastive loss, averaged per instance then over instances.
/// An instance with no positive (negative) pairs contributes 0 to that term.
template <typename Scalar>
EmbeddingLoss<Scalar> loss_embedding(const std::vector<MatrixX<Scalar>>& embeddings,
                                     const std::vector<PairBatch>& pairs, const LossConfig& config);

/// Summed binary cross-entropy; probabilities are clamped to [1e-12, 1 - 1e-12].
/// Throws DomainError for values outside [0, 1] or NaN.
template <typename Scalar>
Scalar loss_match(const std::vector<VectorX<Scalar>>& match_prob, const std::vector<PairBatch>& pairs);

/// sum_i L_i / (2 sigma_i^2) + ln sigma_i. Throws DomainError for sigma <= 0.
template <typename Scalar>
Scalar awl_combine(const std::array<Scalar, 3>& losses, const std::array<Scalar, 3>& sigmas);

/// d awl / d sigma_i = -L_i / sigma_i^3 + 1 / sigma_i.
template <typename Scalar>
std::array<Scalar, 3> awl_sigma_gradient(const std::array<Scalar, 3>& losses,
                                         const std::array<Scalar, 3>& sigmas);

/// One training example: features, ground-truth map and labeled pairs.
template <typename Scalar>
struct TrainingExample {
  FeatureBundle<Scalar> features;
  VectorX<Scalar> gt_affordance;
  PairBatch pairs;
};

template <typename Scalar>
struct LossBreakdown {
  Scalar global = 0;
  Scalar embedding = 0;
  Scalar match = 0;
  Scalar combined = 0;
};

/// Combined AWL objective over a batch and its analytic gradient.
template <typename Scalar>
LossBreakdown<Scalar> bridge_loss(const std::vector<TrainingExample<Scalar>>& batch,
                                  const BridgeParams<Scalar>& params, const LossConfig& config,
                                  BridgeParams<Scalar>* grad = nullptr);

struct TrainLogRow {
  int step = 0;
  double global = 0, embedding = 0, match = 0, combined = 0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;  // one row per step, plus the final evaluation
  BridgeParams<double> params;
};

/// Full-batch gradient descent. Throws Divergence on a non-finite loss.
TrainResult train_overfit(const std::vector<TrainingExample<double>>& examples, const BridgeDims& dims,
                          const LossConfig& config, int steps, double lr, std::uint64_t seed);

/// Flat binary checkpoint: "GKCKPT01", u32 version, u32 tensor count, then per
/// tensor u32 name length, name bytes, u32 rows, u32 cols, row-major LE float32.
void save_checkpoint(const std::filesystem::path& path, const BridgeParams<double>& params);
BridgeParams<double> load_checkpoint(const std::filesystem::path& path);

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log);

}  // namespace graspkit

#include "graspkit/bridge_impl.hpp"
