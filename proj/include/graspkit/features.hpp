#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graspkit/bridge.hpp"
#include "graspkit/dataset.hpp"

namespace graspkit {

/// Deterministic stand-in for the pretrained point and language encoders.
///
/// Points are centered and scaled to the unit ball. Local features are
/// random Fourier projections of the normalized points (fixed seed,
/// frequency scale `frequency`) followed by an 8-slot part one-hot. The
/// global feature is a fixed random projection of the mean- and max-pooled
/// local features through tanh. The language feature hashes lowercase
/// summary tokens into signed buckets and is L2-normalized.
struct FeatureStub {
  double frequency = 3.0;
  std::uint64_t seed = 0x6b17f00dULL;

  FeatureBundle<double> operator()(const std::vector<Vec3>& points, const std::vector<PartId>& point_part,
                                   const std::string& summary, const BridgeDims& dims) const;
};

std::vector<std::string> summary_tokens(const std::string& text);

/// Subsamples a record to `n_points` points that include the endpoints of up
/// to `max_pairs` positive and `max_pairs` negative pairs, renormalizes the
/// ground-truth map over them, and builds stub features.
TrainingExample<double> training_example(const DatasetRecord& record, const BridgeDims& dims, int n_points,
                                         int max_pairs, std::uint64_t seed, const FeatureStub& stub = {});

}  // namespace graspkit
