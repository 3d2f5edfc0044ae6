#include "graspkit/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "graspkit/errors.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

namespace {

constexpr int kPartSlots = 8;

}  // namespace

std::vector<std::string> summary_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

FeatureBundle<double> FeatureStub::operator()(const std::vector<Vec3>& points, const std::vector<PartId>& point_part,
                                              const std::string& summary, const BridgeDims& dims) const {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n == 0) throw ShapeError("feature stub needs points");
  if (point_part.size() != points.size()) throw ShapeError("point parts and points differ in length");

  FeatureBundle<double> b;
  Vec3 center = Vec3::Zero();
  for (const auto& p : points) center += p;
  center /= static_cast<double>(n);
  double scale = 0.0;
  for (const auto& p : points) scale = std::max(scale, (p - center).norm());
  if (!(scale > 0.0)) scale = 1.0;
  b.points.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) b.points.row(i) = ((points[i] - center) / scale).transpose();

  const int slots = dims.local_in > kPartSlots ? kPartSlots : 0;
  const int fourier = dims.local_in - slots;
  Rng rng(derive_seed(seed, "local"));
  Eigen::MatrixXd omega(fourier, 3);
  Eigen::VectorXd phase(fourier);
  for (int f = 0; f < fourier; ++f) {
    for (int k = 0; k < 3; ++k) omega(f, k) = frequency * rng.normal();
    phase(f) = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  std::map<PartId, int> slot;
  for (auto part : std::set<PartId>(point_part.begin(), point_part.end()))
    slot.emplace(part, static_cast<int>(slot.size()) % std::max(slots, 1));

  b.local_visual = Eigen::MatrixXd::Zero(n, dims.local_in);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd proj = omega * b.points.row(i).transpose() + phase;
    b.local_visual.row(i).head(fourier) = proj.array().cos().matrix().transpose();
    if (slots > 0) b.local_visual(i, fourier + slot.at(point_part[static_cast<std::size_t>(i)])) = 1.0;
  }

  Eigen::VectorXd pooled(2 * dims.local_in);
  pooled << b.local_visual.colwise().mean().transpose(), b.local_visual.colwise().maxCoeff().transpose();
  Rng grng(derive_seed(seed, "global"));
  Eigen::MatrixXd proj(dims.global_in, pooled.size());
  const double s = 1.0 / std::sqrt(static_cast<double>(pooled.size()));
  for (Eigen::Index i = 0; i < proj.size(); ++i) proj.data()[i] = s * grng.normal();
  b.global_visual = (proj * pooled).array().tanh().matrix();

  b.language = Eigen::VectorXd::Zero(dims.language_in);
  for (const auto& tok : summary_tokens(summary)) {
    const auto h = fnv1a64(tok);
    const auto bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dims.language_in));
    b.language(bucket) += (h >> 63) ? -1.0 : 1.0;
  }
  const double norm = b.language.norm();
  if (norm > 0.0) b.language /= norm;
  return b;
}

TrainingExample<double> training_example(const DatasetRecord& record, const BridgeDims& dims, int n_points,
                                         int max_pairs, std::uint64_t seed, const FeatureStub& stub) {
  const std::size_t total = record.points.size();
  if (n_points < 2) throw DomainError("need at least two points per example");
  Rng rng(derive_seed(seed, record.instance_id));

  auto pick = [&](const std::vector<IndexPair>& pairs) {
    std::vector<std::size_t> idx(pairs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto keep = std::min(idx.size(), static_cast<std::size_t>(std::max(max_pairs, 0)));
    for (std::size_t i = 0; i < keep; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    std::vector<IndexPair> out;
    for (auto i : idx) out.push_back(pairs[i]);
    return out;
  };
  const auto pos = pick(record.positive_pairs);
  const auto neg = pick(record.negative_pairs);

  std::set<std::uint32_t> chosen;
  for (const auto* set : {&pos, &neg})
    for (const auto& p : *set) chosen.insert(p.begin(), p.end());
  const auto target = std::min(total, std::max(static_cast<std::size_t>(n_points), chosen.size()));
  std::vector<std::uint32_t> rest;
  for (std::uint32_t i = 0; i < total; ++i)
    if (!chosen.contains(i)) rest.push_back(i);
  for (std::size_t k = 0; chosen.size() < target; ++k) {
    std::swap(rest[k], rest[k + rng.below(rest.size() - k)]);
    chosen.insert(rest[k]);
  }

  std::vector<std::uint32_t> subset(chosen.begin(), chosen.end());
  std::map<std::uint32_t, std::uint32_t> remap;
  for (std::size_t i = 0; i < subset.size(); ++i) remap[subset[i]] = static_cast<std::uint32_t>(i);

  std::vector<Vec3> pts;
  std::vector<PartId> parts;
  TrainingExample<double> ex;
  ex.gt_affordance.resize(static_cast<Eigen::Index>(subset.size()));
  for (std::size_t i = 0; i < subset.size(); ++i) {
    pts.push_back(record.points[subset[i]]);
    parts.push_back(record.point_part[subset[i]]);
    ex.gt_affordance(static_cast<Eigen::Index>(i)) = record.prob(subset[i]);
  }
  const double mass = ex.gt_affordance.sum();
  if (!(mass > 0.0)) throw NoPositiveGrasps("subsample carries no affordance mass: " + record.instance_id);
  ex.gt_affordance /= mass;

  for (const auto& p : pos) {
    ex.pairs.pairs.push_back({remap.at(p[0]), remap.at(p[1])});
    ex.pairs.match.push_back(1);
  }
  for (const auto& p : neg) {
    ex.pairs.pairs.push_back({remap.at(p[0]), remap.at(p[1])});
    ex.pairs.match.push_back(0);
  }
  ex.features = stub(pts, parts, record.summary, dims);
  return ex;
}

}  // namespace graspkit
