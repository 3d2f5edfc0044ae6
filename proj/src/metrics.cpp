#include "graspkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "graspkit/errors.hpp"

namespace graspkit {

namespace {

void check_same_shape(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw ShapeMismatch("maps differ in length");
  if (a.size() == 0) throw ShapeMismatch("empty map");
}

}  // namespace

double kld(const Eigen::VectorXd& pred, const Eigen::VectorXd& gt, double eta) {
  check_same_shape(pred, gt);
  double total = 0.0;
  for (Eigen::Index i = 0; i < gt.size(); ++i)
    if (gt(i) > 0.0) total += gt(i) * std::log(gt(i) / (pred(i) + eta));
  return total;
}

double sim(const Eigen::VectorXd& pred, const Eigen::VectorXd& gt) {
  check_same_shape(pred, gt);
  return pred.cwiseMin(gt).sum();
}

double auc_j(const Eigen::VectorXd& pred, const Eigen::VectorXd& gt, double threshold) {
  check_same_shape(pred, gt);
  const auto n = gt.size();
  if (threshold < 0.0) threshold = 1.0 / static_cast<double>(n);
  std::size_t positives = 0;
  for (Eigen::Index i = 0; i < n; ++i) positives += gt(i) > threshold;
  const std::size_t negatives = static_cast<std::size_t>(n) - positives;
  if (positives == 0 || negatives == 0) throw DegenerateLabels("auc_j needs both positive and negative points");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pred(a) > pred(b); });

  double area = 0.0, tpr_prev = 0.0, fpr_prev = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double v = pred(order[k]);
    for (; k < order.size() && pred(order[k]) == v; ++k) (gt(order[k]) > threshold ? tp : fp)++;
    const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
    const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
    area += 0.5 * (fpr - fpr_prev) * (tpr + tpr_prev);
    tpr_prev = tpr;
    fpr_prev = fpr;
  }
  return area;
}

MetricsReport compare_maps(const Eigen::VectorXd& pred, const Eigen::VectorXd& gt, double auc_threshold) {
  return {kld(pred, gt), sim(pred, gt), auc_j(pred, gt, auc_threshold)};
}

bool quasi_static_success(const GraspCandidate& candidate, const InstanceSpec& instance,
                          const GripperConfig& gripper, const ContactConfig& contact, const LabelPolicy& policy) {
  const double width = (candidate.contact2.position - candidate.contact1.position).norm();
  if (!(width > 0.0) || width > gripper.max_width) return false;
  if (same_surface(candidate.contact1.normal, candidate.contact2.normal, policy.same_surface_angle_deg))
    return false;
  GraspCandidate c = candidate;
  c.width = width;
  return check_grasp(c, instance.mass_props, instance.assignments, contact, policy, gripper.max_force).feasible;
}

SuccessReport success_report(const std::vector<std::vector<GraspCandidate>>& ranked,
                             const std::vector<InstanceSpec>& instances, const GripperConfig& gripper,
                             const ContactConfig& contact, const LabelPolicy& policy) {
  if (ranked.size() != instances.size()) throw ShapeMismatch("one ranked list per instance required");
  SuccessReport report;
  std::size_t hit1 = 0, hit5 = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    int first = -1;
    const auto limit = std::min<std::size_t>(ranked[i].size(), 5);
    for (std::size_t k = 0; k < limit && first < 0; ++k)
      if (quasi_static_success(ranked[i][k], instances[i], gripper, contact, policy)) first = static_cast<int>(k);
    report.first_success.push_back(first);
    hit1 += first == 0;
    hit5 += first >= 0;
  }
  if (!instances.empty()) {
    report.top1 = static_cast<double>(hit1) / static_cast<double>(instances.size());
    report.top5 = static_cast<double>(hit5) / static_cast<double>(instances.size());
  }
  return report;
}

double topn_success(const std::vector<std::vector<GraspCandidate>>& ranked,
                    const std::vector<InstanceSpec>& instances, int n, const GripperConfig& gripper,
                    const ContactConfig& contact, const LabelPolicy& policy) {
  if (ranked.size() != instances.size()) throw ShapeMismatch("one ranked list per instance required");
  if (instances.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto limit = std::min<std::size_t>(ranked[i].size(), static_cast<std::size_t>(std::max(n, 0)));
    for (std::size_t k = 0; k < limit; ++k)
      if (quasi_static_success(ranked[i][k], instances[i], gripper, contact, policy)) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(instances.size());
}

}  // namespace graspkit
