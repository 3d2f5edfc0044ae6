#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "graspkit/grasp.hpp"

namespace graspkit {

struct MetricsReport {
  double kld = 0.0;
  double sim = 0.0;
  double auc_j = 0.0;
};

/// KL(gt || pred) = sum_i gt_i ln(gt_i / (pred_i + eta)); zero-mass gt terms drop out.
double kld(const Eigen::VectorXd& pred, const Eigen::VectorXd& gt, double eta = 1e-12);

/// Histogram intersection sum_i min(pred_i, gt_i).
double sim(const Eigen::VectorXd& pred, const Eigen::VectorXd& gt);

/// ROC area for ranking gt-positive points (gt_i > threshold) by pred. A
/// negative threshold selects the uniform level 1/n. Every distinct pred
/// value is a cut; tied scores form one ROC step. Throws DegenerateLabels
/// when gt has only positives or only negatives.
double auc_j(const Eigen::VectorXd& pred, const Eigen::VectorXd& gt, double threshold = -1.0);

MetricsReport compare_maps(const Eigen::VectorXd& pred, const Eigen::VectorXd& gt, double auc_threshold = -1.0);

struct GripperConfig {
  double max_width = 0.10;   // m
  double max_force = 1000.0;  // N per finger
};

/// Analytic pinch test: width gate, same-surface rejection, then gravity
/// force closure with caps clamped to the gripper force.
bool quasi_static_success(const GraspCandidate& candidate, const InstanceSpec& instance,
                          const GripperConfig& gripper, const ContactConfig& contact = {},
                          const LabelPolicy& policy = {});

struct SuccessReport {
  double top1 = 0.0;
  double top5 = 0.0;
  /// Per instance: index of the first successful candidate within the top 5,
  /// or -1.
  std::vector<int> first_success;
};

/// Fraction of instances where one of the first `n` ranked candidates succeeds.
double topn_success(const std::vector<std::vector<GraspCandidate>>& ranked,
                    const std::vector<InstanceSpec>& instances, int n, const GripperConfig& gripper,
                    const ContactConfig& contact = {}, const LabelPolicy& policy = {});

SuccessReport success_report(const std::vector<std::vector<GraspCandidate>>& ranked,
                             const std::vector<InstanceSpec>& instances, const GripperConfig& gripper,
                             const ContactConfig& contact = {}, const LabelPolicy& policy = {});

}  // namespace graspkit
