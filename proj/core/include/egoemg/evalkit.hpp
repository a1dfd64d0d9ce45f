#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "egoemg/hand_model.hpp"
#include "egoemg/splits.hpp"

namespace egoemg {

/// Absolute per-joint errors of one sample (frame), in degrees.
struct EvalRecord {
  Eigen::VectorXd abs_errors;
  std::uint32_t user_id = 0;
  std::string gesture_label;
  SplitTag split = SplitTag::kTrain;
  Handedness hand = Handedness::kRight;
};

/// Named index sets over the 22 joint angles.
struct JointGrouping {
  std::vector<std::pair<std::string, std::vector<int>>> groups;

  /// thumb, index, middle, ring, pinky, wrist_fe, wrist_ru.
  static JointGrouping fingers();
  /// proximal (MCP and thumb CMC), mid (PIP and thumb MCP), distal (DIP and
  /// thumb IP).
  static JointGrouping phalanges();
  /// fingers() followed by phalanges().
  static JointGrouping standard();
};

/// Fixed-order pairwise sum; the result depends only on the input order.
double pairwise_sum(const double* values, std::size_t n);

/// (1 / JT) sum |pred - gt| over [T x J] matrices in degrees.
double mae(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt);

/// One record per row of pred / gt.
std::vector<EvalRecord> make_records(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt, std::uint32_t user_id,
                                     const std::string& gesture, SplitTag split, Handedness hand);

/// Mean over all entries of all records.
double pooled_mae(const std::vector<EvalRecord>& records);

/// Mean restricted to each group. Groups whose indices are all outside the
/// records' joint range are absent from the result.
std::map<std::string, double> group_mae(const std::vector<EvalRecord>& records, const JointGrouping& grouping);

struct UserAggregate {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation across users
  std::map<std::uint32_t, double> per_user;
};

/// Per-user MAE first, then the unweighted mean and spread across users.
UserAggregate per_user_aggregate(const std::vector<EvalRecord>& records);

struct SplitResult {
  std::string name;
  double mae = 0.0;
  std::int64_t samples = 0;
};

/// Sample-weighted mean of per-split MAEs. kInvalidInput when no samples.
double weighted_avg(const std::vector<SplitResult>& results);

}  // namespace egoemg
