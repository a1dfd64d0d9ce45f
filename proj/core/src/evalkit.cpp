#include "egoemg/evalkit.hpp"

#include <cmath>

#include "egoemg/error.hpp"

namespace egoemg {

namespace {

constexpr std::size_t kPairwiseLeaf = 8;

void check_records(const std::vector<EvalRecord>& records) {
  if (records.empty()) fail(ErrorKind::kInvalidInput, "no evaluation records");
  const Eigen::Index j = records.front().abs_errors.size();
  for (const auto& r : records) {
    if (r.abs_errors.size() != j) fail(ErrorKind::kShapeMismatch, "records disagree on the joint count");
    if (!r.abs_errors.allFinite() || (r.abs_errors.array() < 0.0).any()) {
      fail(ErrorKind::kInvalidInput, "record errors must be finite and non-negative");
    }
  }
}

double mean_of(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size()); }

}  // namespace

JointGrouping JointGrouping::fingers() {
  return {{{"thumb", {0, 1, 2, 3}},
           {"index", {4, 5, 6, 7}},
           {"middle", {8, 9, 10, 11}},
           {"ring", {12, 13, 14, 15}},
           {"pinky", {16, 17, 18, 19}},
           {"wrist_fe", {dof::kWristFe}},
           {"wrist_ru", {dof::kWristRu}}}};
}

JointGrouping JointGrouping::phalanges() {
  return {{{"proximal", {0, 1, 4, 5, 8, 9, 12, 13, 16, 17}},
           {"mid", {2, 6, 10, 14, 18}},
           {"distal", {3, 7, 11, 15, 19}}}};
}

JointGrouping JointGrouping::standard() {
  JointGrouping g = fingers();
  for (auto& entry : phalanges().groups) g.groups.push_back(std::move(entry));
  return g;
}

double pairwise_sum(const double* values, std::size_t n) {
  if (n <= kPairwiseLeaf) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

double mae(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    fail(ErrorKind::kShapeMismatch, "prediction [" + std::to_string(pred.rows()) + " x " +
                                        std::to_string(pred.cols()) + "] does not match target [" +
                                        std::to_string(gt.rows()) + " x " + std::to_string(gt.cols()) + "]");
  }
  if (pred.size() == 0) fail(ErrorKind::kShapeMismatch, "empty prediction");
  std::vector<double> diffs;
  diffs.reserve(static_cast<std::size_t>(pred.size()));
  for (Eigen::Index t = 0; t < pred.rows(); ++t) {
    for (Eigen::Index j = 0; j < pred.cols(); ++j) diffs.push_back(std::abs(pred(t, j) - gt(t, j)));
  }
  return mean_of(diffs);
}

std::vector<EvalRecord> make_records(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt, std::uint32_t user_id,
                                     const std::string& gesture, SplitTag split, Handedness hand) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) fail(ErrorKind::kShapeMismatch, "shape mismatch");
  std::vector<EvalRecord> out;
  out.reserve(static_cast<std::size_t>(pred.rows()));
  for (Eigen::Index t = 0; t < pred.rows(); ++t) {
    out.push_back({(pred.row(t) - gt.row(t)).cwiseAbs().transpose(), user_id, gesture, split, hand});
  }
  return out;
}

double pooled_mae(const std::vector<EvalRecord>& records) {
  check_records(records);
  std::vector<double> all;
  all.reserve(records.size() * static_cast<std::size_t>(records.front().abs_errors.size()));
  for (const auto& r : records) all.insert(all.end(), r.abs_errors.data(), r.abs_errors.data() + r.abs_errors.size());
  return mean_of(all);
}

std::map<std::string, double> group_mae(const std::vector<EvalRecord>& records, const JointGrouping& grouping) {
  check_records(records);
  const Eigen::Index joints = records.front().abs_errors.size();
  std::map<std::string, double> out;
  for (const auto& [name, indices] : grouping.groups) {
    std::vector<double> values;
    for (const auto& r : records) {
      for (int j : indices) {
        if (j >= 0 && j < joints) values.push_back(r.abs_errors[j]);
      }
    }
    if (!values.empty()) out[name] = mean_of(values);
  }
  return out;
}

UserAggregate per_user_aggregate(const std::vector<EvalRecord>& records) {
  check_records(records);
  std::map<std::uint32_t, std::vector<EvalRecord>> by_user;
  for (const auto& r : records) by_user[r.user_id].push_back(r);
  UserAggregate agg;
  std::vector<double> maes;
  for (const auto& [user, recs] : by_user) {
    agg.per_user[user] = pooled_mae(recs);
    maes.push_back(agg.per_user[user]);
  }
  agg.mean = mean_of(maes);
  std::vector<double> sq;
  for (double m : maes) sq.push_back((m - agg.mean) * (m - agg.mean));
  agg.std = std::sqrt(mean_of(sq));
  return agg;
}

double weighted_avg(const std::vector<SplitResult>& results) {
  std::vector<double> weighted;
  std::vector<double> counts;
  for (const auto& r : results) {
    if (r.samples < 0 || !std::isfinite(r.mae)) fail(ErrorKind::kInvalidInput, "invalid split result '" + r.name + "'");
    weighted.push_back(static_cast<double>(r.samples) * r.mae);
    counts.push_back(static_cast<double>(r.samples));
  }
  const double total = pairwise_sum(counts.data(), counts.size());
  if (total <= 0.0) fail(ErrorKind::kInvalidInput, "weighted average over zero samples");
  return pairwise_sum(weighted.data(), weighted.size()) / total;
}

}  // namespace egoemg
