#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "egoemg/evalkit.hpp"
#include "test_support.hpp"

namespace egoemg {
namespace {

double loop_mae(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  long double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += std::abs(a(i, j) - b(i, j));
  return static_cast<double>(s / static_cast<long double>(a.size()));
}

std::vector<EvalRecord> records_for(std::uint32_t user, const Eigen::MatrixXd& err) {
  return make_records(err, Eigen::MatrixXd::Zero(err.rows(), err.cols()), user, "Rest", SplitTag::kTestUser,
                      Handedness::kRight);
}

TEST(Mae, ZeroAtTarget) {
  std::mt19937_64 gen(1);
  const Eigen::MatrixXd a = test::random_matrix(gen, 10, 22);
  EXPECT_EQ(mae(a, a), 0.0);
}

TEST(Mae, SymmetricAbsoluteValue) {
  Eigen::MatrixXd pred(4, 22);
  for (Eigen::Index i = 0; i < pred.size(); ++i) pred.data()[i] = i % 2 ? 2.0 : -2.0;
  EXPECT_EQ(mae(pred, Eigen::MatrixXd::Zero(4, 22)), 2.0);
}

TEST(Mae, MatchesDoubleLoop) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd a = test::random_matrix(gen, 146, 22, 30.0);
    const Eigen::MatrixXd b = test::random_matrix(gen, 146, 22, 30.0);
    EXPECT_NEAR(mae(a, b), loop_mae(a, b), 1e-12);
  }
}

TEST(Mae, PermutationInvariantAndPositive) {
  std::mt19937_64 gen(3);
  const Eigen::MatrixXd a = test::random_matrix(gen, 12, 22);
  const Eigen::MatrixXd b = test::random_matrix(gen, 12, 22);
  EXPECT_GT(mae(a, b), 0.0);
  EXPECT_NEAR(mae(a.colwise().reverse(), b.colwise().reverse()), mae(a, b), 1e-12);
  EXPECT_NEAR(mae(a.rowwise().reverse(), b.rowwise().reverse()), mae(a, b), 1e-12);
}

TEST(Mae, ShapeMismatch) {
  EXPECT_EQ(test::error_kind_of([] { mae(Eigen::MatrixXd::Zero(3, 22), Eigen::MatrixXd::Zero(4, 22)); }),
            ErrorKind::kShapeMismatch);
}

TEST(Groups, StandardGroupingPartitions) {
  const auto fingers = JointGrouping::fingers();
  std::multiset<int> all;
  for (const auto& [name, idx] : fingers.groups) all.insert(idx.begin(), idx.end());
  EXPECT_EQ(all.size(), 22u);
  EXPECT_EQ(std::set<int>(all.begin(), all.end()).size(), 22u);
  std::multiset<int> phal;
  for (const auto& [name, idx] : JointGrouping::phalanges().groups) phal.insert(idx.begin(), idx.end());
  EXPECT_EQ(phal.size(), 20u);
  EXPECT_EQ(std::set<int>(phal.begin(), phal.end()).size(), 20u);
}

TEST(Groups, UniformError) {
  const auto recs = records_for(1, Eigen::MatrixXd::Constant(5, 22, 3.0));
  for (const auto& [name, value] : group_mae(recs, JointGrouping::standard())) EXPECT_EQ(value, 3.0) << name;
}

TEST(Groups, WristOnlyError) {
  Eigen::MatrixXd err = Eigen::MatrixXd::Zero(5, 22);
  err.col(dof::kWristFe).setConstant(4.0);
  const auto g = group_mae(records_for(1, err), JointGrouping::standard());
  for (const auto& [name, value] : g) {
    if (name == "wrist_fe") EXPECT_GT(value, 0.0);
    else EXPECT_EQ(value, 0.0) << name;
  }
}

TEST(Groups, SizeWeightedRecombination) {
  std::mt19937_64 gen(4);
  const Eigen::MatrixXd err = test::random_matrix(gen, 30, 22).cwiseAbs();
  const auto recs = records_for(1, err);
  const auto g = group_mae(recs, JointGrouping::fingers());
  double weighted = 0.0;
  for (const char* name : {"thumb", "index", "middle", "ring", "pinky"}) weighted += 4.0 * g.at(name);
  EXPECT_NEAR(weighted / 20.0, err.leftCols(20).mean(), 1e-12);
}

TEST(Groups, OutOfRangeGroupsAbsent) {
  const auto recs = records_for(1, Eigen::MatrixXd::Ones(3, 20));
  const auto g = group_mae(recs, JointGrouping::fingers());
  EXPECT_EQ(g.count("wrist_fe"), 0u);
  EXPECT_EQ(g.count("thumb"), 1u);
}

TEST(PerUser, SingleUserHasNoSpread) {
  const auto agg = per_user_aggregate(records_for(3, Eigen::MatrixXd::Constant(4, 22, 7.0)));
  EXPECT_EQ(agg.mean, 7.0);
  EXPECT_EQ(agg.std, 0.0);
}

TEST(PerUser, TwoPointStatistics) {
  auto recs = records_for(1, Eigen::MatrixXd::Constant(4, 22, 10.0));
  const auto more = records_for(2, Eigen::MatrixXd::Constant(9, 22, 20.0));
  recs.insert(recs.end(), more.begin(), more.end());
  const auto agg = per_user_aggregate(recs);
  EXPECT_DOUBLE_EQ(agg.mean, 15.0);
  EXPECT_DOUBLE_EQ(agg.std, 5.0);
  EXPECT_NE(pooled_mae(recs), agg.mean);
}

TEST(PerUser, InvariantToDuplication) {
  std::mt19937_64 gen(5);
  std::vector<EvalRecord> recs;
  for (std::uint32_t u = 0; u < 5; ++u) {
    const auto r = records_for(u, test::random_matrix(gen, 6, 22).cwiseAbs());
    recs.insert(recs.end(), r.begin(), r.end());
  }
  auto dup = recs;
  for (const auto& r : recs)
    if (r.user_id == 2) dup.push_back(r);
  EXPECT_NEAR(per_user_aggregate(dup).mean, per_user_aggregate(recs).mean, 1e-12);
}

TEST(WeightedAvg, Examples) {
  EXPECT_DOUBLE_EQ(weighted_avg({{"a", 10.0, 5}, {"b", 20.0, 5}}), 15.0);
  EXPECT_DOUBLE_EQ(weighted_avg({{"a", 10.0, 3}, {"b", 20.0, 1}}), 12.5);
  EXPECT_EQ(test::error_kind_of([] { weighted_avg({{"a", 1.0, 0}}); }), ErrorKind::kInvalidInput);
}

TEST(WeightedAvg, MatchesPooledComputation) {
  std::mt19937_64 gen(6);
  std::vector<EvalRecord> all;
  std::vector<SplitResult> splits;
  for (int s = 0; s < 3; ++s) {
    const auto r = records_for(static_cast<std::uint32_t>(s), test::random_matrix(gen, 10 + 7 * s, 22).cwiseAbs());
    splits.push_back({"s" + std::to_string(s), pooled_mae(r), static_cast<std::int64_t>(r.size())});
    all.insert(all.end(), r.begin(), r.end());
  }
  EXPECT_NEAR(weighted_avg(splits), pooled_mae(all), 1e-12);
}

TEST(Records, InvalidErrorsRejected) {
  auto recs = records_for(1, Eigen::MatrixXd::Ones(2, 22));
  recs[0].abs_errors[0] = -1.0;
  EXPECT_EQ(test::error_kind_of([&] { pooled_mae(recs); }), ErrorKind::kInvalidInput);
  EXPECT_EQ(test::error_kind_of([] { pooled_mae({}); }), ErrorKind::kInvalidInput);
}

TEST(PairwiseSum, OrderFixed) {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / static_cast<double>(i + 1);
  EXPECT_EQ(pairwise_sum(v.data(), v.size()), pairwise_sum(v.data(), v.size()));
  EXPECT_NEAR(pairwise_sum(v.data(), v.size()), 7.485470860550345, 1e-12);
}

}  // namespace
}  // namespace egoemg
