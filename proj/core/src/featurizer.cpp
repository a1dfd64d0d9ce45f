#include "egoemg/featurizer.hpp"

#include <string>

#include "egoemg/error.hpp"

namespace egoemg {

namespace {

struct ConvSpec {
  Eigen::Index in;
  int kernel;
  int stride;
};

constexpr ConvSpec kConv1{kEmgChannels, 11, 5};
constexpr ConvSpec kConv2{kFeatureDim, 5, 2};
constexpr ConvSpec kStage1In{kFeatureDim, 9, 5};
constexpr int kStage1Tds = 5;
constexpr ConvSpec kStage2In{kFeatureDim, 3, 1};
constexpr int kStage2Tds = 3;
constexpr Eigen::Index kSeHidden = kFeatureDim / kSeReduction;

Eigen::Index valid_length(Eigen::Index length, int kernel, int stride) {
  return length < kernel ? 0 : (length - kernel) / stride + 1;
}

void check_conv(const Conv1d& c, Eigen::Index out, const ConvSpec& spec, const std::string& name) {
  if (c.kernel != spec.kernel || c.stride != spec.stride || c.weight.rows() != out ||
      c.weight.cols() != spec.in * spec.kernel || c.bias.size() != out) {
    fail(ErrorKind::kShapeMismatch, "featurizer layer " + name + " has the wrong shape");
  }
}

void check_linear(const Linear& l, Eigen::Index out, Eigen::Index in, const std::string& name) {
  if (l.weight.rows() != out || l.weight.cols() != in || l.bias.size() != out) {
    fail(ErrorKind::kShapeMismatch, "featurizer layer " + name + " has the wrong shape");
  }
}

void check_norm(const LayerNorm& n, const std::string& name) {
  if (n.gamma.size() != kFeatureDim || n.beta.size() != kFeatureDim) {
    fail(ErrorKind::kShapeMismatch, "featurizer layer " + name + " has the wrong shape");
  }
}

void check_tds(const TdsBlockWeights& b, int kernel, const std::string& name) {
  check_conv(b.conv, kTdsGridChannels, {kTdsGridChannels, kernel, 1}, name + ".conv");
  check_norm(b.conv_norm, name + ".conv_norm");
  check_linear(b.fc1, kFeatureDim, kFeatureDim, name + ".fc1");
  check_linear(b.fc2, kFeatureDim, kFeatureDim, name + ".fc2");
  check_norm(b.fc_norm, name + ".fc_norm");
}

void check_se(const SeWeights& se, const std::string& name) {
  check_linear(se.reduce, kSeHidden, kFeatureDim, name + ".reduce");
  check_linear(se.expand, kFeatureDim, kSeHidden, name + ".expand");
}

TdsBlockWeights seeded_tds(const ParamInit& init, const std::string& name, int kernel) {
  return {Conv1d::seeded(init, name + ".conv", kTdsGridChannels, kTdsGridChannels, kernel, 1),
          LayerNorm::identity(kFeatureDim), Linear::seeded(init, name + ".fc1", kFeatureDim, kFeatureDim),
          Linear::seeded(init, name + ".fc2", kFeatureDim, kFeatureDim), LayerNorm::identity(kFeatureDim)};
}

SeWeights seeded_se(const ParamInit& init, const std::string& name) {
  return {Linear::seeded(init, name + ".reduce", kSeHidden, kFeatureDim),
          Linear::seeded(init, name + ".expand", kFeatureDim, kSeHidden)};
}

TdsBlockWeights import_tds(const WeightArchive& a, const std::string& name, int kernel) {
  return {Conv1d::import_from(a, name + ".conv", kTdsGridChannels, kTdsGridChannels, kernel, 1),
          LayerNorm::import_from(a, name + ".conv_norm", kFeatureDim),
          Linear::import_from(a, name + ".fc1", kFeatureDim, kFeatureDim),
          Linear::import_from(a, name + ".fc2", kFeatureDim, kFeatureDim),
          LayerNorm::import_from(a, name + ".fc_norm", kFeatureDim)};
}

void export_tds(WeightArchive& a, const std::string& name, const TdsBlockWeights& b) {
  b.conv.export_to(a, name + ".conv");
  b.conv_norm.export_to(a, name + ".conv_norm");
  b.fc1.export_to(a, name + ".fc1");
  b.fc2.export_to(a, name + ".fc2");
  b.fc_norm.export_to(a, name + ".fc_norm");
}

Eigen::MatrixXd relu_inplace(Eigen::MatrixXd x) {
  x = x.cwiseMax(0.0);
  return x;
}

}  // namespace

void FeaturizerWeights::validate() const {
  check_conv(conv1, kFeatureDim, kConv1, "conv1");
  check_conv(conv2, kFeatureDim, kConv2, "conv2");
  check_conv(stage1_in, kFeatureDim, kStage1In, "stage1.in");
  check_tds(stage1_tds, kStage1Tds, "stage1.tds");
  check_se(se1, "stage1.se");
  check_conv(stage2_in, kFeatureDim, kStage2In, "stage2.in");
  check_tds(stage2_tds, kStage2Tds, "stage2.tds");
  check_se(se2, "stage2.se");
}

FeaturizerWeights FeaturizerWeights::seeded(std::uint64_t seed) {
  const ParamInit init(seed);
  FeaturizerWeights w;
  w.conv1 = Conv1d::seeded(init, "featurizer.conv1", kFeatureDim, kConv1.in, kConv1.kernel, kConv1.stride);
  w.conv2 = Conv1d::seeded(init, "featurizer.conv2", kFeatureDim, kConv2.in, kConv2.kernel, kConv2.stride);
  w.stage1_in =
      Conv1d::seeded(init, "featurizer.stage1.in", kFeatureDim, kStage1In.in, kStage1In.kernel, kStage1In.stride);
  w.stage1_tds = seeded_tds(init, "featurizer.stage1.tds", kStage1Tds);
  w.se1 = seeded_se(init, "featurizer.stage1.se");
  w.stage2_in =
      Conv1d::seeded(init, "featurizer.stage2.in", kFeatureDim, kStage2In.in, kStage2In.kernel, kStage2In.stride);
  w.stage2_tds = seeded_tds(init, "featurizer.stage2.tds", kStage2Tds);
  w.se2 = seeded_se(init, "featurizer.stage2.se");
  return w;
}

FeaturizerWeights FeaturizerWeights::import_from(const WeightArchive& a, const std::string& prefix) {
  FeaturizerWeights w;
  w.conv1 = Conv1d::import_from(a, prefix + ".conv1", kFeatureDim, kConv1.in, kConv1.kernel, kConv1.stride);
  w.conv2 = Conv1d::import_from(a, prefix + ".conv2", kFeatureDim, kConv2.in, kConv2.kernel, kConv2.stride);
  w.stage1_in =
      Conv1d::import_from(a, prefix + ".stage1.in", kFeatureDim, kStage1In.in, kStage1In.kernel, kStage1In.stride);
  w.stage1_tds = import_tds(a, prefix + ".stage1.tds", kStage1Tds);
  w.se1 = {Linear::import_from(a, prefix + ".stage1.se.reduce", kSeHidden, kFeatureDim),
           Linear::import_from(a, prefix + ".stage1.se.expand", kFeatureDim, kSeHidden)};
  w.stage2_in =
      Conv1d::import_from(a, prefix + ".stage2.in", kFeatureDim, kStage2In.in, kStage2In.kernel, kStage2In.stride);
  w.stage2_tds = import_tds(a, prefix + ".stage2.tds", kStage2Tds);
  w.se2 = {Linear::import_from(a, prefix + ".stage2.se.reduce", kSeHidden, kFeatureDim),
           Linear::import_from(a, prefix + ".stage2.se.expand", kFeatureDim, kSeHidden)};
  return w;
}

void FeaturizerWeights::export_to(WeightArchive& a, const std::string& prefix) const {
  conv1.export_to(a, prefix + ".conv1");
  conv2.export_to(a, prefix + ".conv2");
  stage1_in.export_to(a, prefix + ".stage1.in");
  export_tds(a, prefix + ".stage1.tds", stage1_tds);
  se1.reduce.export_to(a, prefix + ".stage1.se.reduce");
  se1.expand.export_to(a, prefix + ".stage1.se.expand");
  stage2_in.export_to(a, prefix + ".stage2.in");
  export_tds(a, prefix + ".stage2.tds", stage2_tds);
  se2.reduce.export_to(a, prefix + ".stage2.se.reduce");
  se2.expand.export_to(a, prefix + ".stage2.se.expand");
}

std::array<Eigen::Index, 6> featurizer_lengths(Eigen::Index samples) {
  std::array<Eigen::Index, 6> len{};
  len[0] = valid_length(samples, kConv1.kernel, kConv1.stride);
  len[1] = valid_length(len[0], kConv2.kernel, kConv2.stride);
  len[2] = valid_length(len[1], kStage1In.kernel, kStage1In.stride);
  len[3] = valid_length(len[2], kStage1Tds, 1);
  len[4] = valid_length(len[3], kStage2In.kernel, kStage2In.stride);
  len[5] = valid_length(len[4], kStage2Tds, 1);
  return len;
}

Eigen::Index featurizer_min_samples() {
  // Walk the layers backwards from one output frame.
  Eigen::Index need = 1;
  need = need + kStage2Tds - 1;
  need = (need - 1) * kStage2In.stride + kStage2In.kernel;
  need = need + kStage1Tds - 1;
  need = (need - 1) * kStage1In.stride + kStage1In.kernel;
  need = (need - 1) * kConv2.stride + kConv2.kernel;
  need = (need - 1) * kConv1.stride + kConv1.kernel;
  return need;
}

Eigen::MatrixXd se_gate(const Eigen::MatrixXd& features, const SeWeights& weights, Eigen::VectorXd* gate) {
  const Eigen::VectorXd squeezed = features.rowwise().mean();
  const Eigen::MatrixXd hidden = relu_inplace(weights.reduce.forward(squeezed));
  Eigen::VectorXd g = weights.expand.forward(hidden).col(0).unaryExpr([](double v) { return logistic(v); });
  Eigen::MatrixXd out = g.asDiagonal() * features;
  if (gate) *gate = std::move(g);
  return out;
}

Eigen::MatrixXd tds_block(const Eigen::MatrixXd& x, const TdsBlockWeights& w) {
  const int k = w.conv.kernel;
  const Eigen::Index t_in = x.cols();
  const Eigen::Index t_out = t_in - k + 1;
  if (t_out <= 0) fail(ErrorKind::kLength, "TDS block input shorter than its kernel");
  Eigen::MatrixXd y(kFeatureDim, t_out);
  Eigen::MatrixXd grid_column(kTdsGridChannels, t_in);
  for (int col = 0; col < kTdsGridWidth; ++col) {
    for (int c = 0; c < kTdsGridChannels; ++c) grid_column.row(c) = x.row(c * kTdsGridWidth + col);
    const Eigen::MatrixXd conv = w.conv.forward(grid_column);
    for (int c = 0; c < kTdsGridChannels; ++c) y.row(c * kTdsGridWidth + col) = conv.row(c);
  }
  const Eigen::Index crop = (k - 1) / 2;
  y = relu_inplace(std::move(y)) + x.middleCols(crop, t_out);
  y = w.conv_norm.forward(y);

  const Eigen::MatrixXd hidden = relu_inplace(w.fc1.forward(y));
  return w.fc_norm.forward(w.fc2.forward(hidden) + y);
}

FeatureSequence tds_featurize(const EmgWindow& window, const FeaturizerWeights& weights, FeaturizerTrace* trace) {
  window.validate();
  weights.validate();
  const Eigen::Index n = window.length();
  if (n < featurizer_min_samples()) {
    fail(ErrorKind::kLength, "featurizer needs at least " + std::to_string(featurizer_min_samples()) +
                                 " samples, got " + std::to_string(n));
  }
  if (!window.samples.allFinite()) fail(ErrorKind::kInvalidInput, "EMG samples must be finite");

  const Eigen::MatrixXd x0 = window.samples.transpose();
  Eigen::MatrixXd h = relu_inplace(weights.conv1.forward(x0));
  if (trace) trace->layers[0] = h;
  h = relu_inplace(weights.conv2.forward(h));
  if (trace) trace->layers[1] = h;

  h = relu_inplace(weights.stage1_in.forward(h));
  if (trace) trace->layers[2] = h;
  h = tds_block(h, weights.stage1_tds);
  if (trace) {
    trace->layers[3] = h;
    trace->stage1_pre_se = h;
  }
  h = se_gate(h, weights.se1, trace ? &trace->stage1_gate : nullptr);

  h = relu_inplace(weights.stage2_in.forward(h));
  if (trace) trace->layers[4] = h;
  h = tds_block(h, weights.stage2_tds);
  if (trace) {
    trace->layers[5] = h;
    trace->stage2_pre_se = h;
  }
  h = se_gate(h, weights.se2, trace ? &trace->stage2_gate : nullptr);

  FeatureSequence out;
  out.frame_rate = static_cast<double>(h.cols()) * window.sample_rate / static_cast<double>(n);
  out.data = std::move(h);
  return out;
}

}  // namespace egoemg
