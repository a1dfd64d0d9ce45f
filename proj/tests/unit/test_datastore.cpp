#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "egoemg/container.hpp"
#include "egoemg/episode.hpp"
#include "egoemg/splits.hpp"
#include "egoemg/timeline.hpp"
#include "test_support.hpp"

namespace egoemg {
namespace {

// ---- container ------------------------------------------------------------

Container sample_container() {
  Container c;
  c.attributes["who"] = "tester";
  c.attributes["empty"] = "";
  c.blocks.push_back(Block::f64_matrix("m", (Eigen::MatrixXd(2, 3) << 1, 2, 3, 4, 5, 6).finished()));
  c.blocks.push_back(Block::f64("t", {2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8}));
  c.blocks.push_back(Block::raw("blob", std::string("\x00\x01\xff", 3)));
  return c;
}

std::string serialize(const Container& c) {
  std::ostringstream out;
  write_container(out, c);
  return out.str();
}

// Splits a serialized container into (manifest, payload).
std::pair<std::string, std::string> split_file(const std::string& bytes) {
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 4, 8);
  return {bytes.substr(12, len), bytes.substr(12 + len + 4)};
}

std::string join_file(const std::string& manifest, const std::string& payload) {
  std::string out = "EGL1";
  const std::uint64_t len = manifest.size();
  out.append(reinterpret_cast<const char*>(&len), 8);
  out += manifest;
  const std::uint32_t crc = crc32(manifest);
  out.append(reinterpret_cast<const char*>(&crc), 4);
  return out + payload;
}

Container parse(const std::string& bytes, std::vector<std::string>* warnings = nullptr) {
  std::istringstream in(bytes);
  return read_container(in, warnings);
}

TEST(Container, Crc32CheckValue) { EXPECT_EQ(crc32("123456789"), 0xCBF43926u); }

TEST(Container, RoundTrip) {
  const auto c = sample_container();
  const auto back = parse(serialize(c));
  EXPECT_EQ(back.attributes, c.attributes);
  ASSERT_EQ(back.blocks.size(), c.blocks.size());
  for (std::size_t i = 0; i < c.blocks.size(); ++i) {
    EXPECT_EQ(back.blocks[i].name, c.blocks[i].name);
    EXPECT_EQ(back.blocks[i].dtype, c.blocks[i].dtype);
    EXPECT_EQ(back.blocks[i].shape, c.blocks[i].shape);
    EXPECT_EQ(back.blocks[i].bytes, c.blocks[i].bytes);
  }
  EXPECT_EQ(back.at("m").to_matrix(), (Eigen::MatrixXd(2, 3) << 1, 2, 3, 4, 5, 6).finished());
  EXPECT_EQ(back.at("t").to_matrix().cols(), 4);
  EXPECT_EQ(serialize(back), serialize(c));
}

TEST(Container, BadMagic) {
  auto bytes = serialize(sample_container());
  bytes[0] = 'X';
  EXPECT_EQ(test::error_kind_of([&] { parse(bytes); }), ErrorKind::kMalformedHeader);
}

TEST(Container, Truncated) {
  const auto bytes = serialize(sample_container());
  for (std::size_t keep : {std::size_t{2}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_EQ(test::error_kind_of([&] { parse(bytes.substr(0, keep)); }), ErrorKind::kTruncated) << keep;
  }
}

TEST(Container, CorruptPayloadNamesBlock) {
  const auto bytes = serialize(sample_container());
  auto [manifest, payload] = split_file(bytes);
  // Last payload byte belongs to the final block ("blob").
  payload.back() = static_cast<char>(payload.back() ^ 0x5a);
  try {
    parse(join_file(manifest, payload));
    FAIL() << "corruption not detected";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kChecksumMismatch);
    EXPECT_NE(std::string(e.what()).find("'blob'"), std::string::npos) << e.what();
  }
}

TEST(Container, CorruptManifestDetected) {
  auto bytes = serialize(sample_container());
  bytes[20] = static_cast<char>(bytes[20] ^ 0x01);
  EXPECT_EQ(test::error_kind_of([&] { parse(bytes); }), ErrorKind::kChecksumMismatch);
}

TEST(Container, UnknownDtypeSkippedWithWarning) {
  auto [manifest, payload] = split_file(serialize(sample_container()));
  const auto pos = manifest.find("\"u8\"");
  ASSERT_NE(pos, std::string::npos);
  manifest.replace(pos, 4, "\"q7\"");
  std::vector<std::string> warnings;
  const auto c = parse(join_file(manifest, payload), &warnings);
  EXPECT_EQ(c.find("blob"), nullptr);
  EXPECT_NE(c.find("m"), nullptr);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("blob"), std::string::npos);
}

TEST(Container, MissingBlockIsMalformed) {
  const auto c = sample_container();
  EXPECT_EQ(test::error_kind_of([&] { c.at("nope"); }), ErrorKind::kMalformedHeader);
}

// ---- episodes -------------------------------------------------------------

void expect_same_episode(const Episode& a, const Episode& b) {
  EXPECT_EQ(a.participant_id, b.participant_id);
  EXPECT_EQ(a.gesture_label, b.gesture_label);
  EXPECT_EQ(a.emg.timestamps_ms, b.emg.timestamps_ms);
  EXPECT_EQ(a.emg.samples, b.emg.samples);
  EXPECT_EQ(a.emg.sample_rate, b.emg.sample_rate);
  EXPECT_EQ(a.emg.kind, b.emg.kind);
  for (auto hand : {Handedness::kRight, Handedness::kLeft}) {
    EXPECT_EQ(a.pose(hand).timestamps_ms, b.pose(hand).timestamps_ms);
    EXPECT_EQ(a.pose(hand).angles_deg, b.pose(hand).angles_deg);
  }
  ASSERT_EQ(a.markers.has_value(), b.markers.has_value());
  if (a.markers) {
    EXPECT_EQ(a.markers->timestamps_ms, b.markers->timestamps_ms);
    EXPECT_EQ(a.markers->positions_mm, b.markers->positions_mm);
  }
  ASSERT_EQ(a.calibration.has_value(), b.calibration.has_value());
  if (a.calibration) {
    EXPECT_EQ(a.calibration->intrinsics(), b.calibration->intrinsics());
    EXPECT_EQ(a.calibration->rotation, b.calibration->rotation);
    EXPECT_EQ(a.calibration->translation, b.calibration->translation);
    EXPECT_EQ(a.calibration->width, b.calibration->width);
    EXPECT_EQ(a.calibration->height, b.calibration->height);
  }
  EXPECT_EQ(a.opaque, b.opaque);
}

Episode decorated_episode(std::uint64_t seed) {
  auto e = synth_episode(seed, 4.0, gesture_vocabulary()[seed % kNumGestures], static_cast<std::uint32_t>(seed % 41));
  std::mt19937_64 gen(seed);
  MarkerStream m;
  m.timestamps_ms = e.pose_right.timestamps_ms;
  m.positions_mm = test::random_matrix(gen, m.timestamps_ms.size(), 3 * 21, 50.0);
  e.markers = m;
  PinholeCamera cam;
  cam.fx = 600.5;
  cam.fy = 601.25;
  cam.cx = 320;
  cam.cy = 240;
  cam.width = 640;
  cam.height = 480;
  cam.translation = Vec3(1, 2, 3);
  e.calibration = cam;
  e.opaque["imu"] = std::string("\x01\x02\x00\x03", 4);
  return e;
}

TEST(Vocabulary, SixtyDistinctLabelsInThreeFamilies) {
  const auto& v = gesture_vocabulary();
  ASSERT_EQ(v.size(), 60u);
  EXPECT_EQ(std::set<std::string>(v.begin(), v.end()).size(), 60u);
  EXPECT_EQ(gesture_family(v[0]), GestureFamily::kSingleHand);
  EXPECT_EQ(gesture_family(v[30]), GestureFamily::kSymmetricBimanual);
  EXPECT_EQ(gesture_family(v[59]), GestureFamily::kAsymmetricBimanual);
  EXPECT_EQ(test::error_kind_of([] { gesture_family("Juggle"); }), ErrorKind::kInvalidInput);
}

TEST(Synth, StreamLengthsFollowDuration) {
  const auto e = synth_episode(7, 8.0, "Rest");
  EXPECT_EQ(e.emg.length(), 16000);
  EXPECT_EQ(e.emg.samples.cols(), kEmgChannels);
  EXPECT_EQ(e.pose_right.frames(), 961);
  EXPECT_EQ(e.pose_left.frames(), 961);
  EXPECT_NO_THROW(e.validate());
}

TEST(Synth, PosesInsideLimits) {
  const auto sk = HandSkeleton::default_right();
  const auto e = synth_episode(8, 6.0, gesture_vocabulary()[40]);
  for (auto hand : {Handedness::kRight, Handedness::kLeft}) {
    const auto& p = e.pose(hand);
    for (Eigen::Index f = 0; f < p.frames(); ++f)
      for (int d = 0; d < kNumDofs; ++d) {
        ASSERT_GE(p.angles_deg(f, d), sk.limit(d).min_deg);
        ASSERT_LE(p.angles_deg(f, d), sk.limit(d).max_deg);
      }
  }
}

TEST(Synth, DeterministicPerSeed) {
  const auto a = synth_episode(9, 4.0, "Rest");
  const auto b = synth_episode(9, 4.0, "Rest");
  const auto c = synth_episode(10, 4.0, "Rest");
  EXPECT_EQ(a.emg.samples, b.emg.samples);
  EXPECT_EQ(a.pose_right.angles_deg, b.pose_right.angles_deg);
  EXPECT_NE(a.emg.samples, c.emg.samples);
  EXPECT_NE(a.pose_right.angles_deg, c.pose_right.angles_deg);
}

TEST(Synth, MainsComponentRemovedByFilter) {
  const auto e = synth_episode(11, 4.0, "Rest");
  const auto window = e.emg.window(0, 8000);
  const auto filtered = filter_emg(window);
  for (int c : {0, 9}) {
    const double before = test::tone_amplitude(window.samples.col(c), kSynthInterferenceHz, kEmgSampleRate);
    const double after = test::tone_amplitude(filtered.samples.col(c), kSynthInterferenceHz, kEmgSampleRate);
    EXPECT_GT(before, 0.01);
    EXPECT_GE(20.0 * std::log10(before / after), 30.0) << "channel " << c;
  }
}

TEST(Synth, RejectsBadArguments) {
  EXPECT_EQ(test::error_kind_of([] { synth_episode(1, 3.0, "Rest"); }), ErrorKind::kInvalidInput);
  EXPECT_EQ(test::error_kind_of([] { synth_episode(1, 5.0, "Juggle"); }), ErrorKind::kInvalidInput);
}

TEST(EpisodeIo, RoundTripIsBitIdentical) {
  test::TempDir dir("episode");
  const auto e = decorated_episode(12);
  write_episode(e, dir / "e.egl");
  std::vector<std::string> warnings;
  const auto back = read_episode(dir / "e.egl", &warnings);
  EXPECT_TRUE(warnings.empty());
  expect_same_episode(e, back);
}

TEST(EpisodeIo, ManyRandomEpisodes) {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto e = decorated_episode(seed);
    std::ostringstream out;
    write_container(out, episode_to_container(e));
    std::istringstream in(out.str());
    expect_same_episode(e, episode_from_container(read_container(in)));
  }
}

TEST(EpisodeIo, CorruptPayloadNamesBlock) {
  test::TempDir dir("corrupt");
  write_episode(synth_episode(13, 4.0, "Rest"), dir / "e.egl");
  auto bytes = test::slurp(dir / "e.egl");
  auto [manifest, payload] = split_file(bytes);
  // emg.timestamps is the first payload block.
  payload[3] = static_cast<char>(payload[3] ^ 0x10);
  {
    std::ofstream out(dir / "bad.egl", std::ios::binary);
    out << join_file(manifest, payload);
  }
  try {
    read_episode(dir / "bad.egl");
    FAIL() << "corruption not detected";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kChecksumMismatch);
    EXPECT_NE(std::string(e.what()).find("emg.timestamps"), std::string::npos) << e.what();
  }
}

TEST(EpisodeIo, UnknownBlockSkippedWithWarning) {
  const auto e = synth_episode(14, 4.0, "Rest");
  auto c = episode_to_container(e);
  c.blocks.push_back(Block::f64("future.gaze", {3}, {1, 2, 3}));
  std::ostringstream out;
  write_container(out, c);
  std::istringstream in(out.str());
  std::vector<std::string> warnings;
  const auto back = episode_from_container(read_container(in, &warnings), &warnings);
  expect_same_episode(e, back);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("future.gaze"), std::string::npos);
}

TEST(EpisodeValidation, RejectsBadRecords) {
  auto label = synth_episode(15, 4.0, "Rest");
  label.gesture_label = "Juggle";
  EXPECT_EQ(test::error_kind_of([&] { label.validate(); }), ErrorKind::kInvalidInput);
  auto order = synth_episode(15, 4.0, "Rest");
  order.emg.timestamps_ms[10] = order.emg.timestamps_ms[9];
  EXPECT_EQ(test::error_kind_of([&] { order.validate(); }), ErrorKind::kInvalidInput);
}

// ---- timeline -------------------------------------------------------------

TEST(Resample, ExactAtSourceTimes) {
  std::mt19937_64 gen(1);
  Eigen::VectorXd t(6);
  t << 0, 1.5, 2, 7, 8.25, 11;
  const Eigen::MatrixXd v = test::random_matrix(gen, 6, 3);
  EXPECT_EQ(resample_to_timeline(t, v, t), v);
}

TEST(Resample, LinearMidpoint) {
  const Eigen::VectorXd src = (Eigen::VectorXd(2) << 0, 10).finished();
  const Eigen::MatrixXd val = (Eigen::MatrixXd(2, 1) << 0, 10).finished();
  const Eigen::VectorXd tgt = (Eigen::VectorXd(1) << 4).finished();
  EXPECT_EQ(resample_to_timeline(src, val, tgt)(0, 0), 4.0);
}

TEST(Resample, ExactOnLinearSignals) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> step(0.1, 2.0);
  Eigen::VectorXd src(40);
  src[0] = 0.0;
  for (int i = 1; i < 40; ++i) src[i] = src[i - 1] + step(gen);
  Eigen::MatrixXd val(40, 2);
  for (int i = 0; i < 40; ++i) val.row(i) << 3.0 * src[i] - 1.0, -0.5 * src[i] + 7.0;
  const Eigen::VectorXd tgt = Eigen::VectorXd::LinSpaced(500, 0.0, src[39]);
  const Eigen::MatrixXd out = resample_to_timeline(src, val, tgt);
  for (int i = 0; i < 500; ++i) {
    EXPECT_NEAR(out(i, 0), 3.0 * tgt[i] - 1.0, 1e-9);
    EXPECT_NEAR(out(i, 1), -0.5 * tgt[i] + 7.0, 1e-9);
  }
}

TEST(Resample, OutsideRangeRejected) {
  const Eigen::VectorXd src = (Eigen::VectorXd(2) << 0, 10).finished();
  const Eigen::MatrixXd val = Eigen::MatrixXd::Zero(2, 1);
  const Eigen::VectorXd tgt = (Eigen::VectorXd(1) << 10.5).finished();
  EXPECT_EQ(test::error_kind_of([&] { resample_to_timeline(src, val, tgt); }), ErrorKind::kOutOfRange);
}

TEST(Windows, OffsetArithmetic) {
  EXPECT_EQ(window_offsets(7790, 7790, 123), (std::vector<Eigen::Index>{0}));
  EXPECT_EQ(window_offsets(15580, 7790, 7790), (std::vector<Eigen::Index>{0, 7790}));
  EXPECT_EQ(window_offsets(15580, 7790, 1947), (std::vector<Eigen::Index>{0, 1947, 3894, 5841, 7788}));
  EXPECT_TRUE(window_offsets(7789, 7790, 7790).empty());
}

TEST(Windows, AlignedTargets) {
  const auto e = synth_episode(16, 8.0, gesture_vocabulary()[35]);
  const auto set = extract_windows(e);
  EXPECT_TRUE(set.warnings.empty());
  ASSERT_EQ(set.windows.size(), 2u);
  EXPECT_EQ(set.windows[0].offset, 0);
  EXPECT_EQ(set.windows[1].offset, 7790);
  for (const auto& w : set.windows) {
    EXPECT_EQ(w.window.length(), 7790);
    EXPECT_LE(w.offset + w.window.length(), e.emg.length());
    EXPECT_EQ(w.frame_times_ms.size(), 146);
    EXPECT_EQ(w.targets_right.rows(), 146);
    EXPECT_EQ(w.targets_left.cols(), 22);
    EXPECT_EQ(w.center_index, 3895);
    EXPECT_DOUBLE_EQ(w.frame_times_ms[0], e.emg.timestamps_ms[w.offset + 255]);
    EXPECT_EQ(w.window.samples, e.emg.samples.middleRows(w.offset, 7790));
    const double center_time = e.emg.timestamps_ms[w.offset + 3895];
    const auto& pose_t = e.pose_right.timestamps_ms;
    const Eigen::Index f = w.center_pose_frame_right;
    ASSERT_GE(f, 0);
    for (Eigen::Index g = 0; g < pose_t.size(); ++g) {
      EXPECT_LE(std::abs(pose_t[f] - center_time), std::abs(pose_t[g] - center_time) + 1e-12);
    }
  }
}

TEST(Windows, ShortEpisodeWarns) {
  auto e = synth_episode(17, 4.0, "Rest");
  const auto set = extract_windows(e, 9000);
  EXPECT_TRUE(set.windows.empty());
  EXPECT_EQ(set.warnings.size(), 1u);
}

// ---- splits ---------------------------------------------------------------

std::vector<std::uint32_t> roster(int n) {
  std::vector<std::uint32_t> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 100u);
  return p;
}

std::vector<std::string> gestures(int n) {
  const auto& v = gesture_vocabulary();
  return {v.begin(), v.begin() + n};
}

TEST(Splits, ReferenceGridRatio) {
  const auto s = generate_splits(roster(41), gestures(60), 1);
  EXPECT_EQ(s.held_out_users.size(), 6u);
  EXPECT_EQ(s.held_out_gestures.size(), 10u);
  EXPECT_EQ(s.episodes.size(), 41u * 60u);
  EXPECT_NEAR(s.train_fraction(), 0.7, 0.03);
}

TEST(Splits, AuditNoLeakage) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = generate_splits(roster(41), gestures(60), seed);
    for (std::size_t i = 0; i < s.episodes.size(); ++i) {
      const bool user = s.is_held_out_user(s.episodes[i].participant);
      const bool gesture = s.is_held_out_gesture(s.episodes[i].gesture);
      switch (s.tags[i]) {
        case SplitTag::kTrain: ASSERT_TRUE(!user && !gesture); break;
        case SplitTag::kValGesture:
        case SplitTag::kTestGesture: ASSERT_TRUE(!user && gesture); break;
        case SplitTag::kValUser:
        case SplitTag::kTestUser: ASSERT_TRUE(user && !gesture); break;
        case SplitTag::kValBoth:
        case SplitTag::kTestBoth: ASSERT_TRUE(user && gesture); break;
      }
    }
  }
}

TEST(Splits, DeterministicAndSeedSensitive) {
  const auto a = generate_splits(roster(41), gestures(60), 5);
  const auto b = generate_splits(roster(41), gestures(60), 5);
  const auto c = generate_splits(roster(41), gestures(60), 6);
  EXPECT_EQ(a.held_out_users, b.held_out_users);
  EXPECT_EQ(a.held_out_gestures, b.held_out_gestures);
  EXPECT_EQ(a.tags, b.tags);
  EXPECT_TRUE(a.held_out_users != c.held_out_users || a.held_out_gestures != c.held_out_gestures);
}

TEST(Splits, ValAndTestHalvesPresent) {
  const auto s = generate_splits(roster(41), gestures(60), 2);
  std::map<SplitTag, int> counts;
  for (auto t : s.tags) ++counts[t];
  EXPECT_EQ(counts.size(), 7u);
  EXPECT_EQ(counts[SplitTag::kValBoth] + counts[SplitTag::kTestBoth], 60);
}

TEST(Splits, SubsetTagging) {
  const std::vector<EpisodeKey> eps{{100, gesture_vocabulary()[0]}, {101, gesture_vocabulary()[1]}};
  const auto s = generate_splits(roster(41), gestures(60), 3, eps);
  ASSERT_EQ(s.tags.size(), 2u);
  EXPECT_EQ(s.episodes, eps);
}

TEST(Splits, SmallRosters) {
  EXPECT_EQ(test::error_kind_of([] { generate_splits(roster(6), gestures(60), 1); }), ErrorKind::kRosterTooSmall);
  EXPECT_EQ(test::error_kind_of([] { generate_splits(roster(41), gestures(10), 1); }), ErrorKind::kRosterTooSmall);
  const auto s = generate_splits(roster(7), gestures(11), 1);
  EXPECT_GE(s.held_out_users.size(), 1u);
  EXPECT_LT(s.held_out_users.size(), 7u);
  auto dup = roster(8);
  dup[3] = dup[2];
  EXPECT_EQ(test::error_kind_of([&] { generate_splits(dup, gestures(20), 1); }), ErrorKind::kInvalidInput);
}

TEST(Splits, TagNamesRoundTripAndCsv) {
  for (auto t : {SplitTag::kTrain, SplitTag::kValGesture, SplitTag::kValUser, SplitTag::kValBoth, SplitTag::kTestGesture,
                 SplitTag::kTestUser, SplitTag::kTestBoth}) {
    EXPECT_EQ(parse_split_tag(to_string(t)), t);
  }
  EXPECT_EQ(test::error_kind_of([] { parse_split_tag("holdout"); }), ErrorKind::kInvalidInput);
  std::ostringstream out;
  write_splits_csv(out, generate_splits(roster(41), gestures(60), 1));
  const auto text = out.str();
  EXPECT_EQ(text.rfind("participant,gesture,split\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 41 * 60);
}

}  // namespace
}  // namespace egoemg
