#include "egoemg/episode.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "egoemg/error.hpp"

namespace egoemg {

namespace {

const char* const kOpaquePrefix = "opaque/";

const std::set<std::string>& known_blocks() {
  static const std::set<std::string> names = {
      "emg.timestamps",     "emg.samples",         "emg.sample_rate",       "pose.right.timestamps",
      "pose.right.angles",  "pose.left.timestamps", "pose.left.angles",     "markers.timestamps",
      "markers.positions",  "calibration.intrinsics", "calibration.rotation", "calibration.translation"};
  return names;
}

void check_increasing(const Eigen::VectorXd& t, const std::string& stream) {
  if (!t.allFinite()) fail(ErrorKind::kInvalidInput, stream + " timestamps must be finite");
  for (Eigen::Index i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) {
      fail(ErrorKind::kInvalidInput, stream + " timestamps are not strictly increasing at index " + std::to_string(i));
    }
  }
}

void check_rows(Eigen::Index rows, const Eigen::VectorXd& t, const std::string& stream) {
  if (rows != t.size()) {
    fail(ErrorKind::kInvalidInput, stream + " has " + std::to_string(rows) + " rows but " +
                                       std::to_string(t.size()) + " timestamps");
  }
}

void check_pose(const PoseStream& p, const std::string& stream) {
  if (p.angles_deg.cols() != kNumDofs && !(p.empty() && p.angles_deg.cols() == 0)) {
    fail(ErrorKind::kInvalidInput, stream + " must have 22 angle columns");
  }
  check_rows(p.frames(), p.timestamps_ms, stream);
  check_increasing(p.timestamps_ms, stream);
}

Eigen::MatrixXd pose_matrix(const Container& c, const std::string& name) {
  Eigen::MatrixXd m = c.at(name).to_matrix();
  if (m.rows() == 0) m.resize(0, kNumDofs);
  return m;
}

std::uint32_t parse_participant(const std::string& text) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(text, &used);
    if (used != text.size() || v > 0xffffffffUL) throw std::out_of_range("participant id");
    return static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
    fail(ErrorKind::kMalformedHeader, "participant id '" + text + "' is not an unsigned 32-bit integer");
  }
}

}  // namespace

std::string to_string(GestureFamily family) {
  switch (family) {
    case GestureFamily::kSingleHand: return "single-hand";
    case GestureFamily::kSymmetricBimanual: return "symmetric-bimanual";
    case GestureFamily::kAsymmetricBimanual: return "asymmetric-bimanual";
  }
  return "?";
}

const std::vector<std::string>& gesture_vocabulary() {
  static const std::vector<std::string> labels = {
      // single-hand
      "ASL1", "ASL2", "ASL3", "ASL4", "ASL5", "ASL6", "ASL7", "ASL8", "ASL9", "Claw3", "Claw5", "FreeAction", "ILY",
      "IndexBow", "IndexMiddleClaw", "JoystickCircle", "JoystickSlide", "MiddleBow", "Nine", "PalmYaw",
      "PinchMiddle", "PinkyBow", "Rest", "RingAndThumb", "RingBow", "Rock", "Thumb", "nocontact_disperse_palm",
      "nocontact_free", "nocontact_grab",
      // symmetric bimanual
      "Clap", "CrossHand", "CrossStretch", "FingerTipTouch", "FistBump", "Gaming", "HandClasp", "HandRub",
      "IndexTapping", "Kiss", "PalmStack", "Prayer", "MiddleOppo", "SymOpen", "SymSwing", "ThumbWrestle", "Typing",
      "raw",
      // asymmetric bimanual
      "FingerPullLeft", "FingerPullRight", "PalmRoll", "PinkyHook", "Squeeze", "Beijing", "Checky", "PairClaw",
      "PairOK", "Picture", "PinchWring", "ThumbOppo"};
  return labels;
}

bool is_known_gesture(const std::string& label) {
  const auto& v = gesture_vocabulary();
  return std::find(v.begin(), v.end(), label) != v.end();
}

GestureFamily gesture_family(const std::string& label) {
  const auto& v = gesture_vocabulary();
  const auto it = std::find(v.begin(), v.end(), label);
  if (it == v.end()) fail(ErrorKind::kInvalidInput, "unknown gesture label '" + label + "'");
  const auto index = it - v.begin();
  if (index < 30) return GestureFamily::kSingleHand;
  if (index < 48) return GestureFamily::kSymmetricBimanual;
  return GestureFamily::kAsymmetricBimanual;
}

EmgWindow EmgStream::window(Eigen::Index offset, Eigen::Index length) const {
  if (offset < 0 || length < 0 || offset + length > samples.rows()) {
    fail(ErrorKind::kOutOfRange, "EMG window [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                                     ") exceeds the stream length " + std::to_string(samples.rows()));
  }
  return {samples.middleRows(offset, length), sample_rate, kind};
}

JointAngles22 PoseStream::frame(Eigen::Index i, Handedness hand) const {
  if (i < 0 || i >= frames()) fail(ErrorKind::kOutOfRange, "pose frame index out of range");
  JointAngles22 a;
  a.hand = hand;
  for (int j = 0; j < kNumDofs; ++j) a[j] = angles_deg(i, j);
  return a;
}

void Episode::validate() const {
  if (!is_known_gesture(gesture_label)) fail(ErrorKind::kInvalidInput, "unknown gesture label '" + gesture_label + "'");
  if (emg.samples.cols() != kEmgChannels) fail(ErrorKind::kInvalidInput, "EMG stream must have 16 channels");
  if (!(emg.sample_rate > 0.0)) fail(ErrorKind::kInvalidInput, "EMG sample rate must be positive");
  check_rows(emg.length(), emg.timestamps_ms, "EMG stream");
  check_increasing(emg.timestamps_ms, "EMG stream");
  check_pose(pose_right, "right pose stream");
  check_pose(pose_left, "left pose stream");
  if (markers) {
    if (markers->positions_mm.cols() % 3 != 0) fail(ErrorKind::kInvalidInput, "marker stream needs 3 columns per marker");
    check_rows(markers->frames(), markers->timestamps_ms, "marker stream");
    check_increasing(markers->timestamps_ms, "marker stream");
  }
  if (calibration) calibration->validate();
}

Container episode_to_container(const Episode& e) {
  e.validate();
  Container c;
  c.attributes["participant_id"] = std::to_string(e.participant_id);
  c.attributes["gesture_label"] = e.gesture_label;
  c.attributes["emg.kind"] = e.emg.kind == SignalKind::kRaw ? "raw" : "filtered";
  c.blocks.push_back(Block::f64_vector("emg.timestamps", e.emg.timestamps_ms));
  c.blocks.push_back(Block::f64_matrix("emg.samples", e.emg.samples));
  c.blocks.push_back(Block::f64("emg.sample_rate", {1}, {e.emg.sample_rate}));
  for (const auto& [side, pose] : {std::pair{"right", &e.pose_right}, std::pair{"left", &e.pose_left}}) {
    const std::string base = std::string("pose.") + side;
    c.blocks.push_back(Block::f64_vector(base + ".timestamps", pose->timestamps_ms));
    Block angles = Block::f64_matrix(base + ".angles", pose->angles_deg);
    angles.shape = {pose->frames(), kNumDofs};
    c.blocks.push_back(std::move(angles));
  }
  if (e.markers) {
    c.blocks.push_back(Block::f64_vector("markers.timestamps", e.markers->timestamps_ms));
    Block pos = Block::f64_matrix("markers.positions", e.markers->positions_mm);
    pos.shape = {e.markers->frames(), e.markers->markers(), 3};
    c.blocks.push_back(std::move(pos));
  }
  if (e.calibration) {
    const PinholeCamera& cam = *e.calibration;
    c.attributes["calibration.resolution"] = std::to_string(cam.width) + " " + std::to_string(cam.height);
    c.blocks.push_back(Block::f64("calibration.intrinsics", {4}, {cam.fx, cam.fy, cam.cx, cam.cy}));
    c.blocks.push_back(Block::f64_matrix("calibration.rotation", cam.rotation));
    c.blocks.push_back(Block::f64_vector("calibration.translation", cam.translation));
  }
  for (const auto& [name, bytes] : e.opaque) c.blocks.push_back(Block::raw(kOpaquePrefix + name, bytes));
  return c;
}

Episode episode_from_container(const Container& c, std::vector<std::string>* warnings) {
  Episode e;
  e.participant_id = parse_participant(c.attribute("participant_id"));
  e.gesture_label = c.attribute("gesture_label");
  const std::string& kind = c.attribute("emg.kind");
  if (kind != "raw" && kind != "filtered") fail(ErrorKind::kMalformedHeader, "unknown EMG kind '" + kind + "'");
  e.emg.kind = kind == "raw" ? SignalKind::kRaw : SignalKind::kFiltered;
  e.emg.timestamps_ms = c.at("emg.timestamps").to_vector();
  e.emg.samples = c.at("emg.samples").to_matrix();
  const Eigen::VectorXd rate = c.at("emg.sample_rate").to_vector();
  if (rate.size() != 1) fail(ErrorKind::kMalformedHeader, "emg.sample_rate must hold one value");
  e.emg.sample_rate = rate[0];
  e.pose_right = {c.at("pose.right.timestamps").to_vector(), pose_matrix(c, "pose.right.angles")};
  e.pose_left = {c.at("pose.left.timestamps").to_vector(), pose_matrix(c, "pose.left.angles")};
  if (c.find("markers.positions")) {
    const Block& pos = c.at("markers.positions");
    MarkerStream m{c.at("markers.timestamps").to_vector(), pos.to_matrix()};
    if (m.positions_mm.rows() == 0 && pos.shape.size() == 3) m.positions_mm.resize(0, pos.shape[1] * 3);
    e.markers = std::move(m);
  }
  if (c.find("calibration.intrinsics")) {
    PinholeCamera cam;
    const auto k = c.at("calibration.intrinsics").to_f64();
    if (k.size() != 4) fail(ErrorKind::kMalformedHeader, "calibration.intrinsics must hold 4 values");
    cam.fx = k[0];
    cam.fy = k[1];
    cam.cx = k[2];
    cam.cy = k[3];
    const Eigen::MatrixXd r = c.at("calibration.rotation").to_matrix();
    const Eigen::VectorXd t = c.at("calibration.translation").to_vector();
    if (r.rows() != 3 || r.cols() != 3 || t.size() != 3) fail(ErrorKind::kMalformedHeader, "bad calibration shape");
    cam.rotation = r;
    cam.translation = t;
    std::istringstream res(c.attribute("calibration.resolution"));
    if (!(res >> cam.width >> cam.height)) fail(ErrorKind::kMalformedHeader, "bad calibration resolution");
    e.calibration = cam;
  }
  for (const auto& b : c.blocks) {
    if (b.name.rfind(kOpaquePrefix, 0) == 0) {
      e.opaque[b.name.substr(std::string(kOpaquePrefix).size())] = b.bytes;
    } else if (!known_blocks().contains(b.name) && warnings) {
      warnings->push_back("skipped unknown block '" + b.name + "'");
    }
  }
  try {
    e.validate();
  } catch (const Error& err) {
    fail(ErrorKind::kMalformedHeader, std::string("episode content: ") + err.what());
  }
  return e;
}

void write_episode(const Episode& episode, const std::filesystem::path& path) {
  save_container(path, episode_to_container(episode));
}

Episode read_episode(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  return episode_from_container(load_container(path, warnings), warnings);
}

}  // namespace egoemg
