#include <fstream>
#include <sstream>

#include <json.hpp>

#include "egoemg/error.hpp"
#include "egoemg/hand_model.hpp"

namespace egoemg {
namespace {

using nlohmann::json;

constexpr const char* kFormatName = "egoemg.skeleton";
constexpr int kFormatVersion = 1;

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    fail(ErrorKind::kMalformedHeader, std::string("skeleton: '") + what + "' must be a 3-vector");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

struct FingerSpec {
  const char* name;
  Vec3 mcp;
  double proximal, middle, distal;
  int first_dof;  // AA slot; FE slots follow.
};

}  // namespace

HandSkeleton HandSkeleton::default_right() {
  // Right hand, wrist frame: +x distal along the middle metacarpal, +y radial
  // (thumb side), +z dorsal. Finger flexion rotates about +y, abduction and
  // radial deviation about +z, wrist extension about -y.
  std::vector<Bone> bones;
  bones.push_back({"wrist.fe", -1, Vec3::Zero(), -Vec3::UnitY(), dof::kWristFe});
  bones.push_back({"wrist.ru", 0, Vec3::Zero(), Vec3::UnitZ(), dof::kWristRu});
  const int palm = 1;

  // Thumb: a planar flexion chain along the metacarpal direction, swung out
  // of the palm plane by the CMC abduction axis.
  const Vec3 thumb_dir(0.6, 0.8, 0.0);
  const Vec3 thumb_fe_axis(0.0, 0.0, -1.0);
  const Vec3 thumb_aa_axis(0.8, -0.6, 0.0);
  bones.push_back({"thumb.cmc.aa", palm, Vec3(22.0, 18.0, -8.0), thumb_aa_axis, dof::kThumbCmcAa});
  bones.push_back({"thumb.cmc.fe", 2, Vec3::Zero(), thumb_fe_axis, dof::kThumbCmcFe});
  bones.push_back({"thumb.mcp.fe", 3, 44.0 * thumb_dir, thumb_fe_axis, dof::kThumbMcpFe});
  bones.push_back({"thumb.ip.fe", 4, 31.0 * thumb_dir, thumb_fe_axis, dof::kThumbIpFe});
  bones.push_back({"thumb.tip", 5, 26.0 * thumb_dir, Vec3::UnitZ(), -1});

  std::array<LandmarkDef, kNumLandmarks> landmarks;
  landmarks[0] = {3, Vec3::Zero()};
  landmarks[1] = {4, Vec3::Zero()};
  landmarks[2] = {5, Vec3::Zero()};
  landmarks[3] = {6, Vec3::Zero()};

  const std::array<FingerSpec, 4> fingers{{
      {"index", Vec3(88.0, 22.0, 0.0), 39.0, 23.0, 19.0, dof::kIndexMcpAa},
      {"middle", Vec3(90.0, 2.0, 0.0), 44.0, 27.0, 21.0, dof::kMiddleMcpAa},
      {"ring", Vec3(85.0, -16.0, 0.0), 41.0, 26.0, 20.0, dof::kRingMcpAa},
      {"pinky", Vec3(78.0, -32.0, 0.0), 32.0, 19.0, 17.0, dof::kPinkyMcpAa},
  }};
  for (std::size_t f = 0; f < fingers.size(); ++f) {
    const FingerSpec& spec = fingers[f];
    const std::string n = spec.name;
    const int aa = static_cast<int>(bones.size());
    bones.push_back({n + ".mcp.aa", palm, spec.mcp, Vec3::UnitZ(), spec.first_dof});
    bones.push_back({n + ".mcp.fe", aa, Vec3::Zero(), Vec3::UnitY(), spec.first_dof + 1});
    bones.push_back({n + ".pip.fe", aa + 1, Vec3(spec.proximal, 0, 0), Vec3::UnitY(), spec.first_dof + 2});
    bones.push_back({n + ".dip.fe", aa + 2, Vec3(spec.middle, 0, 0), Vec3::UnitY(), spec.first_dof + 3});
    bones.push_back({n + ".tip", aa + 3, Vec3(spec.distal, 0, 0), Vec3::UnitZ(), -1});
    const std::size_t base = 4 * (f + 1);
    for (int k = 0; k < 4; ++k) landmarks[base + static_cast<std::size_t>(k)] = {aa + 1 + k, Vec3::Zero()};
  }

  std::array<JointLimit, kNumDofs> limits{};
  limits[dof::kThumbCmcFe] = {-20.0, 50.0};
  limits[dof::kThumbCmcAa] = {-30.0, 40.0};
  limits[dof::kThumbMcpFe] = {-15.0, 60.0};
  limits[dof::kThumbIpFe] = {-15.0, 80.0};
  for (int f = 0; f < 4; ++f) {
    const int base = 4 + 4 * f;
    limits[static_cast<std::size_t>(base)] = f == 3 ? JointLimit{-25.0, 25.0} : JointLimit{-20.0, 20.0};
    limits[static_cast<std::size_t>(base + 1)] = {-20.0, 90.0};
    limits[static_cast<std::size_t>(base + 2)] = {0.0, 100.0};
    limits[static_cast<std::size_t>(base + 3)] = {-5.0, 80.0};
  }
  limits[dof::kWristFe] = {-70.0, 70.0};
  limits[dof::kWristRu] = {-30.0, 25.0};

  return HandSkeleton(std::move(bones), limits, landmarks, {3, 7, 11, 15, 19});
}

std::string HandSkeleton::to_text() const {
  json doc;
  doc["format"] = kFormatName;
  doc["version"] = kFormatVersion;
  doc["handedness"] = "right";
  json bones = json::array();
  for (const Bone& b : bones_) {
    json jb;
    jb["name"] = b.name;
    jb["parent"] = b.parent;
    jb["offset"] = vec_to_json(b.offset);
    jb["dof"] = b.dof;
    if (b.dof >= 0) jb["axis"] = vec_to_json(b.axis);
    bones.push_back(jb);
  }
  doc["bones"] = bones;
  json limits = json::array();
  for (int d = 0; d < kNumDofs; ++d) {
    const JointLimit& lim = limits_[static_cast<std::size_t>(d)];
    limits.push_back({{"dof", d}, {"name", dof::name(d)}, {"min", lim.min_deg}, {"max", lim.max_deg}});
  }
  doc["limits"] = limits;
  json lms = json::array();
  for (const LandmarkDef& lm : landmarks_) lms.push_back({{"bone", lm.bone}, {"offset", vec_to_json(lm.offset)}});
  doc["landmark_map"] = lms;
  doc["fingertips"] = fingertips_;
  return doc.dump(2) + "\n";
}

HandSkeleton HandSkeleton::from_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kMalformedHeader, std::string("skeleton: ") + e.what());
  }
  try {
    if (doc.value("format", "") != kFormatName) fail(ErrorKind::kMalformedHeader, "skeleton: wrong format tag");
    if (doc.value("version", 0) != kFormatVersion) {
      fail(ErrorKind::kMalformedHeader, "skeleton: unsupported version " + doc["version"].dump());
    }
    std::vector<Bone> bones;
    for (const json& jb : doc.at("bones")) {
      Bone b;
      b.name = jb.at("name").get<std::string>();
      b.parent = jb.at("parent").get<int>();
      b.offset = vec_from_json(jb.at("offset"), "offset");
      b.dof = jb.value("dof", -1);
      if (jb.contains("axis")) b.axis = vec_from_json(jb.at("axis"), "axis");
      bones.push_back(std::move(b));
    }
    std::array<JointLimit, kNumDofs> limits{};
    const json& jl = doc.at("limits");
    if (jl.size() != kNumDofs) fail(ErrorKind::kMalformedHeader, "skeleton: need 22 limits");
    for (const json& l : jl) {
      const int d = l.at("dof").get<int>();
      if (d < 0 || d >= kNumDofs) fail(ErrorKind::kMalformedHeader, "skeleton: limit dof out of range");
      limits[static_cast<std::size_t>(d)] = {l.at("min").get<double>(), l.at("max").get<double>()};
    }
    std::array<LandmarkDef, kNumLandmarks> landmarks;
    const json& jm = doc.at("landmark_map");
    if (jm.size() != kNumLandmarks) fail(ErrorKind::kMalformedHeader, "skeleton: need 20 landmarks");
    for (std::size_t i = 0; i < jm.size(); ++i) {
      landmarks[i] = {jm[i].at("bone").get<int>(), vec_from_json(jm[i].at("offset"), "landmark offset")};
    }
    const auto tips = doc.at("fingertips").get<std::vector<int>>();
    if (tips.size() != kNumFingertips) fail(ErrorKind::kMalformedHeader, "skeleton: need 5 fingertips");
    std::array<int, kNumFingertips> fingertips{};
    std::copy(tips.begin(), tips.end(), fingertips.begin());
    return HandSkeleton(std::move(bones), limits, landmarks, fingertips);
  } catch (const json::exception& e) {
    fail(ErrorKind::kMalformedHeader, std::string("skeleton: ") + e.what());
  }
}

HandSkeleton HandSkeleton::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open skeleton file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str());
}

}  // namespace egoemg
