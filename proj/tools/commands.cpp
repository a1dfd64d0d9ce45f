#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include "egoemg/augment.hpp"
#include "egoemg/container.hpp"
#include "egoemg/episode.hpp"
#include "egoemg/error.hpp"
#include "egoemg/evalkit.hpp"
#include "egoemg/featurizer.hpp"
#include "egoemg/graph_features.hpp"
#include "egoemg/heads.hpp"
#include "egoemg/ik_solver.hpp"
#include "egoemg/occlusion.hpp"
#include "egoemg/rng.hpp"
#include "egoemg/splits.hpp"
#include "egoemg/tensor.hpp"
#include "egoemg/timeline.hpp"
#include "egoemg/transformer.hpp"
#include "egoemg/wrist_geometry.hpp"

namespace egoemg::cli {

namespace {

constexpr std::uint32_t kRandomPoseStream = 500;
constexpr double kRandomPoseMargin = 0.05;  // fraction of each range kept clear of the limits
constexpr int kWristSourceMarkers = 5;      // armband a, b, c, wrist, middle MCP

const std::string& require_output(const GlobalOptions& g) {
  if (g.output.empty()) throw CLI::RequiredError("--out");
  return g.output;
}

void save_with_config(Container c, const GlobalOptions& g) {
  c.attributes["cli.config"] = g.resolved_config;
  save_container(require_output(g), c);
}

void save_episode(const Episode& e, const GlobalOptions& g) { save_with_config(episode_to_container(e), g); }

Episode load_episode(const std::string& path, bool verbose) {
  std::vector<std::string> warnings;
  Episode e = read_episode(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  (void)verbose;
  return e;
}

Handedness parse_hand(const std::string& s) {
  if (s == "right") return Handedness::kRight;
  if (s == "left") return Handedness::kLeft;
  throw CLI::ValidationError("--hand", "expected 'right' or 'left', got '" + s + "'");
}

std::string shape_text(const std::vector<std::int64_t>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? " x " : "") + std::to_string(shape[i]);
  return s.empty() ? "scalar" : s;
}

EmgWindow whole_stream(const Episode& e) { return e.emg.window(0, e.emg.length()); }

/// [F x 3K] rows <-> K points.
template <std::size_t K>
std::array<Vec3, K> row_points(const Eigen::MatrixXd& m, Eigen::Index row) {
  std::array<Vec3, K> p;
  for (std::size_t k = 0; k < K; ++k) p[k] = m.row(row).segment<3>(static_cast<Eigen::Index>(3 * k)).transpose();
  return p;
}

/// Flattens [W] matrices of equal shape [r x c] into a [W, r, c] block.
Block stack_block(const std::string& name, const std::vector<Eigen::MatrixXd>& mats) {
  const std::int64_t rows = mats.empty() ? 0 : mats.front().rows();
  const std::int64_t cols = mats.empty() ? 0 : mats.front().cols();
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(rows * cols) * mats.size());
  for (const auto& m : mats) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
    }
  }
  return Block::f64(name, {static_cast<std::int64_t>(mats.size()), rows, cols}, values);
}

std::vector<Eigen::MatrixXd> unstack_block(const Block& b) {
  if (b.shape.size() != 3) fail(ErrorKind::kMalformedHeader, "block '" + b.name + "' must be three-dimensional");
  const auto v = b.to_f64();
  std::vector<Eigen::MatrixXd> out;
  const auto rows = b.shape[1];
  const auto cols = b.shape[2];
  for (std::int64_t w = 0; w < b.shape[0]; ++w) {
    out.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        v.data() + w * rows * cols, rows, cols));
  }
  return out;
}

// ---- synth -------------------------------------------------------------

Command synth_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("synth", "Generate a synthetic episode");
  auto opts = std::make_shared<std::tuple<double, std::string, std::uint32_t>>(8.0, "Rest", 0);
  sub->add_option("--duration", std::get<0>(*opts), "Length in seconds (>= 4)")->capture_default_str();
  sub->add_option("--gesture", std::get<1>(*opts), "Gesture label from the vocabulary")->capture_default_str();
  sub->add_option("--participant", std::get<2>(*opts), "Participant id")->capture_default_str();
  return {sub, [opts, &g] {
            const auto& [duration, gesture, participant] = *opts;
            const Episode e = synth_episode(g.seed, duration, gesture, participant);
            save_episode(e, g);
            std::cout << "wrote " << g.output << ": " << e.emg.length() << " EMG samples, " << e.pose_right.frames()
                      << " pose frames per hand\n";
          }};
}

// ---- info --------------------------------------------------------------

Command info_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("info", "Describe an EGL1 container or EGW1 weight archive");
  auto path = std::make_shared<std::string>();
  sub->add_option("file", *path, "Input file")->required()->check(CLI::ExistingFile);
  return {sub, [path, &g] {
            std::ifstream probe(*path, std::ios::binary);
            char magic[4] = {};
            probe.read(magic, 4);
            if (std::string(magic, 4) == "EGW1") {
              const WeightArchive archive = load_weight_archive(*path);
              std::cout << "format: EGW1\ntensors: " << archive.size() << "\n";
              for (const auto& [name, t] : archive) std::cout << "  " << name << ": " << shape_text(t.shape) << "\n";
              return;
            }
            std::vector<std::string> warnings;
            const Container c = load_container(*path, &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
            std::cout << "format: EGL1\n";
            for (const auto& [key, value] : c.attributes) {
              if (key == "cli.config" && !g.verbose) continue;
              std::cout << "attribute " << key << ": " << value << "\n";
            }
            for (const auto& b : c.blocks) {
              std::cout << "block " << b.name << ": " << to_string(b.dtype) << " [" << shape_text(b.shape) << "]\n";
            }
            if (c.find("emg.samples")) {
              const Episode e = episode_from_container(c);
              std::cout << "participant: " << e.participant_id << "\n"
                        << "gesture: " << e.gesture_label << " (" << to_string(gesture_family(e.gesture_label))
                        << ")\n"
                        << "emg samples: " << e.emg.length() << "\n"
                        << "emg channels: " << e.emg.samples.cols() << "\n"
                        << "emg rate hz: " << e.emg.sample_rate << "\n"
                        << "emg duration s: " << static_cast<double>(e.emg.length()) / e.emg.sample_rate << "\n"
                        << "pose frames right: " << e.pose_right.frames() << "\n"
                        << "pose frames left: " << e.pose_left.frames() << "\n";
              if (e.markers) std::cout << "marker frames: " << e.markers->frames() << "\n";
            }
          }};
}

// ---- filter ------------------------------------------------------------

Command filter_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("filter", "Remove mains interference and out-of-band energy from EMG");
  auto opts = std::make_shared<std::pair<std::string, std::string>>();
  sub->add_option("episode", opts->first, "Input episode")->required()->check(CLI::ExistingFile);
  sub->add_option("--response", opts->second, "Also write the mask as CSV (frequency_hz,gain)");
  return {sub, [opts, &g] {
            Episode e = load_episode(opts->first, g.verbose);
            const EmgWindow out = filter_emg(whole_stream(e));
            e.emg.samples = out.samples;
            e.emg.kind = SignalKind::kFiltered;
            save_episode(e, g);
            const int n_fft = filter_fft_length(e.emg.length());
            if (!opts->second.empty()) {
              std::ofstream csv(opts->second);
              if (!csv) fail(ErrorKind::kIo, "cannot create " + opts->second);
              write_mask_csv(csv, *cached_filter_mask(n_fft, e.emg.sample_rate));
            }
            std::cout << "filtered " << e.emg.length() << " samples x " << e.emg.samples.cols()
                      << " channels (transform length " << n_fft << ")\n";
          }};
}

// ---- augment-emg -------------------------------------------------------

Command augment_emg_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("augment-emg", "Apply seeded EMG augmentation to an episode");
  struct Opts {
    std::string input;
    std::uint64_t sample_id = 0;
    EmgAugConfig config;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("episode", o->input, "Input episode")->required()->check(CLI::ExistingFile);
  sub->add_option("--sample-id", o->sample_id, "Sample id keying the random streams")->capture_default_str();
  sub->add_option("--dropout-p", o->config.channel_dropout_p)->capture_default_str();
  sub->add_option("--freq-masks", o->config.n_freq_masks)->capture_default_str();
  sub->add_option("--max-mask-bins", o->config.max_mask_bins)->capture_default_str();
  sub->add_option("--noise-p", o->config.noise_p)->capture_default_str();
  sub->add_option("--jitter-ms", o->config.jitter_ms)->capture_default_str();
  return {sub, [o, &g] {
            Episode e = load_episode(o->input, g.verbose);
            EmgAugTrace trace;
            const EmgWindow out = augment_emg(whole_stream(e), g.seed, o->config, o->sample_id, &trace);
            e.emg.samples = out.samples;
            save_episode(e, g);
            std::cout << "dropped channels: " << trace.dropped_channels.size() << "\n"
                      << "frequency masks: " << trace.masks.size() << "\n"
                      << "noise: " << (trace.noise_applied ? std::to_string(trace.snr_db) + " dB" : "none") << "\n"
                      << "shift samples: " << trace.shift_samples << "\n";
          }};
}

// ---- augment-markers ---------------------------------------------------

Command augment_markers_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("augment-markers", "Apply seeded marker augmentation to every marker frame");
  struct Opts {
    std::string input;
    double hand_scale_mm = 0.0;
    std::uint64_t sample_id = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("episode", o->input, "Episode with a 21-marker stream")->required()->check(CLI::ExistingFile);
  sub->add_option("--hand-scale", o->hand_scale_mm,
                  "Hand scale in mm (default: per-frame wrist to middle-MCP distance)");
  sub->add_option("--sample-id", o->sample_id, "Sample id of frame 0; frame f uses sample id + f")
      ->capture_default_str();
  return {sub, [o, &g] {
            Episode e = load_episode(o->input, g.verbose);
            if (!e.markers || e.markers->markers() != kNumMarkers) {
              fail(ErrorKind::kInvalidInput, "episode needs a marker stream of 21 markers");
            }
            const SkeletonGraph graph = SkeletonGraph::default_hand();
            int bypassed = 0;
            std::map<MarkerOp, int> counts;
            for (Eigen::Index f = 0; f < e.markers->frames(); ++f) {
              const MarkerSet m = row_points<kNumMarkers>(e.markers->positions_mm, f);
              const double scale = o->hand_scale_mm > 0.0 ? o->hand_scale_mm : (m[9] - m[0]).norm();
              const auto r =
                  augment_markers(m, graph, scale, g.seed, {}, o->sample_id + static_cast<std::uint64_t>(f));
              bypassed += r.bypassed ? 1 : 0;
              for (const auto& op : r.applied) ++counts[op.op];
              for (int k = 0; k < kNumMarkers; ++k) {
                e.markers->positions_mm.row(f).segment<3>(3 * k) = r.markers[static_cast<std::size_t>(k)].transpose();
              }
            }
            save_episode(e, g);
            std::cout << "frames: " << e.markers->frames() << "\nbypassed: " << bypassed << "\n";
            for (const auto& [op, n] : counts) std::cout << "applied " << to_string(op) << ": " << n << "\n";
          }};
}

// ---- fk / ik -----------------------------------------------------------

Eigen::MatrixXd random_poses(std::uint64_t seed, int count, const HandSkeleton& skeleton) {
  Eigen::MatrixXd a(count, kNumDofs);
  for (int i = 0; i < count; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i), kRandomPoseStream);
    for (int j = 0; j < kNumDofs; ++j) {
      const JointLimit& lim = skeleton.limit(j);
      const double m = kRandomPoseMargin * lim.span();
      a(i, j) = rng.uniform(lim.min_deg + m, lim.max_deg - m);
    }
  }
  return a;
}

Eigen::MatrixXd load_angles(const std::string& path, Handedness hand) {
  const Container c = load_container(path);
  if (const Block* b = c.find("angles")) return b->to_matrix();
  return c.at(hand == Handedness::kRight ? "pose.right.angles" : "pose.left.angles").to_matrix();
}

Command fk_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("fk", "Forward kinematics: joint angles to 20 landmarks");
  struct Opts {
    std::string angles;
    int random = 0;
    std::string hand = "right";
    std::string skeleton;
  };
  auto o = std::make_shared<Opts>();
  auto* src = sub->add_option("--angles", o->angles, "Container with an 'angles' block or an episode")
                  ->check(CLI::ExistingFile);
  sub->add_option("--random", o->random, "Draw this many seeded poses inside the limits")->excludes(src);
  sub->add_option("--hand", o->hand, "right or left")->capture_default_str();
  sub->add_option("--skeleton", o->skeleton, "Skeleton file (default: built-in)")->check(CLI::ExistingFile);
  return {sub, [o, &g] {
            const Handedness hand = parse_hand(o->hand);
            const HandSkeleton sk = o->skeleton.empty() ? HandSkeleton::default_right() : HandSkeleton::load(o->skeleton);
            Eigen::MatrixXd angles;
            if (o->random > 0) {
              angles = random_poses(g.seed, o->random, sk);
            } else if (!o->angles.empty()) {
              angles = load_angles(o->angles, hand);
            } else {
              throw CLI::RequiredError("--angles or --random");
            }
            if (angles.cols() != kNumDofs) fail(ErrorKind::kShapeMismatch, "angles must have 22 columns");
            Eigen::MatrixXd landmarks(angles.rows(), 3 * kNumLandmarks);
            for (Eigen::Index f = 0; f < angles.rows(); ++f) {
              JointAngles22 a;
              a.hand = hand;
              for (int j = 0; j < kNumDofs; ++j) a[j] = angles(f, j);
              const LandmarkSet l = forward_kinematics(sk, a);
              for (int k = 0; k < kNumLandmarks; ++k) {
                landmarks.row(f).segment<3>(3 * k) = l.points[static_cast<std::size_t>(k)].transpose();
              }
            }
            Container c;
            c.attributes["hand"] = o->hand;
            c.blocks.push_back(Block::f64_matrix("angles", angles));
            Block lm = Block::f64_matrix("landmarks", landmarks);
            lm.shape = {angles.rows(), kNumLandmarks, 3};
            c.blocks.push_back(std::move(lm));
            save_with_config(std::move(c), g);
            std::cout << "frames: " << angles.rows() << "\n";
          }};
}

Command ik_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("ik", "Fit joint angles to landmark frames");
  struct Opts {
    std::string landmarks;
    bool sequence = false;
    unsigned threads = 0;
    std::string skeleton;
    IkConfig config;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--landmarks", o->landmarks, "Container with a [F, 20, 3] 'landmarks' block")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_flag("--sequence", o->sequence, "Warm-start each frame from the previous one");
  sub->add_option("--threads", o->threads, "Worker threads (0 = all cores)")->capture_default_str();
  sub->add_option("--outer-steps", o->config.outer_steps)->capture_default_str();
  sub->add_option("--skeleton", o->skeleton, "Skeleton file (default: built-in)")->check(CLI::ExistingFile);
  return {sub, [o, &g] {
            const HandSkeleton sk = o->skeleton.empty() ? HandSkeleton::default_right() : HandSkeleton::load(o->skeleton);
            const Container in = load_container(o->landmarks);
            const Eigen::MatrixXd lm = in.at("landmarks").to_matrix();
            if (lm.cols() != 3 * kNumLandmarks) fail(ErrorKind::kShapeMismatch, "landmarks must be [F, 20, 3]");
            std::vector<std::vector<LandmarkSet>> seqs;
            for (Eigen::Index f = 0; f < lm.rows(); ++f) {
              LandmarkSet s;
              s.points = row_points<kNumLandmarks>(lm, f);
              if (o->sequence && !seqs.empty()) {
                seqs.back().push_back(s);
              } else {
                seqs.push_back({s});
              }
            }
            const auto results = fit_batch(seqs, sk, o->config, o->threads);
            Eigen::MatrixXd angles(lm.rows(), kNumDofs);
            Eigen::VectorXd rms(lm.rows());
            Eigen::Index f = 0;
            for (const auto& seq : results) {
              for (const auto& r : seq) {
                for (int j = 0; j < kNumDofs; ++j) angles(f, j) = r.angles[j];
                rms[f] = std::sqrt(r.residual_mse);
                ++f;
              }
            }
            Container c;
            c.attributes["hand"] = "right";
            c.blocks.push_back(Block::f64_matrix("angles", angles));
            c.blocks.push_back(Block::f64_vector("residual_rms_mm", rms));
            save_with_config(std::move(c), g);
            std::cout << std::setprecision(6) << "frames: " << lm.rows() << "\n"
                      << "rms_mm: " << std::sqrt(rms.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, rms.size())))
                      << "\n"
                      << "max_rms_mm: " << (rms.size() ? rms.maxCoeff() : 0.0) << "\n";
            if (const Block* truth = in.find("angles")) {
              std::cout << "angle_mae_deg: " << mae(angles, truth->to_matrix()) << "\n";
            }
          }};
}

// ---- wrist -------------------------------------------------------------

Command wrist_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("wrist", "Wrist flexion and deviation from armband and hand markers");
  auto o = std::make_shared<std::pair<std::string, std::string>>("", "right");
  sub->add_option("markers", o->first,
                  "Episode or container whose markers are armband a, b, c, wrist, middle MCP per frame")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--hand", o->second, "right or left")->capture_default_str();
  return {sub, [o, &g] {
            const Handedness hand = parse_hand(o->second);
            const Container c = load_container(o->first);
            const Block& b = c.find("markers") ? c.at("markers") : c.at("markers.positions");
            const Eigen::MatrixXd m = b.to_matrix();
            if (m.cols() != 3 * kWristSourceMarkers) fail(ErrorKind::kShapeMismatch, "wrist needs 5 markers per frame");
            std::ostringstream out;
            out << std::setprecision(10) << "frame,flexion_deg,deviation_deg,deviation_degenerate\n";
            for (Eigen::Index f = 0; f < m.rows(); ++f) {
              const auto p = row_points<kWristSourceMarkers>(m, f);
              const ForearmFrame frame = forearm_frame(p[0], p[1], p[2], hand);
              const WristAngles w = wrist_angles(frame, p[3], p[4]);
              out << f << ',' << w.flexion_deg << ',' << w.deviation_deg << ',' << (w.deviation_degenerate ? 1 : 0)
                  << '\n';
            }
            if (g.output.empty()) {
              std::cout << out.str();
            } else {
              std::ofstream file(g.output);
              if (!(file << out.str())) fail(ErrorKind::kIo, "cannot write " + g.output);
            }
          }};
}

// ---- occlude -----------------------------------------------------------

Command occlude_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("occlude", "Self-occlusion score of a mesh seen by a camera");
  struct Opts {
    std::string mesh, camera, depth;
    double epsilon = 5.0;
    int window = 5;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--mesh", o->mesh, "Mesh text file (v / f records)")->required()->check(CLI::ExistingFile);
  sub->add_option("--camera", o->camera, "Camera text file (K, R, t, resolution)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--epsilon", o->epsilon, "Depth tolerance in mm")->capture_default_str();
  sub->add_option("--window", o->window, "Depth lookup window in pixels")->capture_default_str();
  sub->add_option("--depth", o->depth, "Also write the depth buffer as float32");
  return {sub, [o, &g] {
            std::ifstream mf(o->mesh);
            std::ifstream cf(o->camera);
            const TriangleMesh mesh = read_mesh_text(mf);
            const PinholeCamera cam = read_camera_text(cf);
            const OcclusionReport r = self_occlusion_score(mesh, cam, o->epsilon, o->window);
            const auto visible = std::count(r.visible.begin(), r.visible.end(), true);
            std::cout << std::setprecision(10) << "s_occ: " << r.s_occ << "\n"
                      << "visible_vertices: " << visible << "/" << r.visible.size() << "\n";
            if (!o->depth.empty()) {
              const DepthBuffer buf = rasterize_depth(transform_to_camera(mesh, cam), cam);
              std::ofstream df(o->depth, std::ios::binary);
              write_depth_raw(df, buf);
              if (!df) fail(ErrorKind::kIo, "cannot write " + o->depth);
            }
            (void)g;
          }};
}

// ---- graph-pe ----------------------------------------------------------

Command graph_pe_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("graph-pe", "Laplacian eigenvectors and hop distances of the hand marker graph");
  struct Opts {
    int k = 8;
    bool normalized = false;
    bool distances = false;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--k", o->k, "Number of eigenvectors")->capture_default_str();
  sub->add_flag("--normalized", o->normalized, "Use the symmetric normalized Laplacian");
  sub->add_flag("--distances", o->distances, "Print the hop-distance matrix instead");
  return {sub, [o, &g] {
            const SkeletonGraph graph = SkeletonGraph::default_hand();
            std::ostringstream out;
            out << std::setprecision(12);
            if (o->distances) {
              const Eigen::MatrixXi d = shortest_path_distances(graph);
              for (Eigen::Index i = 0; i < d.rows(); ++i) {
                for (Eigen::Index j = 0; j < d.cols(); ++j) out << (j ? "," : "") << d(i, j);
                out << "\n";
              }
            } else {
              const GraphPE pe = laplacian_eigenvectors(
                  graph, o->k, o->normalized ? LaplacianKind::kSymmetricNormalized : LaplacianKind::kUnnormalized);
              out << "node";
              for (int j = 0; j < o->k; ++j) out << ",pe" << j;
              out << "\neigenvalue";
              for (int j = 0; j < o->k; ++j) out << "," << pe.eigenvalues[j];
              out << "\n";
              for (Eigen::Index i = 0; i < pe.eigenvectors.rows(); ++i) {
                out << i;
                for (int j = 0; j < o->k; ++j) out << "," << pe.eigenvectors(i, j);
                out << "\n";
              }
            }
            if (g.output.empty()) {
              std::cout << out.str();
            } else {
              std::ofstream file(g.output);
              if (!(file << out.str())) fail(ErrorKind::kIo, "cannot write " + g.output);
            }
          }};
}

// ---- featurize ---------------------------------------------------------

Command featurize_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("featurize", "Run the EMG frontend (and optionally the pose model) over windows");
  struct Opts {
    std::string input, weights, export_weights, variant, hand = "right";
    Eigen::Index length = kDefaultWindowSamples;
    Eigen::Index stride = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("episode", o->input, "Input episode")->required()->check(CLI::ExistingFile);
  sub->add_option("--weights", o->weights, "EGW1 weight archive (default: seeded from --seed)")
      ->check(CLI::ExistingFile);
  sub->add_option("--export-weights", o->export_weights, "Write the weights used to this archive");
  sub->add_option("--variant", o->variant, "Also run transformer S, M or L and the pose head")
      ->check(CLI::IsMember({"S", "M", "L"}));
  sub->add_option("--length", o->length, "Window length in samples")->capture_default_str();
  sub->add_option("--stride", o->stride, "Window stride in samples (0 = window length)")->capture_default_str();
  sub->add_option("--hand", o->hand, "Hand whose pose provides the targets")->capture_default_str();
  return {sub, [o, &g] {
            const Handedness hand = parse_hand(o->hand);
            const Episode e = load_episode(o->input, g.verbose);
            WeightArchive archive;
            if (!o->weights.empty()) archive = load_weight_archive(o->weights);
            const FeaturizerWeights fw =
                o->weights.empty() ? FeaturizerWeights::seeded(g.seed) : FeaturizerWeights::import_from(archive);
            WeightArchive used;
            fw.export_to(used);

            std::optional<TransformerConfig> config;
            TransformerWeights tw;
            PoseHead head;
            if (!o->variant.empty()) {
              config = TransformerConfig::variant(o->variant);
              tw = o->weights.empty() ? TransformerWeights::seeded(*config, g.seed)
                                      : TransformerWeights::import_from(archive, *config);
              head = o->weights.empty() ? PoseHead::seeded(g.seed, config->d_model)
                                        : PoseHead::import_from(archive, config->d_model);
              tw.export_to(used);
              head.export_to(used);
            }
            if (!o->export_weights.empty()) save_weight_archive(o->export_weights, used);

            const WindowSet windows = extract_windows(e, o->length, o->stride);
            for (const auto& w : windows.warnings) std::cerr << "warning: " << w << "\n";
            std::vector<Eigen::MatrixXd> features, times, predictions, targets;
            Eigen::VectorXd offsets(static_cast<Eigen::Index>(windows.windows.size()));
            for (std::size_t i = 0; i < windows.windows.size(); ++i) {
              const WindowSample& w = windows.windows[i];
              offsets[static_cast<Eigen::Index>(i)] = static_cast<double>(w.offset);
              FeatureSequence f = tds_featurize(w.window, fw);
              times.push_back(w.frame_times_ms.transpose());
              if (config) {
                const FeatureSequence h = transformer_forward(f, *config, tw);
                predictions.push_back(pose_head(h, head));
                const Eigen::MatrixXd& t = hand == Handedness::kRight ? w.targets_right : w.targets_left;
                if (t.size() == 0) fail(ErrorKind::kInvalidInput, "episode has no " + o->hand + " pose stream");
                targets.push_back(t);
              }
              features.push_back(std::move(f.data));
            }
            Container c;
            c.attributes["participant_id"] = std::to_string(e.participant_id);
            c.attributes["gesture_label"] = e.gesture_label;
            c.attributes["hand"] = o->hand;
            c.attributes["window_length"] = std::to_string(o->length);
            c.attributes["stride"] = std::to_string(o->stride == 0 ? o->length : o->stride);
            if (config) c.attributes["variant"] = o->variant;
            c.blocks.push_back(Block::f64_vector("offsets", offsets));
            c.blocks.push_back(stack_block("features", features));
            c.blocks.push_back(stack_block("frame_times_ms", times));
            if (config) {
              c.blocks.push_back(stack_block("predictions", predictions));
              c.blocks.push_back(stack_block("targets", targets));
            }
            save_with_config(std::move(c), g);
            std::cout << "windows: " << features.size() << "\n";
            if (!features.empty()) {
              std::cout << "features per window: " << features.front().rows() << " x " << features.front().cols()
                        << "\n";
            }
          }};
}

// ---- split -------------------------------------------------------------

Command split_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("split", "Generate gesture / user / both splits over a roster grid");
  auto o = std::make_shared<std::pair<int, int>>(kReferenceParticipants, kReferenceGestures);
  sub->add_option("--participants", o->first, "Participants 1..N")->capture_default_str();
  sub->add_option("--gestures", o->second, "First M gestures of the vocabulary")->capture_default_str()
      ->check(CLI::Range(1, kNumGestures));
  return {sub, [o, &g] {
            std::vector<std::uint32_t> users;
            for (int i = 1; i <= o->first; ++i) users.push_back(static_cast<std::uint32_t>(i));
            const auto& vocab = gesture_vocabulary();
            const std::vector<std::string> gestures(vocab.begin(), vocab.begin() + o->second);
            const SplitAssignment a = generate_splits(users, gestures, g.seed);
            if (!g.output.empty()) {
              std::ofstream csv(g.output);
              write_splits_csv(csv, a);
              if (!csv) fail(ErrorKind::kIo, "cannot write " + g.output);
            }
            std::cout << "held-out users:";
            for (auto u : a.held_out_users) std::cout << ' ' << u;
            std::cout << "\nheld-out gestures:";
            for (const auto& s : a.held_out_gestures) std::cout << ' ' << s;
            std::map<SplitTag, int> counts;
            for (auto t : a.tags) ++counts[t];
            std::cout << "\nepisodes: " << a.tags.size() << "\n";
            for (const auto& [tag, n] : counts) std::cout << to_string(tag) << ": " << n << "\n";
            std::cout << std::setprecision(6) << "train fraction: " << a.train_fraction() << "\n";
          }};
}

// ---- eval --------------------------------------------------------------

std::map<std::pair<std::uint32_t, std::string>, SplitTag> read_splits_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path);
  std::map<std::pair<std::uint32_t, std::string>, SplitTag> out;
  std::string line;
  std::getline(in, line);
  if (line != "participant,gesture,split") fail(ErrorKind::kMalformedHeader, "splits CSV header mismatch");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string p, gesture, tag;
    if (!std::getline(row, p, ',') || !std::getline(row, gesture, ',') || !std::getline(row, tag)) {
      fail(ErrorKind::kMalformedHeader, "bad splits CSV row '" + line + "'");
    }
    out[{static_cast<std::uint32_t>(std::stoul(p)), gesture}] = parse_split_tag(tag);
  }
  return out;
}

Command eval_command(CLI::App& app, GlobalOptions& g) {
  auto* sub = app.add_subcommand("eval", "MAE report over prediction files written by featurize --variant");
  struct Opts {
    std::vector<std::string> inputs;
    std::string splits, split = "test_user", csv;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("predictions", o->inputs, "Prediction containers")->required()->check(CLI::ExistingFile);
  sub->add_option("--splits", o->splits, "Splits CSV from the split subcommand")->check(CLI::ExistingFile);
  sub->add_option("--split", o->split, "Split tag for episodes absent from --splits")->capture_default_str();
  sub->add_option("--csv", o->csv, "Also export the report as CSV");
  return {sub, [o, &g] {
            const auto lookup = o->splits.empty() ? decltype(read_splits_csv("")){} : read_splits_csv(o->splits);
            const SplitTag fallback = parse_split_tag(o->split);
            std::vector<EvalRecord> records;
            for (const auto& path : o->inputs) {
              const Container c = load_container(path);
              const auto preds = unstack_block(c.at("predictions"));
              const auto gts = unstack_block(c.at("targets"));
              const auto user = static_cast<std::uint32_t>(std::stoul(c.attribute("participant_id")));
              const std::string& gesture = c.attribute("gesture_label");
              const auto it = lookup.find({user, gesture});
              const SplitTag tag = it == lookup.end() ? fallback : it->second;
              const Handedness hand = parse_hand(c.attribute("hand"));
              for (std::size_t w = 0; w < preds.size(); ++w) {
                auto r = make_records(preds[w], gts[w], user, gesture, tag, hand);
                records.insert(records.end(), r.begin(), r.end());
              }
            }
            std::map<SplitTag, std::vector<EvalRecord>> by_split;
            for (const auto& r : records) by_split[r.split].push_back(r);
            std::vector<SplitResult> split_results;
            for (const auto& [tag, recs] : by_split) {
              split_results.push_back({to_string(tag), pooled_mae(recs), static_cast<std::int64_t>(recs.size())});
            }
            const UserAggregate users = per_user_aggregate(records);
            const auto groups = group_mae(records, JointGrouping::standard());

            std::ostringstream rep;
            rep << std::fixed << std::setprecision(4);
            rep << "samples: " << records.size() << "\n"
                << "pooled mae: " << pooled_mae(records) << "\n"
                << "weighted avg over splits: " << weighted_avg(split_results) << "\n"
                << "per-user mae: " << users.mean << " +- " << users.std << " (" << users.per_user.size()
                << " users)\n\nsplit            mae     samples\n";
            for (const auto& s : split_results) {
              rep << std::left << std::setw(14) << s.name << std::right << std::setw(10) << s.mae << std::setw(10)
                  << s.samples << "\n";
            }
            rep << "\nuser   mae\n";
            for (const auto& [u, m] : users.per_user) rep << std::left << std::setw(6) << u << std::right << m << "\n";
            rep << "\ngroup        mae\n";
            for (const auto& [name, m] : groups) rep << std::left << std::setw(12) << name << std::right << m << "\n";
            std::cout << rep.str();

            if (!o->csv.empty()) {
              std::ofstream csv(o->csv);
              csv << std::setprecision(17) << "section,key,mae,samples\n";
              for (const auto& s : split_results) csv << "split," << s.name << ',' << s.mae << ',' << s.samples << '\n';
              csv << "summary,weighted_avg," << weighted_avg(split_results) << ',' << records.size() << '\n';
              csv << "summary,per_user_mean," << users.mean << ',' << users.per_user.size() << '\n';
              csv << "summary,per_user_std," << users.std << ',' << users.per_user.size() << '\n';
              for (const auto& [u, m] : users.per_user) csv << "user," << u << ',' << m << ",\n";
              for (const auto& [name, m] : groups) csv << "group," << name << ',' << m << ",\n";
              if (!csv) fail(ErrorKind::kIo, "cannot write " + o->csv);
            }
            (void)g;
          }};
}

}  // namespace

std::vector<Command> register_commands(CLI::App& app, GlobalOptions& global) {
  return {synth_command(app, global),         info_command(app, global),    filter_command(app, global),
          augment_emg_command(app, global),   augment_markers_command(app, global),
          fk_command(app, global),            wrist_command(app, global),   ik_command(app, global),
          occlude_command(app, global),       graph_pe_command(app, global),
          featurize_command(app, global),     split_command(app, global),   eval_command(app, global)};
}

}  // namespace egoemg::cli
