#include "egoemg/splits.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <set>

#include "egoemg/error.hpp"
#include "egoemg/rng.hpp"

namespace egoemg {

namespace {

constexpr std::uint32_t kUserStream = 400;
constexpr std::uint32_t kGestureStream = 401;
constexpr std::uint32_t kHalvingStream = 402;  // + axis group

template <typename T>
void shuffle(std::vector<T>& v, CounterRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

template <typename T>
void require_unique(const std::vector<T>& v, const char* what) {
  if (std::set<T>(v.begin(), v.end()).size() != v.size()) {
    fail(ErrorKind::kInvalidInput, std::string("duplicate ") + what + " in roster");
  }
}

int scaled_count(int reference_count, std::size_t size, int reference_size) {
  if (static_cast<int>(size) >= reference_size) return reference_count;
  const auto v = static_cast<int>(std::lround(reference_count * static_cast<double>(size) / reference_size));
  return std::clamp(v, 1, static_cast<int>(size) - 1);
}

}  // namespace

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kValGesture: return "val_gesture";
    case SplitTag::kValUser: return "val_user";
    case SplitTag::kValBoth: return "val_both";
    case SplitTag::kTestGesture: return "test_gesture";
    case SplitTag::kTestUser: return "test_user";
    case SplitTag::kTestBoth: return "test_both";
  }
  return "?";
}

SplitTag parse_split_tag(const std::string& text) {
  for (SplitTag t : {SplitTag::kTrain, SplitTag::kValGesture, SplitTag::kValUser, SplitTag::kValBoth,
                     SplitTag::kTestGesture, SplitTag::kTestUser, SplitTag::kTestBoth}) {
    if (to_string(t) == text) return t;
  }
  fail(ErrorKind::kInvalidInput, "unknown split tag '" + text + "'");
}

double SplitAssignment::train_fraction() const {
  if (tags.empty()) return 0.0;
  const auto n = std::count(tags.begin(), tags.end(), SplitTag::kTrain);
  return static_cast<double>(n) / static_cast<double>(tags.size());
}

bool SplitAssignment::is_held_out_user(std::uint32_t participant) const {
  return std::find(held_out_users.begin(), held_out_users.end(), participant) != held_out_users.end();
}

bool SplitAssignment::is_held_out_gesture(const std::string& gesture) const {
  return std::find(held_out_gestures.begin(), held_out_gestures.end(), gesture) != held_out_gestures.end();
}

std::pair<int, int> held_out_counts(std::size_t participants, std::size_t gestures) {
  return {scaled_count(kHeldOutUsers, participants, kReferenceParticipants),
          scaled_count(kHeldOutGestures, gestures, kReferenceGestures)};
}

SplitAssignment generate_splits(const std::vector<std::uint32_t>& participants,
                                const std::vector<std::string>& gestures, std::uint64_t seed) {
  std::vector<EpisodeKey> grid;
  grid.reserve(participants.size() * gestures.size());
  for (auto p : participants) {
    for (const auto& g : gestures) grid.push_back({p, g});
  }
  return generate_splits(participants, gestures, seed, grid);
}

SplitAssignment generate_splits(const std::vector<std::uint32_t>& participants,
                                const std::vector<std::string>& gestures, std::uint64_t seed,
                                const std::vector<EpisodeKey>& episodes) {
  if (participants.size() < kMinParticipants || gestures.size() < kMinGestures) {
    fail(ErrorKind::kRosterTooSmall, "splits need at least 7 participants and 11 gestures, got " +
                                         std::to_string(participants.size()) + " and " +
                                         std::to_string(gestures.size()));
  }
  require_unique(participants, "participant");
  require_unique(gestures, "gesture");
  const auto [n_users, n_gestures] = held_out_counts(participants.size(), gestures.size());

  SplitAssignment a;
  a.seed = seed;
  {
    std::vector<std::uint32_t> users = participants;
    CounterRng rng(seed, 0, kUserStream);
    shuffle(users, rng);
    a.held_out_users.assign(users.begin(), users.begin() + n_users);
    std::sort(a.held_out_users.begin(), a.held_out_users.end());
  }
  {
    std::vector<std::string> gs = gestures;
    CounterRng rng(seed, 0, kGestureStream);
    shuffle(gs, rng);
    a.held_out_gestures.assign(gs.begin(), gs.begin() + n_gestures);
    std::sort(a.held_out_gestures.begin(), a.held_out_gestures.end());
  }

  const std::set<std::uint32_t> roster_users(participants.begin(), participants.end());
  const std::set<std::string> roster_gestures(gestures.begin(), gestures.end());
  a.episodes = episodes;
  a.tags.assign(episodes.size(), SplitTag::kTrain);
  // 0: gesture held out only, 1: user only, 2: both.
  std::array<std::vector<std::size_t>, 3> groups;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& e = episodes[i];
    if (!roster_users.contains(e.participant) || !roster_gestures.contains(e.gesture)) {
      fail(ErrorKind::kInvalidInput, "episode (" + std::to_string(e.participant) + ", " + e.gesture +
                                         ") is not in the roster");
    }
    const bool user = a.is_held_out_user(e.participant);
    const bool gesture = a.is_held_out_gesture(e.gesture);
    if (user && gesture) {
      groups[2].push_back(i);
    } else if (user) {
      groups[1].push_back(i);
    } else if (gesture) {
      groups[0].push_back(i);
    }
  }
  constexpr std::array<SplitTag, 3> kVal{SplitTag::kValGesture, SplitTag::kValUser, SplitTag::kValBoth};
  constexpr std::array<SplitTag, 3> kTest{SplitTag::kTestGesture, SplitTag::kTestUser, SplitTag::kTestBoth};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& idx = groups[g];
    CounterRng rng(seed, 0, kHalvingStream + static_cast<std::uint32_t>(g));
    shuffle(idx, rng);
    const std::size_t n_val = (idx.size() + 1) / 2;
    for (std::size_t k = 0; k < idx.size(); ++k) a.tags[idx[k]] = k < n_val ? kVal[g] : kTest[g];
  }
  return a;
}

void write_splits_csv(std::ostream& out, const SplitAssignment& a) {
  out << "participant,gesture,split\n";
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    out << a.episodes[i].participant << ',' << a.episodes[i].gesture << ',' << to_string(a.tags[i]) << '\n';
  }
}

}  // namespace egoemg
