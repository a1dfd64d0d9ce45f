#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace egoemg {

enum class SplitTag { kTrain, kValGesture, kValUser, kValBoth, kTestGesture, kTestUser, kTestBoth };
std::string to_string(SplitTag tag);
/// Inverse of to_string; kInvalidInput otherwise.
SplitTag parse_split_tag(const std::string& text);

inline constexpr int kHeldOutGestures = 10;
inline constexpr int kHeldOutUsers = 6;
inline constexpr int kReferenceParticipants = 41;
inline constexpr int kReferenceGestures = 60;
inline constexpr int kMinParticipants = 7;
inline constexpr int kMinGestures = 11;

struct EpisodeKey {
  std::uint32_t participant = 0;
  std::string gesture;
  friend bool operator==(const EpisodeKey&, const EpisodeKey&) = default;
};

struct SplitAssignment {
  std::vector<std::string> held_out_gestures;
  std::vector<std::uint32_t> held_out_users;
  std::uint64_t seed = 0;
  std::vector<EpisodeKey> episodes;
  std::vector<SplitTag> tags;  // parallel to `episodes`

  double train_fraction() const;
  bool is_held_out_user(std::uint32_t participant) const;
  bool is_held_out_gesture(const std::string& gesture) const;
};

/// Held-out counts for a roster: 6 users and 10 gestures at full size, scaled
/// by roster size (rounded, at least 1) for smaller synthetic rosters.
std::pair<int, int> held_out_counts(std::size_t participants, std::size_t gestures);

/// Seeded held-out selection over the full participant x gesture grid.
/// Episodes held out on some axis are halved into val and test by a seeded
/// shuffle within each axis group. kRosterTooSmall below 7 participants or
/// 11 gestures; kInvalidInput for duplicate entries.
SplitAssignment generate_splits(const std::vector<std::uint32_t>& participants,
                                const std::vector<std::string>& gestures, std::uint64_t seed);
/// Same selection, tagging only the given episodes.
SplitAssignment generate_splits(const std::vector<std::uint32_t>& participants,
                                const std::vector<std::string>& gestures, std::uint64_t seed,
                                const std::vector<EpisodeKey>& episodes);

/// CSV with header "participant,gesture,split".
void write_splits_csv(std::ostream& out, const SplitAssignment& assignment);

}  // namespace egoemg
