#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqlab/abstraction.hpp"
#include "seqlab/telemetry.hpp"

namespace seqlab::segmentation {

enum class Segment : std::uint8_t { Early, Mid, Late };

inline constexpr std::array<Segment, 3> kAllSegments{Segment::Early, Segment::Mid, Segment::Late};

std::string_view to_string(Segment segment);
std::optional<Segment> segment_from_string(std::string_view name);

struct SegmentBoundaries {
  std::optional<double> early_end_s;  // first tower fall of any tier or team
  std::optional<double> mid_end_s;    // first tier-3 tower fall
  double match_end_s = 0.0;

  bool reached_late() const { return mid_end_s.has_value(); }

  // Half-open: a time equal to a boundary belongs to the later segment.
  Segment segment_of(double time_s) const;

  friend bool operator==(const SegmentBoundaries&, const SegmentBoundaries&) = default;
};

SegmentBoundaries find_boundaries(const telemetry::MatchLog& match);

// Indexed by Segment; segments may be empty.
using SegmentedSequence = std::array<abstraction::StateSequence, 3>;

SegmentedSequence split_sequence(const abstraction::StateSequence& seq,
                                 const SegmentBoundaries& boundaries);

struct MatchSequences {
  std::string match_id;
  SegmentBoundaries boundaries;
  std::vector<abstraction::StateSequence> sequences;
};

// Keeps matches in which a tier-3 tower fell.
std::vector<MatchSequences> filter_complete_games(std::vector<MatchSequences> corpus);

}  // namespace seqlab::segmentation
