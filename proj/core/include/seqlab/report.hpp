#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "seqlab/abstraction.hpp"
#include "seqlab/annotation.hpp"
#include "seqlab/segmentation.hpp"
#include "seqlab/telemetry.hpp"

namespace seqlab::report {

using annotation::AnnotationSet;
using annotation::LabelApplication;
using segmentation::Segment;
using segmentation::SegmentBoundaries;

using BoundaryMap = std::map<std::string, SegmentBoundaries, std::less<>>;

struct SegmentLabelReport {
  std::map<std::pair<Segment, std::string>, std::size_t> labels;
  // Applications with an empty tag count only at the label level.
  std::map<std::tuple<Segment, std::string, std::string>, std::size_t> tags;

  std::size_t label_count(Segment segment, std::string_view label) const;
  std::size_t tag_count(Segment segment, std::string_view label, std::string_view tag) const;

  friend bool operator==(const SegmentLabelReport&, const SegmentLabelReport&) = default;
};

// Each application lands in the segment holding its interval midpoint.
// Throws Error(MissingBoundaries) for a match absent from `boundaries`.
SegmentLabelReport label_counts_by_segment(const AnnotationSet& set, const BoundaryMap& boundaries);

// Tag -> count for one label in one segment; tags without applications are
// omitted. Throws Error(UnknownLabel) if the rubric has no such label.
std::map<std::string, std::size_t> tag_distribution(const SegmentLabelReport& report,
                                                    const annotation::Rubric& rubric,
                                                    std::string_view label, Segment segment);

struct LabelTag {
  std::string label;
  std::string tag;  // empty matches any tag

  bool matches(const LabelApplication& app) const {
    return app.label == label && (tag.empty() || app.tag == tag);
  }
};

struct FollowupCount {
  std::size_t eligible = 0;  // `first` applications passing the filter
  std::size_t followed = 0;  // of those, directly followed by `second`

  friend bool operator==(const FollowupCount&, const FollowupCount&) = default;
};

using ApplicationFilter = std::function<bool(const LabelApplication&)>;

inline constexpr double kDefaultFollowupGapS = 30.0;

// Walks each (annotator, match, player) lane in start order. A `first`
// application is followed when the next application on the lane matches
// `second` and starts within [end, end + max_gap_s]. Throws
// Error(InvalidArgument) unless max_gap_s > 0.
FollowupCount followup_counts(const AnnotationSet& set, const LabelTag& first, const LabelTag& second,
                              double max_gap_s = kDefaultFollowupGapS,
                              const ApplicationFilter& filter = {});

// True when the labeled player has a Death event in [start_s, end_s] of its
// match; applications on matches not in `matches` never pass.
ApplicationFilter died_during(std::span<const telemetry::MatchLog> matches);

struct StateFrequency {
  std::array<std::array<std::size_t, abstraction::kStateCount>, 3> counts{};  // [segment][state]

  std::size_t at(Segment segment, abstraction::BehaviorState state) const {
    return counts[static_cast<std::size_t>(segment)][abstraction::index_of(state)];
  }
  std::size_t total() const;

  friend bool operator==(const StateFrequency&, const StateFrequency&) = default;
};

// Raw tick histogram. Throws Error(MissingBoundaries).
StateFrequency state_frequency_by_segment(std::span<const abstraction::StateSequence> corpus,
                                          const BoundaryMap& boundaries);

// Columns segment,label,tag,count. Each label row (empty tag) is followed by
// its tag rows. RFC 4180 quoting, '\n' line ends.
std::string export_csv(const SegmentLabelReport& report);
// Accepts '\n' or "\r\n". Throws Error(Malformed) with the 1-based line.
SegmentLabelReport parse_csv(std::string_view text);

}  // namespace seqlab::report
