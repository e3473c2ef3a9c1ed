#include "seqlab/segmentation.hpp"

#include <algorithm>
#include <cstddef>

namespace seqlab::segmentation {

std::string_view to_string(Segment segment) {
  switch (segment) {
    case Segment::Early: return "early";
    case Segment::Mid: return "mid";
    case Segment::Late: return "late";
  }
  return "?";
}

std::optional<Segment> segment_from_string(std::string_view name) {
  if (name == "early") return Segment::Early;
  if (name == "mid") return Segment::Mid;
  if (name == "late") return Segment::Late;
  return std::nullopt;
}

Segment SegmentBoundaries::segment_of(double time_s) const {
  if (!early_end_s || time_s < *early_end_s) return Segment::Early;
  if (!mid_end_s || time_s < *mid_end_s) return Segment::Mid;
  return Segment::Late;
}

SegmentBoundaries find_boundaries(const telemetry::MatchLog& match) {
  SegmentBoundaries b;
  b.match_end_s = match.match_end_s();
  for (const auto& e : match.events) {
    if (e.kind != telemetry::EventKind::TowerFall) continue;
    if (!b.early_end_s) b.early_end_s = e.time_s;
    if (e.tower_tier == 3 && !b.mid_end_s) b.mid_end_s = e.time_s;
  }
  return b;
}

SegmentedSequence split_sequence(const abstraction::StateSequence& seq,
                                 const SegmentBoundaries& boundaries) {
  SegmentedSequence out;
  for (auto& part : out) {
    part.match_id = seq.match_id;
    part.player_id = seq.player_id;
  }
  for (const auto& entry : seq.entries) {
    out[static_cast<std::size_t>(boundaries.segment_of(entry.time_s))].entries.push_back(entry);
  }
  return out;
}

std::vector<MatchSequences> filter_complete_games(std::vector<MatchSequences> corpus) {
  std::erase_if(corpus, [](const MatchSequences& m) { return !m.boundaries.reached_late(); });
  return corpus;
}

}  // namespace seqlab::segmentation
