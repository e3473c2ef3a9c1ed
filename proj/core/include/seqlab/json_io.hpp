#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqlab/abstraction.hpp"
#include "seqlab/annotation.hpp"
#include "seqlab/dtw.hpp"
#include "seqlab/report.hpp"
#include "seqlab/segmentation.hpp"
#include "seqlab/seqmine.hpp"
#include "seqlab/telemetry.hpp"

// JSON shapes shared by the CLI and the HTTP service. Objects keep insertion
// order so that equal inputs always dump to equal bytes.
namespace seqlab::json_io {

using Json = nlohmann::ordered_json;

Json header_to_json(const telemetry::MatchLog& match);  // the telemetry header line
Json event_to_json(const telemetry::Event& event);      // one telemetry event line

Json boundaries_to_json(const segmentation::SegmentBoundaries& b);
segmentation::SegmentBoundaries boundaries_from_json(const Json& j);
// Header fields plus "boundaries" and "event_count".
Json match_summary_to_json(const telemetry::MatchLog& match, const segmentation::SegmentBoundaries& b);

// {"match_id","player_id",["segment",]"states":[["solo",0.0],...]}
Json sequence_to_json(const abstraction::StateSequence& seq,
                      std::optional<segmentation::Segment> segment = std::nullopt);
// {"match_id","player_id",["segment",]"runs":[["solo",3,0.0],...]}
Json dss_to_json(const abstraction::DssSequence& seq,
                 std::optional<segmentation::Segment> segment = std::nullopt);

struct TaggedSequence {
  abstraction::StateSequence sequence;
  std::optional<segmentation::Segment> segment;
};

// Reads the sequence file format. Throws Error(Malformed) with the line.
std::vector<TaggedSequence> parse_sequences(std::string_view text);
std::string serialize_sequences(std::span<const TaggedSequence> seqs);

Json pattern_to_json(const seqmine::Pattern& p);
Json frequent_table_to_json(const seqmine::FrequentSequenceTable& t);
Json ngram_table_to_json(const seqmine::NgramTable& t);
Json plot_spec_to_json(const seqmine::PlotSpec& spec);
Json graph_to_json(const seqmine::BehaviorGraph& g);

Json distance_matrix_to_json(const dtw::DistanceMatrix& m);
Json embedding_to_json(const dtw::Embedding2D& e, const dtw::ClusterAssignment* clusters);

Json kappa_result_to_json(const annotation::KappaResult& r);
Json kappa_report_to_json(const annotation::KappaReport& r);

Json rubric_to_json(const annotation::Rubric& rubric);
// Throws Error(Malformed) / DuplicateLabel / DuplicateTag.
annotation::Rubric rubric_from_json(const Json& j);

Json application_to_json(const annotation::LabelApplication& app);
Json violation_to_json(const annotation::ApplicationViolation& v);

Json label_report_to_json(const report::SegmentLabelReport& r);
Json state_frequency_to_json(const report::StateFrequency& f);
Json followup_to_json(const report::FollowupCount& f);

}  // namespace seqlab::json_io
