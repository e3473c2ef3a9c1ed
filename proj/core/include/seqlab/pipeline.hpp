#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqlab/abstraction.hpp"
#include "seqlab/annotation.hpp"
#include "seqlab/dtw.hpp"
#include "seqlab/json_io.hpp"
#include "seqlab/report.hpp"
#include "seqlab/segmentation.hpp"
#include "seqlab/seqmine.hpp"
#include "seqlab/telemetry.hpp"

// End-to-end analyses over parsed matches. The CLI and the HTTP service both
// produce their JSON through these functions.
namespace seqlab::pipeline {

using json_io::Json;

struct AnalyzedMatch {
  telemetry::MatchLog log;
  segmentation::SegmentBoundaries boundaries;
  std::vector<abstraction::StateSequence> sequences;  // header player order
};

AnalyzedMatch analyze_match(telemetry::MatchLog log, const abstraction::ProximityConfig& cfg = {});

// DSS sequences of one segment, in match order then player order. With
// `complete_only`, matches that never reached late game are skipped. Empty
// segment sequences are dropped.
seqmine::SequenceCorpus segment_corpus(std::span<const AnalyzedMatch> matches, segmentation::Segment segment,
                                       bool complete_only = true);

struct MineParams {
  segmentation::Segment segment = segmentation::Segment::Early;
  std::size_t top = 10;
  std::size_t ngram_min = 2;
  std::size_t ngram_max = 4;
  double min_support = 0.1;
};

// {"segment","table","ngrams","plot"}
Json mine(std::span<const AnalyzedMatch> matches, const MineParams& params);
Json mine_corpus(const seqmine::SequenceCorpus& corpus, const MineParams& params);

struct DtwParams {
  segmentation::Segment segment = segmentation::Segment::Late;
  std::size_t k = 5;
  bool normalize = false;
  dtw::Linkage linkage = dtw::Linkage::Average;
  std::optional<std::size_t> band;
  unsigned threads = 0;
};

struct DtwResult {
  dtw::DistanceMatrix distances;
  dtw::ClusterAssignment clusters;
  dtw::Embedding2D embedding;
};

DtwResult dtw_analysis(std::span<const AnalyzedMatch> matches, const DtwParams& params);
DtwResult dtw_corpus(const seqmine::SequenceCorpus& corpus, const DtwParams& params);
// {"segment","normalize","linkage", embedding fields with cluster per point}
Json embedding(const DtwResult& result, const DtwParams& params);

// {"segment", graph fields}
Json graph(std::span<const AnalyzedMatch> matches, segmentation::Segment segment);
Json graph_corpus(const seqmine::SequenceCorpus& corpus);

struct CorpusSpec {
  std::size_t complete = 15;     // matches that reach late game
  std::size_t surrendered = 5;   // matches that end before the first tier-3 fall
  std::uint64_t seed = 2021;
  int sample_every_ticks = 2;
};

// Matches "corpus_000".. in order; the surrendered ones come last. Match i
// uses seed `spec.seed + i`.
std::vector<telemetry::MatchLog> generate_corpus(const CorpusSpec& spec);

// Matches on which either rater has an application, in `matches` order.
std::vector<annotation::MatchHorizon> irr_horizons(std::span<const AnalyzedMatch> matches,
                                                   const annotation::AnnotationSet& a,
                                                   const annotation::AnnotationSet& b);

// {"a","b", kappa report fields}
Json irr(std::span<const AnalyzedMatch> matches, const annotation::AnnotationSet& a,
         const annotation::AnnotationSet& b, double window_s, const annotation::Rubric& rubric);

struct ReportParams {
  report::LabelTag followup_first{"Team Fighting", "Focus Target"};
  report::LabelTag followup_second{"Solo Recovery", "Farming"};
  double followup_gap_s = report::kDefaultFollowupGapS;
  bool followup_requires_death = true;
};

// Label counts use every application in `apps`; state frequencies use every
// sequence of every match. Throws Error(MissingBoundaries).
Json segment_report(std::span<const AnalyzedMatch> matches, const annotation::AnnotationSet& apps,
                    const ReportParams& params);
report::SegmentLabelReport label_report(std::span<const AnalyzedMatch> matches,
                                        const annotation::AnnotationSet& apps);

// Parses "Label/Tag" (tag may be empty after the slash, or the slash omitted).
// Throws Error(InvalidArgument) for an empty label.
report::LabelTag parse_label_tag(std::string_view text);

}  // namespace seqlab::pipeline
