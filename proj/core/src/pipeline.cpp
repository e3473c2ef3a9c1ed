#include "seqlab/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "seqlab/error.hpp"

namespace seqlab::pipeline {

using segmentation::Segment;

namespace {

void merge_into(Json& dst, const Json& src) {
  for (const auto& [key, value] : src.items()) dst[key] = value;
}

}  // namespace

AnalyzedMatch analyze_match(telemetry::MatchLog log, const abstraction::ProximityConfig& cfg) {
  AnalyzedMatch out;
  out.boundaries = segmentation::find_boundaries(log);
  out.sequences = abstraction::abstract_match(log, cfg);
  out.log = std::move(log);
  return out;
}

seqmine::SequenceCorpus segment_corpus(std::span<const AnalyzedMatch> matches, Segment segment,
                                       bool complete_only) {
  seqmine::SequenceCorpus corpus;
  corpus.segment = segment;
  const auto seg = static_cast<std::size_t>(segment);
  for (const auto& m : matches) {
    if (complete_only && !m.boundaries.reached_late()) continue;
    for (const auto& seq : m.sequences) {
      auto parts = segmentation::split_sequence(seq, m.boundaries);
      if (parts[seg].entries.empty()) continue;
      corpus.sequences.push_back(abstraction::compress_dss(parts[seg]));
    }
  }
  return corpus;
}

Json mine(std::span<const AnalyzedMatch> matches, const MineParams& params) {
  return mine_corpus(segment_corpus(matches, params.segment), params);
}

Json mine_corpus(const seqmine::SequenceCorpus& corpus, const MineParams& params) {
  const auto table = seqmine::top_frequent_sequences(corpus, params.top);
  const auto ngrams = seqmine::mine_ngrams(corpus, params.ngram_min, params.ngram_max, params.min_support);
  return Json{{"segment", segmentation::to_string(corpus.segment)},
              {"table", json_io::frequent_table_to_json(table)},
              {"ngrams", json_io::ngram_table_to_json(ngrams)},
              {"plot", json_io::plot_spec_to_json(seqmine::plot_data(table))}};
}

DtwResult dtw_analysis(std::span<const AnalyzedMatch> matches, const DtwParams& params) {
  return dtw_corpus(segment_corpus(matches, params.segment), params);
}

DtwResult dtw_corpus(const seqmine::SequenceCorpus& corpus, const DtwParams& params) {
  DtwResult out;
  out.distances = dtw::pairwise_distances(corpus.sequences, dtw::StateCostMatrix{},
                                          dtw::DtwOptions{params.normalize, params.band}, params.threads);
  out.clusters = dtw::hierarchical_cluster(out.distances, params.linkage, params.k);
  out.embedding = dtw::mds_embed(out.distances);
  return out;
}

Json embedding(const DtwResult& result, const DtwParams& params) {
  Json j{{"segment", segmentation::to_string(params.segment)},
         {"normalize", params.normalize},
         {"linkage", params.linkage == dtw::Linkage::Average ? "average" : "complete"},
         {"corpus_size", result.distances.n}};
  merge_into(j, json_io::embedding_to_json(result.embedding, &result.clusters));
  return j;
}

Json graph(std::span<const AnalyzedMatch> matches, Segment segment) {
  return graph_corpus(segment_corpus(matches, segment));
}

Json graph_corpus(const seqmine::SequenceCorpus& corpus) {
  Json j{{"segment", segmentation::to_string(corpus.segment)}, {"corpus_size", corpus.sequences.size()}};
  merge_into(j, json_io::graph_to_json(seqmine::build_behavior_graph(corpus)));
  return j;
}

std::vector<annotation::MatchHorizon> irr_horizons(std::span<const AnalyzedMatch> matches,
                                                   const annotation::AnnotationSet& a,
                                                   const annotation::AnnotationSet& b) {
  std::set<std::string, std::less<>> used;
  for (const auto* set : {&a, &b}) {
    for (const auto& app : set->applications) used.insert(app.match_id);
  }
  std::vector<annotation::MatchHorizon> out;
  for (const auto& m : matches) {
    if (!used.contains(m.log.match_id)) continue;
    annotation::MatchHorizon h;
    h.match_id = m.log.match_id;
    for (const auto& p : m.log.players) h.player_ids.push_back(p.player_id);
    h.end_s = m.log.match_end_s();
    out.push_back(std::move(h));
  }
  return out;
}

Json irr(std::span<const AnalyzedMatch> matches, const annotation::AnnotationSet& a,
         const annotation::AnnotationSet& b, double window_s, const annotation::Rubric& rubric) {
  const auto horizons = irr_horizons(matches, a, b);
  const auto report = annotation::irr_report(a, b, horizons, window_s, rubric);
  Json j{{"a", a.annotator_id}, {"b", b.annotator_id}};
  Json matches_json = Json::array();
  for (const auto& h : horizons) matches_json.push_back(h.match_id);
  j["matches"] = std::move(matches_json);
  merge_into(j, json_io::kappa_report_to_json(report));
  return j;
}

namespace {

report::BoundaryMap boundary_map(std::span<const AnalyzedMatch> matches) {
  report::BoundaryMap out;
  for (const auto& m : matches) out.emplace(m.log.match_id, m.boundaries);
  return out;
}

std::string label_tag_text(const report::LabelTag& lt) { return lt.label + "/" + lt.tag; }

}  // namespace

report::SegmentLabelReport label_report(std::span<const AnalyzedMatch> matches,
                                        const annotation::AnnotationSet& apps) {
  return report::label_counts_by_segment(apps, boundary_map(matches));
}

Json segment_report(std::span<const AnalyzedMatch> matches, const annotation::AnnotationSet& apps,
                    const ReportParams& params) {
  const auto boundaries = boundary_map(matches);
  const auto labels = report::label_counts_by_segment(apps, boundaries);

  report::ApplicationFilter filter;
  if (params.followup_requires_death) {
    std::vector<telemetry::MatchLog> logs;
    logs.reserve(matches.size());
    for (const auto& m : matches) logs.push_back(m.log);
    filter = report::died_during(logs);
  }
  const auto followup =
      report::followup_counts(apps, params.followup_first, params.followup_second, params.followup_gap_s, filter);

  std::vector<abstraction::StateSequence> all;
  for (const auto& m : matches) all.insert(all.end(), m.sequences.begin(), m.sequences.end());
  const auto freq = report::state_frequency_by_segment(all, boundaries);

  Json followup_json{{"first", label_tag_text(params.followup_first)},
                     {"second", label_tag_text(params.followup_second)},
                     {"max_gap_s", params.followup_gap_s},
                     {"requires_death", params.followup_requires_death}};
  merge_into(followup_json, json_io::followup_to_json(followup));

  return Json{{"application_count", apps.applications.size()},
              {"labels", json_io::label_report_to_json(labels)},
              {"followup", std::move(followup_json)},
              {"state_frequency", json_io::state_frequency_to_json(freq)}};
}

std::vector<telemetry::MatchLog> generate_corpus(const CorpusSpec& spec) {
  std::vector<telemetry::MatchLog> out;
  const std::size_t total = spec.complete + spec.surrendered;
  for (std::size_t i = 0; i < total; ++i) {
    telemetry::SynthConfig cfg;
    char id[32];
    std::snprintf(id, sizeof id, "corpus_%03zu", i);
    cfg.match_id = id;
    cfg.sample_every_ticks = spec.sample_every_ticks;
    cfg.surrender_before_late = i >= spec.complete;
    out.push_back(telemetry::generate_synthetic_match(cfg, spec.seed + i));
  }
  return out;
}

report::LabelTag parse_label_tag(std::string_view text) {
  const auto slash = text.find('/');
  report::LabelTag lt{std::string(text.substr(0, slash)),
                      slash == std::string_view::npos ? std::string() : std::string(text.substr(slash + 1))};
  if (lt.label.empty()) throw Error(ErrorCode::InvalidArgument, "label/tag needs a label: '" + std::string(text) + "'");
  return lt;
}

}  // namespace seqlab::pipeline
