#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqlab/annotation.hpp"
#include "seqlab/pipeline.hpp"

namespace seqlab::server {

// Directory layout:
//   matches/<match_id>.jsonl   canonical telemetry, one file per match
//   annotations.log            append-only annotation transactions
//   rubric.toml                current rubric (absent: empty rubric)
struct MatchSet {
  std::vector<pipeline::AnalyzedMatch> matches;  // sorted by match_id
  std::vector<std::uint64_t> hashes;             // canonical-content hash per match
  std::uint64_t combined_hash = 0;

  const pipeline::AnalyzedMatch* find(std::string_view match_id) const;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);

struct EventQuery {
  std::optional<double> from_s;  // inclusive
  std::optional<double> to_s;    // inclusive
  std::optional<std::set<telemetry::EventKind>> kinds;
};

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t entries = 0;
};

// All response bodies are compact JSON; equal workspace state and equal
// arguments give byte-identical bodies. Throws Error(NotFound) for unknown
// matches and the pipeline errors for bad parameters.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root, abstraction::ProximityConfig proximity = {});

  const std::filesystem::path& root() const { return root_; }

  // Parses, validates, stores and analyzes one match. Returns its id. Throws
  // the telemetry parse errors, Error(Conflict) for a duplicate id and
  // Error(InvalidArgument) for an id that is not a safe file name.
  std::string ingest(std::string_view raw);

  std::shared_ptr<const MatchSet> matches() const;
  annotation::Rubric rubric() const;
  // Throws the rubric validation errors; persisted before returning.
  void set_rubric(annotation::Rubric rubric);

  // Validates against the rubric, the known matches and players, and the
  // annotator's current set.
  annotation::AnnotationStore::AddResult annotate(annotation::LabelApplication app);
  std::optional<std::uint64_t> remove_annotation(std::string_view application_id);
  std::shared_ptr<const annotation::StoreSnapshot> annotation_snapshot() const { return store_.snapshot(); }
  // All applications, or one annotator's, as a set.
  annotation::AnnotationSet annotation_set(const std::optional<std::string>& annotator) const;

  std::string matches_body() const;
  std::string match_body(std::string_view match_id) const;
  std::string events_body(std::string_view match_id, const EventQuery& query) const;
  std::string sequences_body(std::string_view match_id, std::optional<segmentation::Segment> segment,
                             bool dss) const;
  std::string rubric_body() const;
  std::string annotations_body(const std::optional<std::string>& annotator,
                               const std::optional<std::string>& match_id) const;

  // Derived results, cached by a hash of their inputs and parameters.
  std::string mine_body(const pipeline::MineParams& params);
  std::string embedding_body(const pipeline::DtwParams& params);
  std::string graph_body(segmentation::Segment segment);
  std::string irr_body(const std::string& a, const std::string& b, double window_s);
  std::string report_body(const pipeline::ReportParams& params, const std::optional<std::string>& annotator);
  std::string report_csv(const std::optional<std::string>& annotator);

  CacheStats cache_stats() const;

 private:
  template <typename F>
  std::string cached(std::string_view endpoint, const std::string& params, std::uint64_t inputs, F&& compute);
  std::uint64_t rubric_hash() const;

  std::filesystem::path root_;
  abstraction::ProximityConfig proximity_;
  annotation::AnnotationStore store_;

  mutable std::mutex state_mutex_;  // guards matches_ and rubric_ pointers
  std::shared_ptr<const MatchSet> matches_;
  std::shared_ptr<const annotation::Rubric> rubric_;
  std::mutex ingest_mutex_;  // serializes ingest and rubric writes

  mutable std::mutex cache_mutex_;
  std::unordered_map<std::string, std::shared_ptr<const std::string>> cache_;  // key embeds input hashes
  std::size_t cache_hits_ = 0;
  std::size_t cache_misses_ = 0;
};

}  // namespace seqlab::server
