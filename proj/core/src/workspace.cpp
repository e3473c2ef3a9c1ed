#include "seqlab/workspace.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "seqlab/error.hpp"
#include "seqlab/json_io.hpp"

namespace seqlab::server {

using json_io::Json;
namespace fs = std::filesystem;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

const pipeline::AnalyzedMatch* MatchSet::find(std::string_view match_id) const {
  const auto it = std::lower_bound(matches.begin(), matches.end(), match_id,
                                   [](const pipeline::AnalyzedMatch& m, std::string_view id) { return m.log.match_id < id; });
  return it != matches.end() && it->log.match_id == match_id ? &*it : nullptr;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::StorageFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void fsync_path(const fs::path& path, int flags) {
  const int fd = ::open(path.c_str(), flags | O_CLOEXEC);
  if (fd < 0) throw Error(ErrorCode::StorageFailure, "cannot open " + path.string());
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) throw Error(ErrorCode::StorageFailure, "fsync failed for " + path.string());
}

// Write-then-rename so readers never see a partial file.
void write_file_atomic(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::StorageFailure, "write failed for " + tmp.string());
  }
  fsync_path(tmp, O_RDONLY);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::StorageFailure, "rename to " + path.string() + " failed: " + ec.message());
  fsync_path(path.parent_path(), O_RDONLY | O_DIRECTORY);
}

bool safe_file_name(std::string_view id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.';
  });
}

std::shared_ptr<const MatchSet> make_set(std::vector<pipeline::AnalyzedMatch> matches,
                                         std::vector<std::uint64_t> hashes) {
  std::vector<std::size_t> order(matches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return matches[a].log.match_id < matches[b].log.match_id; });
  auto set = std::make_shared<MatchSet>();
  std::string digest;
  for (std::size_t i : order) {
    set->matches.push_back(std::move(matches[i]));
    set->hashes.push_back(hashes[i]);
    digest += set->matches.back().log.match_id + ":" + std::to_string(hashes[i]) + ";";
  }
  set->combined_hash = fnv1a(digest);
  return set;
}

std::string fmt_double(double v) { return Json(v).dump(); }

}  // namespace

Workspace::Workspace(fs::path root, abstraction::ProximityConfig proximity)
    : root_(std::move(root)), proximity_(std::move(proximity)), store_((fs::create_directories(root_ / "matches"), root_ / "annotations.log")) {
  abstraction::check_config(proximity_);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root_ / "matches")) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<pipeline::AnalyzedMatch> matches;
  std::vector<std::uint64_t> hashes;
  for (const auto& path : files) {
    const auto raw = read_file(path);
    telemetry::MatchLog log;
    try {
      log = telemetry::parse_match_log(raw);
    } catch (const Error& e) {
      throw Error(ErrorCode::StorageFailure, path.string() + ": " + e.what());
    }
    if (log.match_id != path.stem().string()) {
      throw Error(ErrorCode::StorageFailure, path.string() + " holds match '" + log.match_id + "'");
    }
    hashes.push_back(fnv1a(telemetry::serialize_match_log(log)));
    matches.push_back(pipeline::analyze_match(std::move(log), proximity_));
  }
  matches_ = make_set(std::move(matches), std::move(hashes));

  const auto rubric_path = root_ / "rubric.toml";
  rubric_ = std::make_shared<const annotation::Rubric>(
      fs::exists(rubric_path) ? annotation::load_rubric(read_file(rubric_path)) : annotation::Rubric{});
}

std::string Workspace::ingest(std::string_view raw) {
  auto log = telemetry::parse_match_log(raw);
  if (!safe_file_name(log.match_id)) {
    throw Error(ErrorCode::InvalidArgument, "match_id '" + log.match_id + "' is not usable as a file name");
  }
  const auto canonical = telemetry::serialize_match_log(log);
  auto analyzed = pipeline::analyze_match(std::move(log), proximity_);
  const std::string id = analyzed.log.match_id;

  std::lock_guard ingest_lock(ingest_mutex_);
  const auto current = matches();
  if (current->find(id) != nullptr) throw Error(ErrorCode::Conflict, "match '" + id + "' already ingested");
  write_file_atomic(root_ / "matches" / (id + ".jsonl"), canonical);

  std::vector<pipeline::AnalyzedMatch> next(current->matches.begin(), current->matches.end());
  std::vector<std::uint64_t> hashes = current->hashes;
  next.push_back(std::move(analyzed));
  hashes.push_back(fnv1a(canonical));
  auto set = make_set(std::move(next), std::move(hashes));
  std::lock_guard lock(state_mutex_);
  matches_ = std::move(set);
  return id;
}

std::shared_ptr<const MatchSet> Workspace::matches() const {
  std::lock_guard lock(state_mutex_);
  return matches_;
}

annotation::Rubric Workspace::rubric() const {
  std::lock_guard lock(state_mutex_);
  return *rubric_;
}

void Workspace::set_rubric(annotation::Rubric rubric) {
  annotation::check_rubric(rubric);
  std::lock_guard ingest_lock(ingest_mutex_);
  write_file_atomic(root_ / "rubric.toml", annotation::rubric_to_toml(rubric));
  auto next = std::make_shared<const annotation::Rubric>(std::move(rubric));
  std::lock_guard lock(state_mutex_);
  rubric_ = std::move(next);
}

std::uint64_t Workspace::rubric_hash() const { return fnv1a(annotation::rubric_to_toml(rubric())); }

annotation::AnnotationStore::AddResult Workspace::annotate(annotation::LabelApplication app) {
  const auto set = matches();
  auto check = [&](const annotation::LabelApplication& a) -> std::optional<annotation::ApplicationViolation> {
    const auto* m = set->find(a.match_id);
    if (m == nullptr) {
      return annotation::ApplicationViolation{annotation::ViolationKind::UnknownMatch, {},
                                              "match '" + a.match_id + "' is not in the workspace"};
    }
    if (!m->log.player_index(a.player_id)) {
      return annotation::ApplicationViolation{annotation::ViolationKind::UnknownPlayer, {},
                                              "player '" + a.player_id + "' is not in match '" + a.match_id + "'"};
    }
    return std::nullopt;
  };
  return store_.add(std::move(app), rubric(), check);
}

std::optional<std::uint64_t> Workspace::remove_annotation(std::string_view application_id) {
  return store_.remove(application_id);
}

annotation::AnnotationSet Workspace::annotation_set(const std::optional<std::string>& annotator) const {
  const auto snap = store_.snapshot();
  if (annotator) return snap->for_annotator(*annotator);
  return annotation::AnnotationSet{{}, snap->all()};
}

std::string Workspace::matches_body() const {
  const auto set = matches();
  Json list = Json::array();
  for (const auto& m : set->matches) {
    list.push_back(Json{{"match_id", m.log.match_id},
                        {"player_count", m.log.players.size()},
                        {"match_end_s", m.log.match_end_s()},
                        {"reached_late", m.boundaries.reached_late()}});
  }
  return Json{{"matches", std::move(list)}}.dump();
}

namespace {

const pipeline::AnalyzedMatch& require(const MatchSet& set, std::string_view match_id) {
  const auto* m = set.find(match_id);
  if (m == nullptr) throw Error(ErrorCode::NotFound, "no match '" + std::string(match_id) + "'");
  return *m;
}

}  // namespace

std::string Workspace::match_body(std::string_view match_id) const {
  const auto set = matches();
  const auto& m = require(*set, match_id);
  return json_io::match_summary_to_json(m.log, m.boundaries).dump();
}

std::string Workspace::events_body(std::string_view match_id, const EventQuery& q) const {
  const auto set = matches();
  const auto& m = require(*set, match_id);
  Json events = Json::array();
  for (const auto& e : m.log.events) {
    if (q.from_s && e.time_s < *q.from_s) continue;
    if (q.to_s && e.time_s > *q.to_s) continue;
    if (q.kinds && !q.kinds->contains(e.kind)) continue;
    events.push_back(json_io::event_to_json(e));
  }
  Json kinds = Json::array();
  if (q.kinds) {
    for (auto k : *q.kinds) kinds.push_back(telemetry::to_string(k));
  }
  return Json{{"match_id", m.log.match_id},
              {"from", q.from_s ? Json(*q.from_s) : Json(nullptr)},
              {"to", q.to_s ? Json(*q.to_s) : Json(nullptr)},
              {"kinds", q.kinds ? std::move(kinds) : Json(nullptr)},
              {"events", std::move(events)}}
      .dump();
}

std::string Workspace::sequences_body(std::string_view match_id, std::optional<segmentation::Segment> segment,
                                      bool dss) const {
  const auto set = matches();
  const auto& m = require(*set, match_id);
  Json seqs = Json::array();
  for (const auto& seq : m.sequences) {
    const abstraction::StateSequence part =
        segment ? segmentation::split_sequence(seq, m.boundaries)[static_cast<std::size_t>(*segment)] : seq;
    seqs.push_back(dss ? json_io::dss_to_json(abstraction::compress_dss(part), segment)
                       : json_io::sequence_to_json(part, segment));
  }
  return Json{{"match_id", m.log.match_id},
              {"segment", segment ? Json(segmentation::to_string(*segment)) : Json(nullptr)},
              {"dss", dss},
              {"sequences", std::move(seqs)}}
      .dump();
}

std::string Workspace::rubric_body() const { return json_io::rubric_to_json(rubric()).dump(); }

std::string Workspace::annotations_body(const std::optional<std::string>& annotator,
                                        const std::optional<std::string>& match_id) const {
  const auto snap = store_.snapshot();
  Json apps = Json::array();
  for (const auto& s : snap->applications) {
    if (annotator && s.app.annotator_id != *annotator) continue;
    if (match_id && s.app.match_id != *match_id) continue;
    Json j = json_io::application_to_json(s.app);
    j["txid"] = s.txid;
    apps.push_back(std::move(j));
  }
  return Json{{"last_txid", snap->last_txid}, {"applications", std::move(apps)}}.dump();
}

template <typename F>
std::string Workspace::cached(std::string_view endpoint, const std::string& params, std::uint64_t inputs,
                              F&& compute) {
  std::string key(endpoint);
  key += '\n';
  key += params;
  key += '\n';
  key += std::to_string(inputs);
  {
    std::lock_guard lock(cache_mutex_);
    if (const auto it = cache_.find(key); it != cache_.end()) {
      ++cache_hits_;
      return *it->second;
    }
  }
  auto body = std::make_shared<const std::string>(compute());
  std::lock_guard lock(cache_mutex_);
  ++cache_misses_;
  if (cache_.size() >= 512) cache_.clear();
  cache_.emplace(std::move(key), body);
  return *body;
}

std::string Workspace::mine_body(const pipeline::MineParams& p) {
  const auto set = matches();
  const std::string params = std::string(segmentation::to_string(p.segment)) + "|" + std::to_string(p.top) + "|" +
                             std::to_string(p.ngram_min) + "|" + std::to_string(p.ngram_max) + "|" +
                             fmt_double(p.min_support);
  return cached("mine", params, set->combined_hash, [&] { return pipeline::mine(set->matches, p).dump(); });
}

std::string Workspace::embedding_body(const pipeline::DtwParams& p) {
  const auto set = matches();
  const std::string params = std::string(segmentation::to_string(p.segment)) + "|" + std::to_string(p.k) + "|" +
                             (p.normalize ? "n" : "r") + "|" +
                             (p.linkage == dtw::Linkage::Average ? "avg" : "complete") + "|" +
                             (p.band ? std::to_string(*p.band) : "-");
  return cached("dtw/embedding", params, set->combined_hash, [&] {
    return pipeline::embedding(pipeline::dtw_analysis(set->matches, p), p).dump();
  });
}

std::string Workspace::graph_body(segmentation::Segment segment) {
  const auto set = matches();
  return cached("graph", std::string(segmentation::to_string(segment)), set->combined_hash,
                [&] { return pipeline::graph(set->matches, segment).dump(); });
}

std::string Workspace::irr_body(const std::string& a, const std::string& b, double window_s) {
  const auto set = matches();
  const auto snap = store_.snapshot();
  const auto rub = rubric();
  const std::uint64_t inputs =
      fnv1a(std::to_string(set->combined_hash) + ";" + std::to_string(snap->last_txid) + ";" +
            std::to_string(fnv1a(annotation::rubric_to_toml(rub))));
  // Keys are length-prefixed so that no pair of annotator ids can collide.
  const std::string params =
      std::to_string(a.size()) + ":" + a + "|" + std::to_string(b.size()) + ":" + b + "|" + fmt_double(window_s);
  return cached("irr", params, inputs, [&] {
    return pipeline::irr(set->matches, snap->for_annotator(a), snap->for_annotator(b), window_s, rub).dump();
  });
}

std::string Workspace::report_body(const pipeline::ReportParams& p, const std::optional<std::string>& annotator) {
  const auto set = matches();
  const auto snap = store_.snapshot();
  const std::uint64_t inputs = fnv1a(std::to_string(set->combined_hash) + ";" + std::to_string(snap->last_txid));
  auto lt = [](const report::LabelTag& x) {
    return std::to_string(x.label.size()) + ":" + x.label + "/" + std::to_string(x.tag.size()) + ":" + x.tag;
  };
  const std::string params = lt(p.followup_first) + "|" + lt(p.followup_second) + "|" + fmt_double(p.followup_gap_s) +
                             "|" + (p.followup_requires_death ? "d" : "-") + "|" +
                             (annotator ? std::to_string(annotator->size()) + ":" + *annotator : "*");
  return cached("report/segments", params, inputs, [&] {
    const annotation::AnnotationSet apps =
        annotator ? snap->for_annotator(*annotator) : annotation::AnnotationSet{{}, snap->all()};
    return pipeline::segment_report(set->matches, apps, p).dump();
  });
}

std::string Workspace::report_csv(const std::optional<std::string>& annotator) {
  const auto set = matches();
  return report::export_csv(pipeline::label_report(set->matches, annotation_set(annotator)));
}

CacheStats Workspace::cache_stats() const {
  std::lock_guard lock(cache_mutex_);
  return CacheStats{cache_hits_, cache_misses_, cache_.size()};
}

}  // namespace seqlab::server
