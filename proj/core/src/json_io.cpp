#include "seqlab/json_io.hpp"

#include <set>

#include "seqlab/error.hpp"

namespace seqlab::json_io {

using abstraction::BehaviorState;
using segmentation::Segment;
using telemetry::EventKind;

Json header_to_json(const telemetry::MatchLog& match) {
  Json header;
  header["type"] = "header";
  header["match_id"] = match.match_id;
  header["tick_interval_s"] = match.tick_interval_s;
  header["map_bounds"] = Json{{"min_x", match.map_bounds.min.x},
                              {"min_y", match.map_bounds.min.y},
                              {"max_x", match.map_bounds.max.x},
                              {"max_y", match.map_bounds.max.y}};
  Json players = Json::array();
  for (const auto& p : match.players) {
    players.push_back(Json{{"player_id", p.player_id},
                           {"team", telemetry::to_string(p.team)},
                           {"hero_name", p.hero_name},
                           {"role", telemetry::to_string(p.role)}});
  }
  header["players"] = std::move(players);
  return header;
}

Json event_to_json(const telemetry::Event& e) {
  Json line;
  line["type"] = telemetry::to_string(e.kind);
  line["t"] = e.time_s;
  switch (e.kind) {
    case EventKind::PositionSample:
      line["p"] = e.actor;
      line["x"] = e.position.x;
      line["y"] = e.position.y;
      break;
    case EventKind::Kill:
      line["actor"] = e.actor;
      line["victim"] = e.victim;
      break;
    case EventKind::Death:
      line["p"] = e.actor;
      break;
    case EventKind::TowerFall:
      line["tier"] = e.tower_tier;
      line["team"] = telemetry::to_string(e.tower_team);
      break;
    case EventKind::MatchEnd:
      break;
  }
  return line;
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::Malformed, "line " + std::to_string(line) + ": " + what, line);
}

}  // namespace

Json boundaries_to_json(const segmentation::SegmentBoundaries& b) {
  return Json{{"early_end_s", optional_number(b.early_end_s)},
              {"mid_end_s", optional_number(b.mid_end_s)},
              {"match_end_s", b.match_end_s},
              {"reached_late", b.reached_late()}};
}

segmentation::SegmentBoundaries boundaries_from_json(const Json& j) {
  segmentation::SegmentBoundaries b;
  try {
    if (!j.at("early_end_s").is_null()) b.early_end_s = j.at("early_end_s").get<double>();
    if (!j.at("mid_end_s").is_null()) b.mid_end_s = j.at("mid_end_s").get<double>();
    b.match_end_s = j.at("match_end_s").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Malformed, std::string("boundaries: ") + e.what());
  }
  return b;
}

Json match_summary_to_json(const telemetry::MatchLog& match, const segmentation::SegmentBoundaries& b) {
  Json j = header_to_json(match);
  j.erase("type");
  j["boundaries"] = boundaries_to_json(b);
  j["event_count"] = match.events.size();
  return j;
}

Json sequence_to_json(const abstraction::StateSequence& seq, std::optional<Segment> segment) {
  Json j;
  j["match_id"] = seq.match_id;
  j["player_id"] = seq.player_id;
  if (segment) j["segment"] = segmentation::to_string(*segment);
  Json states = Json::array();
  for (const auto& e : seq.entries) states.push_back(Json::array({abstraction::to_string(e.state), e.time_s}));
  j["states"] = std::move(states);
  return j;
}

Json dss_to_json(const abstraction::DssSequence& seq, std::optional<Segment> segment) {
  Json j;
  j["match_id"] = seq.match_id;
  j["player_id"] = seq.player_id;
  if (segment) j["segment"] = segmentation::to_string(*segment);
  Json runs = Json::array();
  for (const auto& r : seq.runs) runs.push_back(Json::array({abstraction::to_string(r.state), r.length, r.start_s}));
  j["runs"] = std::move(runs);
  return j;
}

std::vector<TaggedSequence> parse_sequences(std::string_view text) {
  std::vector<TaggedSequence> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      malformed(line_no, e.what());
    }
    if (!j.is_object()) malformed(line_no, "expected a JSON object");
    TaggedSequence ts;
    try {
      ts.sequence.match_id = j.at("match_id").get<std::string>();
      ts.sequence.player_id = j.at("player_id").get<std::string>();
      if (j.contains("segment")) {
        const auto name = j.at("segment").get<std::string>();
        ts.segment = segmentation::segment_from_string(name);
        if (!ts.segment) malformed(line_no, "unknown segment '" + name + "'");
      }
      for (const auto& pair : j.at("states")) {
        if (!pair.is_array() || pair.size() != 2) malformed(line_no, "state entries are [state, time] pairs");
        const auto name = pair[0].get<std::string>();
        const auto state = abstraction::state_from_string(name);
        if (!state) malformed(line_no, "unknown state '" + name + "'");
        ts.sequence.entries.push_back(abstraction::StateEntry{pair[1].get<double>(), *state});
      }
    } catch (const nlohmann::json::exception& e) {
      malformed(line_no, e.what());
    }
    out.push_back(std::move(ts));
  }
  return out;
}

std::string serialize_sequences(std::span<const TaggedSequence> seqs) {
  std::string out;
  for (const auto& s : seqs) {
    out += sequence_to_json(s.sequence, s.segment).dump();
    out += '\n';
  }
  return out;
}

Json pattern_to_json(const seqmine::Pattern& p) {
  Json j = Json::array();
  for (auto s : p) j.push_back(abstraction::to_string(s));
  return j;
}

Json frequent_table_to_json(const seqmine::FrequentSequenceTable& t) {
  Json rows = Json::array();
  std::size_t rank = 0;
  for (const auto& r : t.rows) {
    rows.push_back(Json{{"rank", ++rank},
                        {"pattern", pattern_to_json(r.pattern)},
                        {"label", seqmine::format_pattern(r.pattern)},
                        {"count", r.count},
                        {"share", r.share}});
  }
  return Json{{"corpus_size", t.corpus_size}, {"coverage", t.coverage}, {"rows", std::move(rows)}};
}

Json ngram_table_to_json(const seqmine::NgramTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    rows.push_back(Json{{"ngram", pattern_to_json(r.ngram)},
                        {"support", r.support},
                        {"sequence_count", r.sequence_count},
                        {"occurrence_count", r.occurrence_count}});
  }
  return Json{{"corpus_size", t.corpus_size}, {"rows", std::move(rows)}};
}

Json plot_spec_to_json(const seqmine::PlotSpec& spec) {
  Json bands = Json::array();
  for (const auto& b : spec.bands) {
    bands.push_back(Json{{"rank", b.rank},
                         {"pattern", pattern_to_json(b.pattern)},
                         {"y_offset", b.y_offset},
                         {"height", b.height}});
  }
  Json colors = Json::object();
  for (auto s : abstraction::kAllStates) colors[std::string(abstraction::to_string(s))] = spec.colors[abstraction::index_of(s)];
  return Json{{"max_operations", spec.max_operations},
              {"coverage", spec.coverage},
              {"colors", std::move(colors)},
              {"bands", std::move(bands)}};
}

Json graph_to_json(const seqmine::BehaviorGraph& g) {
  Json nodes = Json::array();
  for (auto s : abstraction::kAllStates) {
    nodes.push_back(Json{{"state", abstraction::to_string(s)}, {"visits", g.visits[abstraction::index_of(s)]}});
  }
  Json edges = Json::array();
  for (const auto& [key, count] : g.edges) {
    edges.push_back(Json{{"from", abstraction::to_string(key.first)},
                         {"to", abstraction::to_string(key.second)},
                         {"count", count}});
  }
  return Json{{"nodes", std::move(nodes)},
              {"edges", std::move(edges)},
              {"total_transitions", g.total_transitions()}};
}

Json distance_matrix_to_json(const dtw::DistanceMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.n; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.n; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return Json{{"ids", m.ids}, {"distances", std::move(rows)}};
}

Json embedding_to_json(const dtw::Embedding2D& e, const dtw::ClusterAssignment* clusters) {
  Json points = Json::array();
  for (std::size_t i = 0; i < e.ids.size(); ++i) {
    Json p{{"id", e.ids[i]}, {"x", e.points[i][0]}, {"y", e.points[i][1]}};
    if (clusters != nullptr) p["cluster"] = clusters->assignment[i];
    points.push_back(std::move(p));
  }
  Json j{{"eigenvalues", Json::array({e.eigenvalues[0], e.eigenvalues[1]})},
         {"degenerate", e.degenerate}};
  if (clusters != nullptr) j["k"] = clusters->k;
  j["points"] = std::move(points);
  return j;
}

Json kappa_result_to_json(const annotation::KappaResult& r) {
  return Json{{"kappa", r.kappa}, {"observed", r.observed}, {"expected", r.expected}, {"degenerate", r.degenerate}};
}

Json kappa_report_to_json(const annotation::KappaReport& r) {
  Json per_label = Json::object();
  for (const auto& [label, k] : r.per_label) per_label[label] = kappa_result_to_json(k);
  Json counts = Json::array();
  const std::size_t c = r.confusion.categories.size();
  for (std::size_t i = 0; i < c; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < c; ++j) row.push_back(r.confusion.at(i, j));
    counts.push_back(std::move(row));
  }
  return Json{{"window_s", r.window_s},
              {"n_windows", r.n_windows},
              {"overall", kappa_result_to_json(r.overall)},
              {"per_label", std::move(per_label)},
              {"confusion", Json{{"categories", r.confusion.categories}, {"counts", std::move(counts)}}}};
}

Json rubric_to_json(const annotation::Rubric& rubric) {
  Json labels = Json::array();
  for (const auto& l : rubric.labels) {
    Json tags = Json::array();
    for (const auto& t : l.tags) tags.push_back(Json{{"name", t.name}, {"description", t.description}});
    labels.push_back(Json{{"name", l.name}, {"tags", std::move(tags)}});
  }
  return Json{{"labels", std::move(labels)}};
}

annotation::Rubric rubric_from_json(const Json& j) {
  annotation::Rubric rubric;
  try {
    if (!j.is_object() || j.size() != 1 || !j.contains("labels")) {
      throw Error(ErrorCode::Malformed, "rubric must be {\"labels\": [...]}");
    }
    for (const auto& l : j.at("labels")) {
      annotation::RubricLabel label;
      label.name = l.at("name").get<std::string>();
      if (l.contains("tags")) {
        for (const auto& t : l.at("tags")) {
          annotation::RubricTag tag;
          tag.name = t.at("name").get<std::string>();
          if (t.contains("description")) tag.description = t.at("description").get<std::string>();
          label.tags.push_back(std::move(tag));
        }
      }
      rubric.labels.push_back(std::move(label));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Malformed, std::string("rubric: ") + e.what());
  }
  annotation::check_rubric(rubric);
  return rubric;
}

Json application_to_json(const annotation::LabelApplication& a) {
  return Json{{"application_id", a.application_id},
              {"annotator_id", a.annotator_id},
              {"match_id", a.match_id},
              {"player_id", a.player_id},
              {"start_s", a.start_s},
              {"end_s", a.end_s},
              {"label", a.label},
              {"tag", a.tag}};
}

Json violation_to_json(const annotation::ApplicationViolation& v) {
  Json j{{"violation", annotation::to_string(v.kind)}, {"message", v.message}};
  if (!v.existing_id.empty()) j["existing_id"] = v.existing_id;
  return j;
}

Json label_report_to_json(const report::SegmentLabelReport& r) {
  Json segments = Json::object();
  for (auto seg : segmentation::kAllSegments) {
    Json labels = Json::object();
    for (const auto& [key, count] : r.labels) {
      if (key.first != seg) continue;
      Json tags = Json::object();
      for (const auto& [tkey, tcount] : r.tags) {
        const auto& [s, l, t] = tkey;
        if (s == seg && l == key.second) tags[t] = tcount;
      }
      labels[key.second] = Json{{"count", count}, {"tags", std::move(tags)}};
    }
    segments[std::string(segmentation::to_string(seg))] = std::move(labels);
  }
  return segments;
}

Json state_frequency_to_json(const report::StateFrequency& f) {
  Json j = Json::object();
  for (auto seg : segmentation::kAllSegments) {
    Json row = Json::object();
    for (auto s : abstraction::kAllStates) row[std::string(abstraction::to_string(s))] = f.at(seg, s);
    j[std::string(segmentation::to_string(seg))] = std::move(row);
  }
  return j;
}

Json followup_to_json(const report::FollowupCount& f) {
  return Json{{"eligible", f.eligible}, {"followed", f.followed}};
}

}  // namespace seqlab::json_io
