#include "seqlab/report.hpp"

#include <algorithm>
#include <charconv>
#include <memory>
#include <numeric>

#include "seqlab/error.hpp"

namespace seqlab::report {

std::size_t SegmentLabelReport::label_count(Segment segment, std::string_view label) const {
  const auto it = labels.find({segment, std::string(label)});
  return it == labels.end() ? 0 : it->second;
}

std::size_t SegmentLabelReport::tag_count(Segment segment, std::string_view label,
                                          std::string_view tag) const {
  const auto it = tags.find({segment, std::string(label), std::string(tag)});
  return it == tags.end() ? 0 : it->second;
}

SegmentLabelReport label_counts_by_segment(const AnnotationSet& set, const BoundaryMap& boundaries) {
  SegmentLabelReport out;
  for (const auto& app : set.applications) {
    const auto b = boundaries.find(app.match_id);
    if (b == boundaries.end()) {
      throw Error(ErrorCode::MissingBoundaries, "no segment boundaries for match '" + app.match_id + "'");
    }
    const Segment seg = b->second.segment_of(app.midpoint());
    ++out.labels[{seg, app.label}];
    if (!app.tag.empty()) ++out.tags[{seg, app.label, app.tag}];
  }
  return out;
}

std::map<std::string, std::size_t> tag_distribution(const SegmentLabelReport& report,
                                                    const annotation::Rubric& rubric,
                                                    std::string_view label, Segment segment) {
  if (rubric.find(label) == nullptr) {
    throw Error(ErrorCode::UnknownLabel, "label '" + std::string(label) + "' is not in the rubric");
  }
  std::map<std::string, std::size_t> out;
  for (const auto& [key, count] : report.tags) {
    const auto& [seg, l, tag] = key;
    if (seg == segment && l == label) out[tag] = count;
  }
  return out;
}

FollowupCount followup_counts(const AnnotationSet& set, const LabelTag& first, const LabelTag& second,
                              double max_gap_s, const ApplicationFilter& filter) {
  if (!(max_gap_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_gap_s must be > 0");
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<const LabelApplication*>> lanes;
  for (const auto& app : set.applications) {
    lanes[{app.annotator_id, app.match_id, app.player_id}].push_back(&app);
  }
  FollowupCount out;
  for (auto& [key, lane] : lanes) {
    std::stable_sort(lane.begin(), lane.end(),
                     [](const LabelApplication* a, const LabelApplication* b) { return a->start_s < b->start_s; });
    for (std::size_t i = 0; i < lane.size(); ++i) {
      const auto& a = *lane[i];
      if (!first.matches(a) || (filter && !filter(a))) continue;
      ++out.eligible;
      if (i + 1 == lane.size()) continue;
      const auto& b = *lane[i + 1];
      const double gap = b.start_s - a.end_s;
      if (second.matches(b) && gap >= 0.0 && gap <= max_gap_s) ++out.followed;
    }
  }
  return out;
}

ApplicationFilter died_during(std::span<const telemetry::MatchLog> matches) {
  // (match, player) -> death times
  auto deaths = std::make_shared<std::map<std::pair<std::string, std::string>, std::vector<double>>>();
  for (const auto& m : matches) {
    for (const auto& e : m.events) {
      if (e.kind == telemetry::EventKind::Death) (*deaths)[{m.match_id, e.actor}].push_back(e.time_s);
    }
  }
  return [deaths](const LabelApplication& app) {
    const auto it = deaths->find({app.match_id, app.player_id});
    if (it == deaths->end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](double t) { return app.start_s <= t && t <= app.end_s; });
  };
}

std::size_t StateFrequency::total() const {
  std::size_t sum = 0;
  for (const auto& row : counts) sum = std::accumulate(row.begin(), row.end(), sum);
  return sum;
}

StateFrequency state_frequency_by_segment(std::span<const abstraction::StateSequence> corpus,
                                          const BoundaryMap& boundaries) {
  StateFrequency out;
  for (const auto& seq : corpus) {
    const auto b = boundaries.find(seq.match_id);
    if (b == boundaries.end()) {
      throw Error(ErrorCode::MissingBoundaries, "no segment boundaries for match '" + seq.match_id + "'");
    }
    for (const auto& e : seq.entries) {
      const auto seg = static_cast<std::size_t>(b->second.segment_of(e.time_s));
      ++out.counts[seg][abstraction::index_of(e.state)];
    }
  }
  return out;
}

namespace {

void append_field(std::string& out, std::string_view field) {
  const bool quote = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!quote) {
    out += field;
    return;
  }
  out += '"';
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

void append_row(std::string& out, Segment seg, std::string_view label, std::string_view tag,
                std::size_t count) {
  out += segmentation::to_string(seg);
  out += ',';
  append_field(out, label);
  out += ',';
  append_field(out, tag);
  out += ',';
  out += std::to_string(count);
  out += '\n';
}

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::Malformed, "csv line " + std::to_string(line) + ": " + what, line);
}

// Splits RFC 4180 records. Quoted fields may contain separators and line
// breaks; `lines` receives the starting line of each record.
std::vector<std::vector<std::string>> split_records(std::string_view text, std::vector<std::size_t>& lines) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  std::size_t line = 1;
  std::size_t record_line = 1;
  bool in_quotes = false;
  bool field_started = false;
  bool after_quote = false;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    lines.push_back(record_line);
    field_started = false;
    after_quote = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
          after_quote = true;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
      after_quote = false;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      end_record();
      record_line = ++line;
    } else if (c == '"') {
      if (!field.empty() || after_quote) malformed(line, "stray quote");
      in_quotes = true;
      field_started = true;
    } else {
      if (after_quote) malformed(line, "text after closing quote");
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) malformed(line, "unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

}  // namespace

std::string export_csv(const SegmentLabelReport& report) {
  std::string out = "segment,label,tag,count\n";
  for (const auto& [key, count] : report.labels) {
    const auto& [seg, label] = key;
    append_row(out, seg, label, "", count);
    for (auto it = report.tags.lower_bound({seg, label, std::string()}); it != report.tags.end(); ++it) {
      const auto& [s, l, tag] = it->first;
      if (s != seg || l != label) break;
      append_row(out, seg, label, tag, it->second);
    }
  }
  return out;
}

SegmentLabelReport parse_csv(std::string_view text) {
  std::vector<std::size_t> lines;
  const auto records = split_records(text, lines);
  if (records.empty()) malformed(1, "missing header");
  const std::vector<std::string> header{"segment", "label", "tag", "count"};
  if (records[0] != header) malformed(lines[0], "header must be segment,label,tag,count");
  SegmentLabelReport out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t line = lines[r];
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (rec.size() != 4) malformed(line, "expected 4 fields, got " + std::to_string(rec.size()));
    const auto seg = segmentation::segment_from_string(rec[0]);
    if (!seg) malformed(line, "unknown segment '" + rec[0] + "'");
    if (rec[1].empty()) malformed(line, "empty label");
    std::size_t count = 0;
    const auto* first = rec[3].data();
    const auto* last = first + rec[3].size();
    const auto [ptr, ec] = std::from_chars(first, last, count);
    if (ec != std::errc() || ptr != last || rec[3].empty()) malformed(line, "bad count '" + rec[3] + "'");
    bool inserted = false;
    if (rec[2].empty()) {
      inserted = out.labels.emplace(std::pair{*seg, rec[1]}, count).second;
    } else {
      inserted = out.tags.emplace(std::tuple{*seg, rec[1], rec[2]}, count).second;
    }
    if (!inserted) malformed(line, "duplicate row");
  }
  return out;
}

}  // namespace seqlab::report
