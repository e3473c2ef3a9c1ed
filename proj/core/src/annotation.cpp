#include "seqlab/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "seqlab/error.hpp"

namespace seqlab::annotation {

using ojson = nlohmann::ordered_json;

// --- rubric ----------------------------------------------------------------

const RubricLabel* Rubric::find(std::string_view label) const {
  for (const auto& l : labels) {
    if (l.name == label) return &l;
  }
  return nullptr;
}

bool Rubric::contains(std::string_view label, std::string_view tag) const {
  const auto* l = find(label);
  if (l == nullptr) return false;
  return std::any_of(l->tags.begin(), l->tags.end(), [&](const RubricTag& t) { return t.name == tag; });
}

void check_rubric(const Rubric& rubric) {
  std::set<std::string_view> labels;
  for (const auto& l : rubric.labels) {
    if (l.name.empty()) throw Error(ErrorCode::Malformed, "label with empty name");
    if (!labels.insert(l.name).second) {
      throw Error(ErrorCode::DuplicateLabel, "label '" + l.name + "' defined twice");
    }
    std::set<std::string_view> tags;
    for (const auto& t : l.tags) {
      if (t.name.empty()) throw Error(ErrorCode::Malformed, "tag with empty name under '" + l.name + "'");
      if (!tags.insert(t.name).second) {
        throw Error(ErrorCode::DuplicateTag, "tag '" + t.name + "' defined twice under '" + l.name + "'");
      }
    }
  }
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::Malformed, "line " + std::to_string(line) + ": " + what, line);
}

// Parses a basic ("...") or literal ('...') string starting at s[0]; returns
// the value and leaves `rest` at the first character after the closing quote.
std::string parse_string(std::string_view s, std::size_t line, std::string_view& rest) {
  const char quote = s.front();
  std::string out;
  std::size_t i = 1;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == quote) break;
    if (quote == '"' && c == '\\') {
      if (++i >= s.size()) malformed(line, "unterminated escape");
      switch (s[i]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: malformed(line, std::string("unsupported escape \\") + s[i]);
      }
      continue;
    }
    out += c;
  }
  if (i >= s.size()) malformed(line, "unterminated string");
  rest = s.substr(i + 1);
  return out;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

Rubric load_rubric(std::string_view text) {
  Rubric rubric;
  enum class Table { None, Label, Tag } table = Table::None;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      std::string_view header = line;
      if (auto hash = header.find('#'); hash != std::string_view::npos) header = trim(header.substr(0, hash));
      if (header == "[[label]]") {
        rubric.labels.emplace_back();
        table = Table::Label;
      } else if (header == "[[label.tag]]") {
        if (rubric.labels.empty()) malformed(line_no, "[[label.tag]] before any [[label]]");
        rubric.labels.back().tags.emplace_back();
        table = Table::Tag;
      } else {
        malformed(line_no, "unsupported table header '" + std::string(header) + "'");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) malformed(line_no, "expected key = \"value\"");
    std::string_view key = trim(line.substr(0, eq));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
    std::string_view value = trim(line.substr(eq + 1));
    if (value.empty() || (value.front() != '"' && value.front() != '\'')) {
      malformed(line_no, "value of '" + std::string(key) + "' must be a string");
    }
    std::string_view rest;
    std::string parsed = parse_string(value, line_no, rest);
    rest = trim(rest);
    if (!rest.empty() && rest.front() != '#') malformed(line_no, "trailing characters after value");

    if (table == Table::None) malformed(line_no, "key outside of a [[label]] table");
    if (table == Table::Label) {
      if (key != "name") malformed(line_no, "unknown label key '" + std::string(key) + "'");
      rubric.labels.back().name = std::move(parsed);
    } else {
      auto& tag = rubric.labels.back().tags.back();
      if (key == "name") {
        tag.name = std::move(parsed);
      } else if (key == "description") {
        tag.description = std::move(parsed);
      } else {
        malformed(line_no, "unknown tag key '" + std::string(key) + "'");
      }
    }
  }
  check_rubric(rubric);
  return rubric;
}

std::string rubric_to_toml(const Rubric& rubric) {
  std::string out;
  for (std::size_t i = 0; i < rubric.labels.size(); ++i) {
    const auto& l = rubric.labels[i];
    if (i > 0) out += '\n';
    out += "[[label]]\nname = \"" + escape(l.name) + "\"\n";
    for (const auto& t : l.tags) {
      out += "\n[[label.tag]]\nname = \"" + escape(t.name) + "\"\ndescription = \"" +
             escape(t.description) + "\"\n";
    }
  }
  return out;
}

// --- applications ----------------------------------------------------------

std::string application_to_json_line(const LabelApplication& a) {
  ojson j;
  j["application_id"] = a.application_id;
  j["annotator_id"] = a.annotator_id;
  j["match_id"] = a.match_id;
  j["player_id"] = a.player_id;
  j["start_s"] = a.start_s;
  j["end_s"] = a.end_s;
  j["label"] = a.label;
  j["tag"] = a.tag;
  return j.dump();
}

namespace {

LabelApplication application_from_json(const ojson& j, std::size_t line) {
  auto str = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) malformed(line, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
  };
  auto num = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) malformed(line, std::string("field '") + key + "' must be a number");
    return it->get<double>();
  };
  LabelApplication a;
  a.application_id = j.contains("application_id") ? str("application_id") : std::string();
  a.annotator_id = str("annotator_id");
  a.match_id = str("match_id");
  a.player_id = str("player_id");
  a.start_s = num("start_s");
  a.end_s = num("end_s");
  a.label = str("label");
  a.tag = str("tag");
  return a;
}

}  // namespace

std::vector<LabelApplication> parse_applications(std::string_view text) {
  std::vector<LabelApplication> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
      malformed(line_no, e.what());
    }
    if (!j.is_object()) malformed(line_no, "expected a JSON object");
    out.push_back(application_from_json(j, line_no));
  }
  return out;
}

LabelApplication parse_application(std::string_view json_text) {
  ojson j;
  try {
    j = ojson::parse(json_text);
  } catch (const ojson::parse_error& e) {
    malformed(1, e.what());
  }
  if (!j.is_object()) malformed(1, "expected a JSON object");
  return application_from_json(j, 1);
}

std::string serialize_applications(std::span<const LabelApplication> apps) {
  std::string out;
  for (const auto& a : apps) {
    out += application_to_json_line(a);
    out += '\n';
  }
  return out;
}

AnnotationSet make_set(std::string annotator_id, std::vector<LabelApplication> apps) {
  for (const auto& a : apps) {
    if (a.annotator_id != annotator_id) {
      throw Error(ErrorCode::InvalidArgument, "application '" + a.application_id + "' belongs to annotator '" +
                                                  a.annotator_id + "', not '" + annotator_id + "'");
    }
  }
  return AnnotationSet{std::move(annotator_id), std::move(apps)};
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::UnknownLabelTag: return "UnknownLabelTag";
    case ViolationKind::InvertedInterval: return "InvertedInterval";
    case ViolationKind::Overlap: return "Overlap";
    case ViolationKind::AnnotatorMismatch: return "AnnotatorMismatch";
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::UnknownMatch: return "UnknownMatch";
    case ViolationKind::UnknownPlayer: return "UnknownPlayer";
  }
  return "?";
}

std::optional<ApplicationViolation> validate_application(const Rubric& rubric,
                                                         const AnnotationSet& existing,
                                                         const LabelApplication& app) {
  if (!rubric.contains(app.label, app.tag)) {
    return ApplicationViolation{ViolationKind::UnknownLabelTag, {},
                                "(" + app.label + ", " + app.tag + ") is not in the rubric"};
  }
  if (!std::isfinite(app.start_s) || !std::isfinite(app.end_s) || app.start_s < 0.0 ||
      !(app.start_s < app.end_s)) {
    return ApplicationViolation{ViolationKind::InvertedInterval, {},
                                "interval must satisfy 0 <= start_s < end_s"};
  }
  if (!existing.annotator_id.empty() && app.annotator_id != existing.annotator_id) {
    return ApplicationViolation{ViolationKind::AnnotatorMismatch, {},
                                "application annotator differs from the set's annotator"};
  }
  for (const auto& other : existing.applications) {
    if (!app.application_id.empty() && other.application_id == app.application_id) {
      return ApplicationViolation{ViolationKind::DuplicateId, other.application_id,
                                  "application id already used"};
    }
    if (other.match_id != app.match_id || other.player_id != app.player_id) continue;
    if (app.start_s < other.end_s && other.start_s < app.end_s) {
      return ApplicationViolation{ViolationKind::Overlap, other.application_id,
                                  "overlaps application '" + other.application_id + "'"};
    }
  }
  return std::nullopt;
}

std::vector<ApplicationViolation> audit(const Rubric& rubric, const AnnotationSet& set) {
  std::vector<ApplicationViolation> out;
  AnnotationSet seen{set.annotator_id, {}};
  for (const auto& app : set.applications) {
    if (auto v = validate_application(rubric, seen, app)) out.push_back(*v);
    seen.applications.push_back(app);
  }
  return out;
}

// --- agreement -------------------------------------------------------------

std::vector<std::string> discretize(const AnnotationSet& set, std::string_view match_id,
                                    std::string_view player_id, Horizon horizon, double window_s) {
  if (!(window_s > 0.0) || !std::isfinite(window_s)) {
    throw Error(ErrorCode::InvalidArgument, "window_s must be > 0");
  }
  std::vector<const LabelApplication*> mine;
  for (const auto& a : set.applications) {
    if (a.match_id == match_id && a.player_id == player_id) mine.push_back(&a);
  }
  std::stable_sort(mine.begin(), mine.end(), [](const auto* x, const auto* y) { return x->start_s < y->start_s; });

  std::vector<std::string> out;
  const double span = horizon.end_s - horizon.start_s;
  if (!(span > 0.0)) return out;
  const auto windows = static_cast<std::size_t>(std::ceil(span / window_s - 1e-9));
  out.reserve(windows);
  for (std::size_t w = 0; w < windows; ++w) {
    const double lo = horizon.start_s + static_cast<double>(w) * window_s;
    const double hi = std::min(lo + window_s, horizon.end_s);
    const double mid = 0.5 * (lo + hi);
    std::string category(kNoCategory);
    for (const auto* a : mine) {
      if (a->covers(mid)) {
        category = a->category();
        break;
      }
    }
    out.push_back(std::move(category));
  }
  return out;
}

ConfusionTable confusion_table(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "rating vectors differ in length (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw Error(ErrorCode::Empty, "rating vectors are empty");
  std::set<std::string> cats(a.begin(), a.end());
  cats.insert(b.begin(), b.end());
  ConfusionTable t;
  t.categories.assign(cats.begin(), cats.end());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < t.categories.size(); ++i) index.emplace(t.categories[i], i);
  const std::size_t k = t.categories.size();
  t.counts.assign(k * k, 0);
  for (std::size_t i = 0; i < a.size(); ++i) ++t.counts[index[a[i]] * k + index[b[i]]];
  t.total = a.size();
  return t;
}

KappaResult ConfusionTable::kappa() const {
  const std::size_t k = categories.size();
  if (total == 0) throw Error(ErrorCode::Empty, "confusion table is empty");
  // Integer sums keep the result independent of category order.
  std::uint64_t agree = 0;
  std::uint64_t chance = 0;  // sum over categories of row_total * col_total
  for (std::size_t c = 0; c < k; ++c) {
    agree += at(c, c);
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (std::size_t x = 0; x < k; ++x) {
      row += at(c, x);
      col += at(x, c);
    }
    chance += row * col;
  }
  const auto n = static_cast<std::uint64_t>(total);
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  KappaResult r;
  r.observed = static_cast<double>(agree) / static_cast<double>(n);
  r.expected = static_cast<double>(chance) / n2;
  if (chance == n * n) {
    r.degenerate = true;
    r.kappa = agree == n ? 1.0 : 0.0;
    return r;
  }
  // (p_o - p_e) / (1 - p_e) with both scaled by n^2.
  const double num = static_cast<double>(agree) * static_cast<double>(n) - static_cast<double>(chance);
  const double den = n2 - static_cast<double>(chance);
  r.kappa = num / den;
  return r;
}

KappaResult cohen_kappa_detail(std::span<const std::string> a, std::span<const std::string> b) {
  return confusion_table(a, b).kappa();
}

double cohen_kappa(std::span<const std::string> a, std::span<const std::string> b) {
  return cohen_kappa_detail(a, b).kappa;
}

KappaReport irr_report(const AnnotationSet& a, const AnnotationSet& b,
                       std::span<const MatchHorizon> matches, double window_s, const Rubric& rubric) {
  for (const auto* set : {&a, &b}) {
    for (const auto& app : set->applications) {
      if (rubric.find(app.label) == nullptr) {
        throw Error(ErrorCode::UnknownLabel, "label '" + app.label + "' is not in the rubric");
      }
      const auto m = std::find_if(matches.begin(), matches.end(),
                                  [&](const MatchHorizon& h) { return h.match_id == app.match_id; });
      if (m == matches.end()) {
        throw Error(ErrorCode::NotFound, "application '" + app.application_id + "' references unknown match '" +
                                             app.match_id + "'");
      }
      if (std::find(m->player_ids.begin(), m->player_ids.end(), app.player_id) == m->player_ids.end()) {
        throw Error(ErrorCode::NotFound, "application '" + app.application_id + "' references unknown player '" +
                                             app.player_id + "'");
      }
    }
  }

  std::vector<std::string> ra;
  std::vector<std::string> rb;
  for (const auto& m : matches) {
    for (const auto& player : m.player_ids) {
      auto wa = discretize(a, m.match_id, player, Horizon{0.0, m.end_s}, window_s);
      auto wb = discretize(b, m.match_id, player, Horizon{0.0, m.end_s}, window_s);
      std::move(wa.begin(), wa.end(), std::back_inserter(ra));
      std::move(wb.begin(), wb.end(), std::back_inserter(rb));
    }
  }

  KappaReport report;
  report.window_s = window_s;
  report.n_windows = ra.size();
  report.confusion = confusion_table(ra, rb);
  report.overall = report.confusion.kappa();

  auto label_of = [](const std::string& category) {
    const auto slash = category.find('/');
    return slash == std::string::npos ? std::string() : category.substr(0, slash);
  };
  for (const auto& label : rubric.labels) {
    std::vector<std::string> ba;
    std::vector<std::string> bb;
    ba.reserve(ra.size());
    bb.reserve(rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
      ba.emplace_back(label_of(ra[i]) == label.name ? "1" : "0");
      bb.emplace_back(label_of(rb[i]) == label.name ? "1" : "0");
    }
    report.per_label[label.name] = cohen_kappa_detail(ba, bb);
  }
  return report;
}

}  // namespace seqlab::annotation
