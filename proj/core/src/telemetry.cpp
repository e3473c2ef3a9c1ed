#include "seqlab/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include <nlohmann/json.hpp>

#include "seqlab/error.hpp"
#include "seqlab/json_io.hpp"

namespace seqlab::telemetry {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Team team) {
  return team == Team::Radiant ? "radiant" : "dire";
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Carry: return "carry";
    case Role::Support: return "support";
    case Role::Initiator: return "initiator";
    case Role::Other: return "other";
  }
  return "other";
}

std::optional<Team> team_from_string(std::string_view s) {
  if (s == "radiant") return Team::Radiant;
  if (s == "dire") return Team::Dire;
  return std::nullopt;
}

std::optional<Role> role_from_string(std::string_view s) {
  if (s == "carry") return Role::Carry;
  if (s == "support") return Role::Support;
  if (s == "initiator") return Role::Initiator;
  if (s == "other") return Role::Other;
  return std::nullopt;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::PositionSample: return "pos";
    case EventKind::Kill: return "kill";
    case EventKind::Death: return "death";
    case EventKind::TowerFall: return "tower";
    case EventKind::MatchEnd: return "end";
  }
  return "?";
}

Event Event::sample(double t, std::string player, Position p) {
  Event e;
  e.time_s = t;
  e.kind = EventKind::PositionSample;
  e.actor = std::move(player);
  e.position = p;
  return e;
}

Event Event::kill(double t, std::string killer, std::string victim) {
  Event e;
  e.time_s = t;
  e.kind = EventKind::Kill;
  e.actor = std::move(killer);
  e.victim = std::move(victim);
  return e;
}

Event Event::death(double t, std::string player) {
  Event e;
  e.time_s = t;
  e.kind = EventKind::Death;
  e.actor = std::move(player);
  return e;
}

Event Event::tower(double t, int tier, Team team) {
  Event e;
  e.time_s = t;
  e.kind = EventKind::TowerFall;
  e.tower_tier = tier;
  e.tower_team = team;
  return e;
}

Event Event::end(double t) {
  Event e;
  e.time_s = t;
  e.kind = EventKind::MatchEnd;
  return e;
}

double MatchLog::match_end_s() const {
  for (auto it = events.rbegin(); it != events.rend(); ++it) {
    if (it->kind == EventKind::MatchEnd) return it->time_s;
  }
  return events.empty() ? 0.0 : events.back().time_s;
}

std::optional<std::size_t> MatchLog::player_index(std::string_view player_id) const {
  for (std::size_t i = 0; i < players.size(); ++i) {
    if (players[i].player_id == player_id) return i;
  }
  return std::nullopt;
}

// --- parsing ---------------------------------------------------------------

namespace {

class LineReader {
 public:
  LineReader(const ojson& obj, std::size_t line_no) : obj_(obj), line_no_(line_no) {}

  void expect_keys(std::initializer_list<std::string_view> keys) const {
    for (const auto& [key, value] : obj_.items()) {
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        fail(key, "unexpected field");
      }
    }
  }

  const ojson& field(std::string_view key) const {
    auto it = obj_.find(std::string(key));
    if (it == obj_.end()) fail(key, "missing field");
    return *it;
  }

  double number(std::string_view key) const {
    const auto& v = field(key);
    if (!v.is_number()) fail(key, "expected number");
    return v.get<double>();
  }

  int integer(std::string_view key) const {
    const auto& v = field(key);
    if (!v.is_number_integer()) fail(key, "expected integer");
    return v.get<int>();
  }

  std::string string(std::string_view key) const {
    const auto& v = field(key);
    if (!v.is_string()) fail(key, "expected string");
    return v.get<std::string>();
  }

  Team team(std::string_view key) const {
    auto t = team_from_string(string(key));
    if (!t) fail(key, "expected \"radiant\" or \"dire\"");
    return *t;
  }

  [[noreturn]] void fail(std::string_view key, std::string_view what) const {
    throw Error(ErrorCode::SchemaViolation,
                "line " + std::to_string(line_no_) + ": field '" + std::string(key) +
                    "': " + std::string(what),
                line_no_);
  }

 private:
  const ojson& obj_;
  std::size_t line_no_;
};

void parse_header(const ojson& obj, std::size_t line_no, MatchLog& match) {
  LineReader r(obj, line_no);
  r.expect_keys({"type", "match_id", "tick_interval_s", "map_bounds", "players"});
  if (r.string("type") != "header") r.fail("type", "first line must be the header");
  match.match_id = r.string("match_id");
  match.tick_interval_s = r.number("tick_interval_s");

  const auto& bounds = r.field("map_bounds");
  if (!bounds.is_object()) r.fail("map_bounds", "expected object");
  LineReader b(bounds, line_no);
  b.expect_keys({"min_x", "min_y", "max_x", "max_y"});
  match.map_bounds = MapBounds{{b.number("min_x"), b.number("min_y")},
                               {b.number("max_x"), b.number("max_y")}};

  const auto& players = r.field("players");
  if (!players.is_array()) r.fail("players", "expected array");
  for (const auto& p : players) {
    if (!p.is_object()) r.fail("players", "expected array of objects");
    LineReader pr(p, line_no);
    pr.expect_keys({"player_id", "team", "hero_name", "role"});
    PlayerInfo info;
    info.player_id = pr.string("player_id");
    info.team = pr.team("team");
    info.hero_name = pr.string("hero_name");
    auto role = role_from_string(pr.string("role"));
    if (!role) pr.fail("role", "expected carry|support|initiator|other");
    info.role = *role;
    match.players.push_back(std::move(info));
  }
}

Event parse_event(const ojson& obj, std::size_t line_no) {
  LineReader r(obj, line_no);
  const std::string type = r.string("type");
  if (type == "pos") {
    r.expect_keys({"type", "t", "p", "x", "y"});
    return Event::sample(r.number("t"), r.string("p"), {r.number("x"), r.number("y")});
  }
  if (type == "kill") {
    r.expect_keys({"type", "t", "actor", "victim"});
    return Event::kill(r.number("t"), r.string("actor"), r.string("victim"));
  }
  if (type == "death") {
    r.expect_keys({"type", "t", "p"});
    return Event::death(r.number("t"), r.string("p"));
  }
  if (type == "tower") {
    r.expect_keys({"type", "t", "tier", "team"});
    return Event::tower(r.number("t"), r.integer("tier"), r.team("team"));
  }
  if (type == "end") {
    r.expect_keys({"type", "t"});
    return Event::end(r.number("t"));
  }
  r.fail("type", "unknown event type '" + type + "'");
}

}  // namespace

MatchLog parse_match_log(std::string_view raw) {
  MatchLog match;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    std::size_t nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    std::string_view line = raw.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    ojson obj;
    try {
      obj = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
      throw Error(ErrorCode::MalformedLine,
                  "line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::MalformedLine,
                  "line " + std::to_string(line_no) + ": expected a JSON object", line_no);
    }
    if (!have_header) {
      parse_header(obj, line_no, match);
      have_header = true;
    } else {
      match.events.push_back(parse_event(obj, line_no));
    }
  }
  if (!have_header) {
    throw Error(ErrorCode::SchemaViolation, "missing header line", std::size_t{1});
  }

  const auto violations = validate(match);
  if (!violations.empty()) {
    const auto& v = violations.front();
    switch (v.kind) {
      case ViolationKind::UnsortedEvents:
        throw Error(ErrorCode::UnsortedEvents, v.detail, v.index);
      case ViolationKind::UnknownPlayer:
        throw Error(ErrorCode::UnknownPlayer, v.detail, v.index);
      default:
        throw Error(ErrorCode::SchemaViolation,
                    std::string(to_string(v.kind)) + ": " + v.detail, v.index);
    }
  }
  return match;
}

std::string serialize_match_log(const MatchLog& match) {
  std::string out = json_io::header_to_json(match).dump();
  out += '\n';
  for (const auto& e : match.events) {
    out += json_io::event_to_json(e).dump();
    out += '\n';
  }
  return out;
}

// --- validation ------------------------------------------------------------

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::DuplicatePlayerId: return "DuplicatePlayerId";
    case ViolationKind::TeamSize: return "TeamSize";
    case ViolationKind::BadTickInterval: return "BadTickInterval";
    case ViolationKind::BadBounds: return "BadBounds";
    case ViolationKind::NonFiniteValue: return "NonFiniteValue";
    case ViolationKind::NegativeTime: return "NegativeTime";
    case ViolationKind::UnsortedEvents: return "UnsortedEvents";
    case ViolationKind::UnknownPlayer: return "UnknownPlayer";
    case ViolationKind::KillWithoutDeath: return "KillWithoutDeath";
    case ViolationKind::SelfKill: return "SelfKill";
    case ViolationKind::BadTowerTier: return "BadTowerTier";
    case ViolationKind::OutOfBounds: return "OutOfBounds";
    case ViolationKind::OffTickGrid: return "OffTickGrid";
    case ViolationKind::MatchEndCount: return "MatchEndCount";
    case ViolationKind::MatchEndNotLast: return "MatchEndNotLast";
  }
  return "?";
}

namespace {

bool on_grid(double t, double interval) {
  const double k = t / interval;
  return std::abs(k - std::round(k)) <= 1e-6;
}

}  // namespace

std::vector<Violation> validate(const MatchLog& match) {
  std::vector<Violation> out;
  auto add = [&out](ViolationKind kind, std::size_t index, std::string detail) {
    out.push_back(Violation{kind, index, std::move(detail)});
  };

  const bool interval_ok = std::isfinite(match.tick_interval_s) && match.tick_interval_s > 0.0;
  if (!interval_ok) add(ViolationKind::BadTickInterval, 0, "tick_interval_s must be > 0");
  const auto& b = match.map_bounds;
  if (!(std::isfinite(b.min.x) && std::isfinite(b.min.y) && std::isfinite(b.max.x) &&
        std::isfinite(b.max.y) && b.min.x < b.max.x && b.min.y < b.max.y)) {
    add(ViolationKind::BadBounds, 0, "map_bounds must be finite with min < max");
  }

  std::unordered_set<std::string> ids;
  int radiant = 0;
  int dire = 0;
  for (std::size_t i = 0; i < match.players.size(); ++i) {
    const auto& p = match.players[i];
    if (!ids.insert(p.player_id).second) {
      add(ViolationKind::DuplicatePlayerId, i, "duplicate player_id '" + p.player_id + "'");
    }
    (p.team == Team::Radiant ? radiant : dire) += 1;
  }
  if (radiant != kPlayersPerTeam || dire != kPlayersPerTeam) {
    add(ViolationKind::TeamSize, 0,
        "expected 5 players per team, got " + std::to_string(radiant) + " radiant and " +
            std::to_string(dire) + " dire");
  }

  std::multiset<std::pair<std::string, double>> deaths;
  for (const auto& e : match.events) {
    if (e.kind == EventKind::Death) deaths.emplace(e.actor, e.time_s);
  }

  auto check_player = [&](const std::string& id, std::size_t i) {
    if (!ids.contains(id)) add(ViolationKind::UnknownPlayer, i, "unknown player '" + id + "'");
  };

  std::size_t end_count = 0;
  for (std::size_t i = 0; i < match.events.size(); ++i) {
    const auto& e = match.events[i];
    if (!std::isfinite(e.time_s)) {
      add(ViolationKind::NonFiniteValue, i, "non-finite time");
      continue;
    }
    if (e.time_s < 0.0) add(ViolationKind::NegativeTime, i, "negative time");
    if (i > 0 && e.time_s < match.events[i - 1].time_s) {
      add(ViolationKind::UnsortedEvents, i, "event " + std::to_string(i) + " precedes its predecessor");
    }
    switch (e.kind) {
      case EventKind::PositionSample:
        check_player(e.actor, i);
        if (!std::isfinite(e.position.x) || !std::isfinite(e.position.y)) {
          add(ViolationKind::NonFiniteValue, i, "non-finite position");
        } else if (!b.contains(e.position)) {
          add(ViolationKind::OutOfBounds, i, "position outside map bounds");
        }
        if (interval_ok && !on_grid(e.time_s, match.tick_interval_s)) {
          add(ViolationKind::OffTickGrid, i, "position sample off the declared tick grid");
        }
        break;
      case EventKind::Kill:
        check_player(e.actor, i);
        check_player(e.victim, i);
        if (e.actor == e.victim) add(ViolationKind::SelfKill, i, "kill with actor == victim");
        if (!deaths.contains({e.victim, e.time_s})) {
          add(ViolationKind::KillWithoutDeath, i, "kill of '" + e.victim + "' has no matching death");
        }
        break;
      case EventKind::Death:
        check_player(e.actor, i);
        break;
      case EventKind::TowerFall:
        if (e.tower_tier < 1 || e.tower_tier > 3) {
          add(ViolationKind::BadTowerTier, i, "tower tier must be 1..3");
        }
        break;
      case EventKind::MatchEnd:
        ++end_count;
        if (i + 1 != match.events.size()) {
          add(ViolationKind::MatchEndNotLast, i, "end event is not the last event");
        }
        break;
    }
  }
  if (end_count != 1) {
    add(ViolationKind::MatchEndCount, match.events.size(),
        "expected exactly one end event, got " + std::to_string(end_count));
  }
  return out;
}

// --- resampling ------------------------------------------------------------

std::size_t tick_of(double time_s, double interval_s) {
  const double k = std::floor(time_s / interval_s + 1e-9);
  return k <= 0.0 ? 0 : static_cast<std::size_t>(k);
}

TickTable resample_positions(const MatchLog& match, double interval_s) {
  if (!(interval_s > 0.0) || !std::isfinite(interval_s)) {
    throw Error(ErrorCode::InvalidArgument, "resample interval must be > 0");
  }
  TickTable table;
  table.interval_s = interval_s;
  table.tick_count = tick_of(match.match_end_s(), interval_s) + 1;
  const std::size_t n_players = match.players.size();
  for (const auto& p : match.players) {
    table.player_ids.push_back(p.player_id);
    table.teams.push_back(p.team);
  }
  table.positions.assign(n_players * table.tick_count, std::nullopt);
  table.flags.assign(n_players * table.tick_count, kNoFlag);

  struct Timeline {
    std::vector<std::pair<double, Position>> samples;
    std::vector<double> deaths;
  };
  std::vector<Timeline> timelines(n_players);
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < n_players; ++i) index.emplace(match.players[i].player_id, i);

  auto flag = [&](const std::string& id, double t, std::uint8_t f) {
    auto it = index.find(id);
    if (it == index.end()) return;
    const std::size_t tick = std::min(tick_of(t, interval_s), table.tick_count - 1);
    table.flags[it->second * table.tick_count + tick] |= f;
  };

  for (const auto& e : match.events) {
    switch (e.kind) {
      case EventKind::PositionSample:
        if (auto it = index.find(e.actor); it != index.end()) {
          timelines[it->second].samples.emplace_back(e.time_s, e.position);
        }
        break;
      case EventKind::Death:
        if (auto it = index.find(e.actor); it != index.end()) {
          timelines[it->second].deaths.push_back(e.time_s);
        }
        flag(e.actor, e.time_s, kDied);
        break;
      case EventKind::Kill:
        flag(e.actor, e.time_s, kKilled);
        break;
      default:
        break;
    }
  }

  constexpr double kEps = 1e-9;
  for (std::size_t p = 0; p < n_players; ++p) {
    const auto& tl = timelines[p];
    if (tl.samples.empty()) {
      throw Error(ErrorCode::NoPositions,
                  "player '" + match.players[p].player_id + "' has no position samples", p);
    }
    std::size_t next_sample = 0;
    std::size_t next_death = 0;
    const std::pair<double, Position>* last_sample = nullptr;
    std::optional<double> last_death;
    for (std::size_t k = 0; k < table.tick_count; ++k) {
      const double now = table.tick_time(k);
      while (next_sample < tl.samples.size() && tl.samples[next_sample].first <= now + kEps) {
        last_sample = &tl.samples[next_sample++];
      }
      // A death only removes the player from ticks after the one containing it.
      while (next_death < tl.deaths.size() && tick_of(tl.deaths[next_death], interval_s) < k) {
        last_death = tl.deaths[next_death++];
      }
      if (last_sample == nullptr) continue;
      if (last_death && *last_death >= last_sample->first) continue;
      table.positions[p * table.tick_count + k] = last_sample->second;
    }
  }
  return table;
}

}  // namespace seqlab::telemetry
