#include "seqlab/abstraction.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>

#include "seqlab/error.hpp"

namespace seqlab::abstraction {

using telemetry::TickTable;

namespace {

constexpr std::array<std::string_view, kStateCount> kStateNames{
    "solo",     "fight",           "kill_hero",         "teaming",    "death",
    "harassed", "fight_diminishes", "fight_intensifies", "team_fight", "full_team_assembly"};

}  // namespace

std::string_view to_string(BehaviorState state) { return kStateNames[index_of(state)]; }

std::optional<BehaviorState> state_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kStateCount; ++i) {
    if (kStateNames[i] == name) return kAllStates[i];
  }
  return std::nullopt;
}

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::Died: return "died";
    case Rule::Killed: return "killed";
    case Rule::TeamFight: return "team_fight";
    case Rule::FightIntensifies: return "fight_intensifies";
    case Rule::FightDiminishes: return "fight_diminishes";
    case Rule::Harassed: return "harassed";
    case Rule::Fight: return "fight";
    case Rule::FullTeamAssembly: return "full_team_assembly";
    case Rule::Teaming: return "teaming";
    case Rule::Solo: return "solo";
  }
  return "?";
}

BehaviorState state_of(Rule rule) {
  switch (rule) {
    case Rule::Died: return BehaviorState::Death;
    case Rule::Killed: return BehaviorState::KillHero;
    case Rule::TeamFight: return BehaviorState::TeamFight;
    case Rule::FightIntensifies: return BehaviorState::FightIntensifies;
    case Rule::FightDiminishes: return BehaviorState::FightDiminishes;
    case Rule::Harassed: return BehaviorState::Harassed;
    case Rule::Fight: return BehaviorState::Fight;
    case Rule::FullTeamAssembly: return BehaviorState::FullTeamAssembly;
    case Rule::Teaming: return BehaviorState::Teaming;
    case Rule::Solo: return BehaviorState::Solo;
  }
  return BehaviorState::Solo;
}

std::vector<Rule> default_precedence() {
  return {Rule::Died,     Rule::Killed, Rule::TeamFight,        Rule::FightIntensifies,
          Rule::FightDiminishes, Rule::Harassed, Rule::Fight, Rule::FullTeamAssembly,
          Rule::Teaming,  Rule::Solo};
}

bool rule_matches(Rule rule, const TickContext& c) {
  switch (rule) {
    case Rule::Died: return c.died;
    case Rule::Killed: return c.killed;
    case Rule::TeamFight: return c.allies >= 2 && c.enemies >= 2;
    case Rule::FightIntensifies: return c.enemies >= 1 && c.prev_enemies >= 1 && c.enemies > c.prev_enemies;
    case Rule::FightDiminishes: return c.enemies >= 1 && c.enemies < c.prev_enemies;
    case Rule::Harassed: return c.enemies >= 2;
    case Rule::Fight: return c.enemies == 1;
    case Rule::FullTeamAssembly: return c.allies >= c.team_size - 1;
    case Rule::Teaming: return c.allies >= 1;
    case Rule::Solo: return true;
  }
  return false;
}

Rule first_matching_rule(const TickContext& ctx, std::span<const Rule> precedence) {
  for (Rule r : precedence) {
    if (rule_matches(r, ctx)) return r;
  }
  throw Error(ErrorCode::InvalidConfig, "no precedence rule matched; the list must contain solo");
}

void check_config(const ProximityConfig& cfg) {
  if (!(cfg.radius > 0.0) || !std::isfinite(cfg.radius)) {
    throw Error(ErrorCode::InvalidConfig, "radius must be > 0");
  }
  if (!(cfg.tick_interval_s > 0.0) || !std::isfinite(cfg.tick_interval_s)) {
    throw Error(ErrorCode::InvalidConfig, "tick interval must be > 0");
  }
  std::bitset<kRuleCount> seen;
  for (Rule r : cfg.precedence) seen.set(static_cast<std::size_t>(r));
  if (cfg.precedence.size() != kRuleCount || !seen.all()) {
    throw Error(ErrorCode::InvalidConfig, "precedence must list each of the ten rules once");
  }
}

ProximityCounts proximity_counts(const TickTable& table, std::size_t player, std::size_t tick,
                                 double radius) {
  const auto& self = table.position(player, tick);
  if (!self) {
    throw Error(ErrorCode::PlayerAbsent,
                "player '" + table.player_ids[player] + "' is absent at tick " + std::to_string(tick),
                tick);
  }
  const double r2 = radius * radius;
  ProximityCounts counts;
  for (std::size_t other = 0; other < table.player_count(); ++other) {
    if (other == player) continue;
    const auto& pos = table.position(other, tick);
    if (!pos) continue;
    const double dx = pos->x - self->x;
    const double dy = pos->y - self->y;
    if (dx * dx + dy * dy > r2) continue;
    (table.teams[other] == table.teams[player] ? counts.allies : counts.enemies) += 1;
  }
  return counts;
}

std::vector<StateSequence> abstract_table(const TickTable& table, std::string_view match_id,
                                          const ProximityConfig& cfg) {
  check_config(cfg);
  std::vector<int> team_size(2, 0);
  for (auto t : table.teams) team_size[static_cast<std::size_t>(t)] += 1;

  std::vector<StateSequence> out;
  out.reserve(table.player_count());
  for (std::size_t p = 0; p < table.player_count(); ++p) {
    StateSequence seq;
    seq.match_id = std::string(match_id);
    seq.player_id = table.player_ids[p];
    int prev_enemies = 0;
    for (std::size_t k = 0; k < table.tick_count; ++k) {
      if (!table.position(p, k)) continue;
      const auto counts = proximity_counts(table, p, k, cfg.radius);
      TickContext ctx;
      ctx.allies = counts.allies;
      ctx.enemies = counts.enemies;
      ctx.prev_enemies = prev_enemies;
      ctx.killed = (table.flag(p, k) & telemetry::kKilled) != 0;
      ctx.died = (table.flag(p, k) & telemetry::kDied) != 0;
      ctx.team_size = team_size[static_cast<std::size_t>(table.teams[p])];
      const Rule rule = first_matching_rule(ctx, cfg.precedence);
      seq.entries.push_back(StateEntry{table.tick_time(k), state_of(rule)});
      prev_enemies = counts.enemies;
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<StateSequence> abstract_match(const telemetry::MatchLog& match,
                                          const ProximityConfig& cfg) {
  check_config(cfg);
  const auto table = telemetry::resample_positions(match, cfg.tick_interval_s);
  return abstract_table(table, match.match_id, cfg);
}

StateSequence abstract_player(const telemetry::MatchLog& match, std::string_view player_id,
                              const ProximityConfig& cfg) {
  const auto index = match.player_index(player_id);
  if (!index) {
    throw Error(ErrorCode::UnknownPlayer, "player '" + std::string(player_id) + "' not in match");
  }
  auto all = abstract_match(match, cfg);
  return std::move(all[*index]);
}

std::vector<BehaviorState> DssSequence::pattern() const {
  std::vector<BehaviorState> out;
  out.reserve(runs.size());
  for (const auto& r : runs) out.push_back(r.state);
  return out;
}

DssSequence compress_dss(const StateSequence& seq) {
  DssSequence dss;
  dss.match_id = seq.match_id;
  dss.player_id = seq.player_id;
  dss.entry_times.reserve(seq.entries.size());
  for (const auto& e : seq.entries) {
    dss.entry_times.push_back(e.time_s);
    if (!dss.runs.empty() && dss.runs.back().state == e.state) {
      ++dss.runs.back().length;
    } else {
      dss.runs.push_back(DssRun{e.state, 1, e.time_s});
    }
  }
  return dss;
}

StateSequence expand_dss(const DssSequence& dss) {
  StateSequence seq;
  seq.match_id = dss.match_id;
  seq.player_id = dss.player_id;
  seq.entries.reserve(dss.entry_times.size());
  std::size_t i = 0;
  for (const auto& run : dss.runs) {
    for (std::size_t n = 0; n < run.length && i < dss.entry_times.size(); ++n, ++i) {
      seq.entries.push_back(StateEntry{dss.entry_times[i], run.state});
    }
  }
  return seq;
}

}  // namespace seqlab::abstraction
