#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqlab/telemetry.hpp"

namespace seqlab::abstraction {

enum class BehaviorState : std::uint8_t {
  Solo,
  Fight,
  KillHero,
  Teaming,
  Death,
  Harassed,
  FightDiminishes,
  FightIntensifies,
  TeamFight,
  FullTeamAssembly,
};

inline constexpr std::size_t kStateCount = 10;

inline constexpr std::array<BehaviorState, kStateCount> kAllStates{
    BehaviorState::Solo,     BehaviorState::Fight,           BehaviorState::KillHero,
    BehaviorState::Teaming,  BehaviorState::Death,           BehaviorState::Harassed,
    BehaviorState::FightDiminishes, BehaviorState::FightIntensifies,
    BehaviorState::TeamFight, BehaviorState::FullTeamAssembly};

constexpr std::size_t index_of(BehaviorState s) { return static_cast<std::size_t>(s); }

// snake_case wire names: "solo", "kill_hero", "full_team_assembly", ...
std::string_view to_string(BehaviorState state);
std::optional<BehaviorState> state_from_string(std::string_view name);

// One rule per state; a precedence list orders them and the first rule whose
// condition holds assigns the tick's state.
enum class Rule : std::uint8_t {
  Died,
  Killed,
  TeamFight,
  FightIntensifies,
  FightDiminishes,
  Harassed,
  Fight,
  FullTeamAssembly,
  Teaming,
  Solo,
};

inline constexpr std::size_t kRuleCount = 10;

std::string_view to_string(Rule rule);
BehaviorState state_of(Rule rule);

// Died, Killed, TeamFight, FightIntensifies, FightDiminishes, Harassed, Fight,
// FullTeamAssembly, Teaming, Solo.
std::vector<Rule> default_precedence();

struct TickContext {
  int allies = 0;          // teammates within radius
  int enemies = 0;         // opponents within radius
  int prev_enemies = 0;    // enemies at the previous present tick (0 at the first)
  bool killed = false;
  bool died = false;
  int team_size = telemetry::kPlayersPerTeam;
};

bool rule_matches(Rule rule, const TickContext& ctx);

// Returns the first matching rule. Throws Error(InvalidConfig) if none
// matches, which only happens for a precedence list without Solo.
Rule first_matching_rule(const TickContext& ctx, std::span<const Rule> precedence);

struct ProximityConfig {
  double radius = 81.92;
  double tick_interval_s = 1.0;
  std::vector<Rule> precedence = default_precedence();
};

// Throws Error(InvalidConfig) unless radius > 0, tick > 0 and precedence is a
// permutation of all ten rules.
void check_config(const ProximityConfig& cfg);

struct ProximityCounts {
  int allies = 0;
  int enemies = 0;

  friend bool operator==(const ProximityCounts&, const ProximityCounts&) = default;
};

// Counts present players other than `player` with Euclidean distance <= radius.
// Throws Error(PlayerAbsent) if `player` is Absent at `tick`.
ProximityCounts proximity_counts(const telemetry::TickTable& table, std::size_t player,
                                 std::size_t tick, double radius);

struct StateEntry {
  double time_s = 0.0;
  BehaviorState state = BehaviorState::Solo;

  friend bool operator==(const StateEntry&, const StateEntry&) = default;
};

struct StateSequence {
  std::string match_id;
  std::string player_id;
  std::vector<StateEntry> entries;

  friend bool operator==(const StateSequence&, const StateSequence&) = default;
};

StateSequence abstract_player(const telemetry::MatchLog& match, std::string_view player_id,
                              const ProximityConfig& cfg = {});
std::vector<StateSequence> abstract_match(const telemetry::MatchLog& match,
                                          const ProximityConfig& cfg = {});
// Abstraction over an already resampled table (grid spacing taken from it).
std::vector<StateSequence> abstract_table(const telemetry::TickTable& table,
                                          std::string_view match_id,
                                          const ProximityConfig& cfg = {});

struct DssRun {
  BehaviorState state = BehaviorState::Solo;
  std::size_t length = 0;
  double start_s = 0.0;

  friend bool operator==(const DssRun&, const DssRun&) = default;
};

// Run-length view of a StateSequence. entry_times keeps the source tick times
// so that expansion is exact across Absent gaps.
struct DssSequence {
  std::string match_id;
  std::string player_id;
  std::vector<DssRun> runs;
  std::vector<double> entry_times;

  std::vector<BehaviorState> pattern() const;
  std::size_t tick_length() const { return entry_times.size(); }

  friend bool operator==(const DssSequence&, const DssSequence&) = default;
};

DssSequence compress_dss(const StateSequence& seq);
StateSequence expand_dss(const DssSequence& dss);

}  // namespace seqlab::abstraction
