#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seqlab::telemetry {

enum class Team : std::uint8_t { Radiant, Dire };
enum class Role : std::uint8_t { Carry, Support, Initiator, Other };

std::string_view to_string(Team team);
std::string_view to_string(Role role);
std::optional<Team> team_from_string(std::string_view s);
std::optional<Role> role_from_string(std::string_view s);

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

struct MapBounds {
  Position min;
  Position max;

  bool contains(const Position& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  friend bool operator==(const MapBounds&, const MapBounds&) = default;
};

struct PlayerInfo {
  std::string player_id;
  Team team = Team::Radiant;
  std::string hero_name;
  Role role = Role::Other;

  friend bool operator==(const PlayerInfo&, const PlayerInfo&) = default;
};

enum class EventKind : std::uint8_t { PositionSample, Kill, Death, TowerFall, MatchEnd };

std::string_view to_string(EventKind kind);

// Fields not meaningful for a given kind keep their defaults.
struct Event {
  double time_s = 0.0;
  EventKind kind = EventKind::PositionSample;
  std::string actor;   // PositionSample, Kill, Death
  std::string victim;  // Kill
  Position position;   // PositionSample
  int tower_tier = 0;  // TowerFall
  Team tower_team = Team::Radiant;

  static Event sample(double t, std::string player, Position p);
  static Event kill(double t, std::string killer, std::string victim);
  static Event death(double t, std::string player);
  static Event tower(double t, int tier, Team team);
  static Event end(double t);

  friend bool operator==(const Event&, const Event&) = default;
};

struct MatchLog {
  std::string match_id;
  MapBounds map_bounds;
  double tick_interval_s = 1.0;
  std::vector<PlayerInfo> players;
  std::vector<Event> events;

  // Time of the MatchEnd event, or of the last event when none exists.
  double match_end_s() const;
  std::optional<std::size_t> player_index(std::string_view player_id) const;

  friend bool operator==(const MatchLog&, const MatchLog&) = default;
};

inline constexpr int kPlayersPerTeam = 5;

// --- line-delimited format -------------------------------------------------

// Parses and validates. Throws seqlab::Error with MalformedLine (index = 1-based
// line), SchemaViolation, UnsortedEvents (index = event index) or UnknownPlayer.
MatchLog parse_match_log(std::string_view raw);

// Canonical form: fixed key order, shortest round-trip float formatting, one
// object per line, trailing newline.
std::string serialize_match_log(const MatchLog& match);

// --- validation ------------------------------------------------------------

enum class ViolationKind : std::uint8_t {
  DuplicatePlayerId,
  TeamSize,
  BadTickInterval,
  BadBounds,
  NonFiniteValue,
  NegativeTime,
  UnsortedEvents,
  UnknownPlayer,
  KillWithoutDeath,
  SelfKill,
  BadTowerTier,
  OutOfBounds,
  OffTickGrid,
  MatchEndCount,
  MatchEndNotLast,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::size_t index = 0;  // event index, or player index for header checks
  std::string detail;
};

std::vector<Violation> validate(const MatchLog& match);

// --- synthetic generation --------------------------------------------------

// Relative weights of the episode scenarios drawn during one game phase.
struct PhaseMix {
  double split = 1.0;      // everyone farms alone along their lane
  double group = 1.0;      // each team gathers at its own rally point
  double skirmish = 1.0;   // a few players per team meet at a contested point
  double teamfight = 0.5;  // all living players converge on one point
  double kill_rate = 0.02; // per-tick kill chance for an engaged pair
  double respawn_s = 20.0;
};

struct SynthConfig {
  std::string match_id = "synth";
  double tick_interval_s = 1.0;
  int sample_every_ticks = 1;
  MapBounds map_bounds{{0.0, 0.0}, {1024.0, 1024.0}};
  double tier1_fall_s = 540.0;
  double tier2_fall_s = 900.0;
  double tier3_fall_s = 1260.0;
  double match_end_s = 1620.0;
  double schedule_jitter_s = 60.0;
  bool surrender_before_late = false;
  double move_speed = 20.0;
  double min_episode_s = 20.0;
  double max_episode_s = 50.0;
  std::array<PhaseMix, 3> phases{
      PhaseMix{3.0, 1.0, 1.5, 0.2, 0.02, 10.0},
      PhaseMix{2.0, 2.0, 1.5, 0.8, 0.02, 20.0},
      PhaseMix{1.0, 2.0, 1.0, 1.5, 0.02, 35.0},
  };
};

// Deterministic for a fixed (config, seed) on every platform: uses raw
// mt19937_64 output only. Throws Error(InvalidConfig).
MatchLog generate_synthetic_match(const SynthConfig& config, std::uint64_t seed);

// --- resampling ------------------------------------------------------------

enum TickFlag : std::uint8_t {
  kNoFlag = 0,
  kKilled = 1 << 0,
  kDied = 1 << 1,
};

struct TickTable {
  double interval_s = 1.0;
  std::size_t tick_count = 0;
  std::vector<std::string> player_ids;
  std::vector<Team> teams;
  // Row-major by player: index = player * tick_count + tick.
  std::vector<std::optional<Position>> positions;
  std::vector<std::uint8_t> flags;

  double tick_time(std::size_t tick) const {
    return static_cast<double>(tick) * interval_s;
  }
  std::size_t player_count() const { return player_ids.size(); }
  const std::optional<Position>& position(std::size_t player, std::size_t tick) const {
    return positions[player * tick_count + tick];
  }
  std::uint8_t flag(std::size_t player, std::size_t tick) const {
    return flags[player * tick_count + tick];
  }

  friend bool operator==(const TickTable&, const TickTable&) = default;
};

// Index of the grid tick whose interval [k*dt, (k+1)*dt) contains t.
std::size_t tick_of(double time_s, double interval_s);

// Last-observation-carried-forward positions on a uniform grid; players are
// Absent before their first sample and between a Death and their next sample.
// Throws Error(NoPositions) for a player that is never sampled.
TickTable resample_positions(const MatchLog& match, double interval_s);

}  // namespace seqlab::telemetry
