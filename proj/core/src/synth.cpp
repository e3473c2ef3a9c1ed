#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "seqlab/error.hpp"
#include "seqlab/telemetry.hpp"

namespace seqlab::telemetry {

namespace {

// mt19937_64 output is fully specified by the standard; the distributions in
// <random> are not, so draws are derived from raw output here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

// Dividing by an integral scale keeps printed values short (12.34, not
// 12.340000000000002).
double round_to(double v, double step) {
  const double scale = std::round(1.0 / step);
  if (scale >= 1.0) return std::round(v * scale) / scale;
  return std::round(v / step) * step;
}

enum class Scenario { Split, Group, Skirmish, Teamfight };

struct Agent {
  std::string id;
  Team team;
  Position pos;
  Position target;
  Position lane_spot;
  bool alive = true;
  std::size_t respawn_tick = 0;
  bool engaged = false;
};

void check_config(const SynthConfig& c) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!(c.tick_interval_s > 0.0)) bad("tick_interval_s must be > 0");
  if (c.sample_every_ticks < 1) bad("sample_every_ticks must be >= 1");
  if (!(c.map_bounds.min.x < c.map_bounds.max.x && c.map_bounds.min.y < c.map_bounds.max.y)) {
    bad("map_bounds must have min < max");
  }
  if (!(c.tier1_fall_s > 0.0 && c.tier1_fall_s < c.tier2_fall_s &&
        c.tier2_fall_s < c.tier3_fall_s && c.tier3_fall_s < c.match_end_s)) {
    bad("tower schedule must satisfy 0 < tier1 < tier2 < tier3 < end");
  }
  if (c.schedule_jitter_s < 0.0) bad("schedule_jitter_s must be >= 0");
  const double min_gap = std::min({c.tier1_fall_s, c.tier2_fall_s - c.tier1_fall_s,
                                   c.tier3_fall_s - c.tier2_fall_s, c.match_end_s - c.tier3_fall_s});
  if (2.0 * c.schedule_jitter_s >= min_gap) bad("schedule_jitter_s too large for the tower schedule");
  if (!(c.move_speed > 0.0)) bad("move_speed must be > 0");
  if (!(c.min_episode_s > 0.0 && c.min_episode_s <= c.max_episode_s)) {
    bad("episode bounds must satisfy 0 < min <= max");
  }
  for (const auto& ph : c.phases) {
    if (ph.split < 0 || ph.group < 0 || ph.skirmish < 0 || ph.teamfight < 0 ||
        ph.split + ph.group + ph.skirmish + ph.teamfight <= 0.0) {
      bad("phase mixture weights must be >= 0 with a positive sum");
    }
    if (ph.kill_rate < 0.0 || ph.kill_rate > 1.0) bad("kill_rate must be in [0,1]");
    if (ph.respawn_s < 0.0) bad("respawn_s must be >= 0");
  }
}

Scenario draw_scenario(Rng& rng, const PhaseMix& mix) {
  const double total = mix.split + mix.group + mix.skirmish + mix.teamfight;
  double u = rng.uniform() * total;
  if ((u -= mix.split) < 0.0) return Scenario::Split;
  if ((u -= mix.group) < 0.0) return Scenario::Group;
  if ((u -= mix.skirmish) < 0.0) return Scenario::Skirmish;
  return Scenario::Teamfight;
}

constexpr std::array<std::string_view, 10> kHeroes{
    "juggernaut", "crystal_maiden", "earthshaker", "sniper", "lion",
    "phantom_assassin", "witch_doctor", "tidehunter", "drow_ranger", "dazzle"};
constexpr std::array<Role, 5> kRoles{Role::Carry, Role::Support, Role::Initiator, Role::Carry,
                                     Role::Support};

}  // namespace

MatchLog generate_synthetic_match(const SynthConfig& config, std::uint64_t seed) {
  check_config(config);
  Rng rng(seed);
  const auto& bounds = config.map_bounds;
  const double width = bounds.max.x - bounds.min.x;
  const double height = bounds.max.y - bounds.min.y;
  auto at = [&](double fx, double fy) {
    return Position{bounds.min.x + fx * width, bounds.min.y + fy * height};
  };
  auto clamp = [&](Position p) {
    return Position{std::clamp(p.x, bounds.min.x, bounds.max.x),
                    std::clamp(p.y, bounds.min.y, bounds.max.y)};
  };

  MatchLog match;
  match.match_id = config.match_id;
  match.map_bounds = bounds;
  match.tick_interval_s = config.tick_interval_s;

  const double dt = config.tick_interval_s;
  auto jitter = [&] { return rng.uniform(-config.schedule_jitter_s, config.schedule_jitter_s); };
  const double tier1 = round_to(config.tier1_fall_s + jitter(), 0.1);
  const double tier2 = round_to(config.tier2_fall_s + jitter(), 0.1);
  const double tier3 = round_to(config.tier3_fall_s + jitter(), 0.1);
  double end_s = round_to(config.match_end_s + jitter(), dt);
  if (config.surrender_before_late) {
    end_s = round_to(tier2 + 0.5 * (tier3 - tier2), dt);
  }
  const std::size_t last_tick = tick_of(end_s, dt);

  const std::array<Position, 2> bases{at(0.08, 0.08), at(0.92, 0.92)};
  // Top, middle and bottom lane anchors per team, nearer their own side.
  const std::array<std::array<Position, 3>, 2> lanes{{
      {at(0.12, 0.55), at(0.40, 0.40), at(0.55, 0.12)},
      {at(0.45, 0.88), at(0.60, 0.60), at(0.88, 0.45)},
  }};

  std::vector<Agent> agents;
  for (int t = 0; t < 2; ++t) {
    const Team team = t == 0 ? Team::Radiant : Team::Dire;
    for (int i = 0; i < kPlayersPerTeam; ++i) {
      const int slot = t * kPlayersPerTeam + i;
      PlayerInfo info;
      info.player_id = "p" + std::to_string(slot);
      info.team = team;
      info.hero_name = std::string(kHeroes[static_cast<std::size_t>(slot)]);
      info.role = kRoles[static_cast<std::size_t>(i)];
      match.players.push_back(info);

      Agent a;
      a.id = info.player_id;
      a.team = team;
      a.pos = clamp({bases[t].x + rng.uniform(-20, 20), bases[t].y + rng.uniform(-20, 20)});
      a.lane_spot = lanes[t][static_cast<std::size_t>(i % 3)];
      a.target = a.lane_spot;
      agents.push_back(a);
    }
  }

  std::vector<Event> events;
  auto phase_of = [&](double t) -> const PhaseMix& {
    if (t < tier1) return config.phases[0];
    if (config.surrender_before_late || t < tier3) return config.phases[1];
    return config.phases[2];
  };

  auto scatter = [&](Position center, double spread) {
    return clamp({center.x + rng.uniform(-spread, spread), center.y + rng.uniform(-spread, spread)});
  };

  std::size_t episode_end = 0;
  for (std::size_t k = 0; k <= last_tick; ++k) {
    const double now = static_cast<double>(k) * dt;
    const PhaseMix& mix = phase_of(now);

    for (auto& a : agents) {
      if (!a.alive && k >= a.respawn_tick) {
        a.alive = true;
        a.pos = scatter(bases[a.team == Team::Radiant ? 0 : 1], 20.0);
        a.target = a.lane_spot;
      }
    }

    if (k >= episode_end) {
      const double length = rng.uniform(config.min_episode_s, config.max_episode_s);
      episode_end = k + std::max<std::size_t>(1, static_cast<std::size_t>(length / dt));
      const Scenario scenario = draw_scenario(rng, mix);
      const Position contested = at(rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7));
      std::array<Position, 2> rally{at(rng.uniform(0.15, 0.45), rng.uniform(0.15, 0.45)),
                                    at(rng.uniform(0.55, 0.85), rng.uniform(0.55, 0.85))};
      std::array<int, 2> skirmishers{1 + static_cast<int>(rng.below(2)),
                                     1 + static_cast<int>(rng.below(3))};
      std::array<int, 2> picked{0, 0};
      for (auto& a : agents) {
        const int t = a.team == Team::Radiant ? 0 : 1;
        a.engaged = false;
        a.lane_spot = scatter(lanes[t][rng.below(3)], 60.0);
        switch (scenario) {
          case Scenario::Split:
            a.target = a.lane_spot;
            break;
          case Scenario::Group:
            a.target = scatter(rally[t], 25.0);
            break;
          case Scenario::Skirmish:
            if (picked[t] < skirmishers[t] && rng.chance(0.5)) {
              ++picked[t];
              a.engaged = true;
              a.target = scatter(contested, 25.0);
            } else {
              a.target = a.lane_spot;
            }
            break;
          case Scenario::Teamfight:
            a.engaged = true;
            a.target = scatter(contested, 25.0);
            break;
        }
      }
    }

    for (auto& a : agents) {
      if (!a.alive) continue;
      const double dx = a.target.x - a.pos.x;
      const double dy = a.target.y - a.pos.y;
      const double dist = std::hypot(dx, dy);
      const double step = config.move_speed * dt;
      Position next;
      if (dist > step) {
        next = {a.pos.x + dx / dist * step, a.pos.y + dy / dist * step};
      } else {
        next = {a.target.x + rng.uniform(-3.0, 3.0), a.target.y + rng.uniform(-3.0, 3.0)};
      }
      a.pos = clamp({round_to(next.x, 0.01), round_to(next.y, 0.01)});
    }

    const bool sample_tick = k % static_cast<std::size_t>(config.sample_every_ticks) == 0;
    for (auto& a : agents) {
      if (!a.alive) continue;
      const bool respawned = k == a.respawn_tick && k > 0;
      if (sample_tick || respawned) events.push_back(Event::sample(now, a.id, a.pos));
    }

    if (k == last_tick) continue;
    // Kills happen inside the tick, strictly before the next grid time.
    for (auto& killer : agents) {
      if (!killer.alive || !killer.engaged) continue;
      for (auto& victim : agents) {
        if (!victim.alive || victim.team == killer.team) continue;
        if (std::hypot(victim.pos.x - killer.pos.x, victim.pos.y - killer.pos.y) > 81.92) continue;
        if (!rng.chance(mix.kill_rate)) continue;
        const double t = round_to(now + rng.uniform(0.05, 0.95) * dt, 0.01);
        events.push_back(Event::kill(t, killer.id, victim.id));
        events.push_back(Event::death(t, victim.id));
        victim.alive = false;
        victim.respawn_tick = tick_of(t + mix.respawn_s, dt) + 1;
        break;
      }
    }
  }

  const std::array<std::pair<double, int>, 3> falls{{{tier1, 1}, {tier2, 2}, {tier3, 3}}};
  for (const auto& [t, tier] : falls) {
    if (t >= end_s) continue;
    events.push_back(Event::tower(t, tier, rng.chance(0.5) ? Team::Radiant : Team::Dire));
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.time_s < b.time_s; });
  events.push_back(Event::end(end_s));
  match.events = std::move(events);
  return match;
}

}  // namespace seqlab::telemetry
