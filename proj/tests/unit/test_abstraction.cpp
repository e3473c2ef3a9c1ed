#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "seqlab/abstraction.hpp"
#include "seqlab/error.hpp"
#include "seqlab/json_io.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace seqlab;
using namespace seqlab::abstraction;
using telemetry::Event;
using telemetry::MatchLog;
using telemetry::Position;
using testing::oracle_state;

namespace {

telemetry::SynthConfig short_config() {
  telemetry::SynthConfig cfg;
  cfg.tier1_fall_s = 100.0;
  cfg.tier2_fall_s = 200.0;
  cfg.tier3_fall_s = 300.0;
  cfg.match_end_s = 400.0;
  cfg.schedule_jitter_s = 10.0;
  return cfg;
}

MatchLog translated(MatchLog m, double dx, double dy) {
  m.map_bounds.min = {m.map_bounds.min.x + dx, m.map_bounds.min.y + dy};
  m.map_bounds.max = {m.map_bounds.max.x + dx, m.map_bounds.max.y + dy};
  for (auto& e : m.events) {
    if (e.kind == telemetry::EventKind::PositionSample) e.position = {e.position.x + dx, e.position.y + dy};
  }
  return m;
}

// One sample per player at t=0 at the given spots, then nothing until `end`.
MatchLog placed(const std::vector<Position>& spots, double end = 3.0) {
  auto m = testing::empty_match();
  for (int i = 0; i < 10; ++i) m.events.push_back(Event::sample(0.0, "p" + std::to_string(i), spots[i]));
  m.events.push_back(Event::end(end));
  return m;
}

std::vector<Position> scattered() {
  std::vector<Position> out;
  for (int i = 0; i < 10; ++i) out.push_back({50.0 + 100.0 * i, 50.0 + 90.0 * i});
  return out;
}

}  // namespace

TEST_CASE("state names round-trip") {
  std::set<std::string_view> names;
  for (auto s : kAllStates) {
    names.insert(to_string(s));
    CHECK(state_from_string(to_string(s)) == s);
  }
  CHECK(names.size() == kStateCount);
  CHECK(to_string(BehaviorState::FullTeamAssembly) == "full_team_assembly");
  CHECK_FALSE(state_from_string("teamfight").has_value());
}

TEST_CASE("exhaustive precedence enumeration") {
  const auto prec = default_precedence();
  std::set<Rule> fired;
  std::size_t combos = 0;
  for (int a = 0; a <= 4; ++a) {
    for (int e = 0; e <= 5; ++e) {
      for (int ep = 0; ep <= 5; ++ep) {
        for (int f = 0; f < 4; ++f) {
          TickContext ctx;
          ctx.allies = a;
          ctx.enemies = e;
          ctx.prev_enemies = ep;
          ctx.killed = (f & 1) != 0;
          ctx.died = (f & 2) != 0;
          const Rule r = first_matching_rule(ctx, prec);
          ++combos;
          // The chosen rule holds and no earlier one does.
          CHECK(rule_matches(r, ctx));
          for (Rule earlier : prec) {
            if (earlier == r) break;
            CHECK_FALSE(rule_matches(earlier, ctx));
          }
          CHECK(state_of(r) == oracle_state(a, e, ep, ctx.killed, ctx.died));
          fired.insert(r);
        }
      }
    }
  }
  CHECK(combos == 5 * 6 * 6 * 4);
  CHECK(fired.size() == kRuleCount);
}

TEST_CASE("documented precedence examples") {
  const auto prec = default_precedence();
  TickContext solo;
  CHECK(state_of(first_matching_rule(solo, prec)) == BehaviorState::Solo);

  TickContext tf;
  tf.allies = 3;
  tf.enemies = 3;
  tf.prev_enemies = 3;
  CHECK(state_of(first_matching_rule(tf, prec)) == BehaviorState::TeamFight);
  CHECK(rule_matches(Rule::Harassed, tf));

  TickContext up;
  up.enemies = 2;
  up.prev_enemies = 1;
  CHECK(state_of(first_matching_rule(up, prec)) == BehaviorState::FightIntensifies);
}

TEST_CASE("precedence is configurable") {
  // Harassed ahead of the change rules.
  std::vector<Rule> prec{Rule::Died, Rule::Killed, Rule::TeamFight, Rule::Harassed,
                         Rule::FightIntensifies, Rule::FightDiminishes, Rule::Fight,
                         Rule::FullTeamAssembly, Rule::Teaming, Rule::Solo};
  TickContext up;
  up.enemies = 2;
  up.prev_enemies = 1;
  CHECK(first_matching_rule(up, prec) == Rule::Harassed);

  ProximityConfig cfg;
  cfg.precedence = prec;
  CHECK_NOTHROW(check_config(cfg));
  cfg.precedence.pop_back();
  CHECK_THROWS_AS(check_config(cfg), Error);
  cfg = {};
  cfg.radius = 0.0;
  CHECK_THROWS_AS(check_config(cfg), Error);
}

TEST_CASE("proximity counts") {
  SUBCASE("alone") {
    const auto t = telemetry::resample_positions(placed(scattered()), 1.0);
    CHECK(proximity_counts(t, 0, 0, 81.92) == ProximityCounts{0, 0});
  }
  SUBCASE("four teammates at 50") {
    auto spots = scattered();
    spots[0] = {500.0, 500.0};
    spots[1] = {550.0, 500.0};
    spots[2] = {450.0, 500.0};
    spots[3] = {500.0, 550.0};
    spots[4] = {500.0, 450.0};
    spots[5] = {10.0, 1000.0};
    const auto t = telemetry::resample_positions(placed(spots), 1.0);
    CHECK(proximity_counts(t, 0, 0, 81.92) == ProximityCounts{4, 0});
  }
  SUBCASE("boundary is inclusive") {
    auto spots = scattered();
    spots[0] = {0.0, 100.0};
    spots[1] = {81.92, 100.0};
    spots[6] = {0.0, 100.0 + 81.92 + 1e-9};
    const auto t = telemetry::resample_positions(placed(spots), 1.0);
    const double d = std::hypot(spots[1].x - spots[0].x, spots[1].y - spots[0].y);
    REQUIRE(d <= 81.92);
    CHECK(proximity_counts(t, 0, 0, 81.92) == ProximityCounts{1, 0});
  }
  SUBCASE("absent player") {
    auto m = placed(scattered(), 30.0);
    m.events.insert(m.events.end() - 1, Event::kill(2.0, "p5", "p0"));
    m.events.insert(m.events.end() - 1, Event::death(2.0, "p0"));
    const auto t = telemetry::resample_positions(m, 1.0);
    try {
      proximity_counts(t, 0, 5, 81.92);
      FAIL("expected PlayerAbsent");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PlayerAbsent);
    }
  }
}

TEST_CASE("one clump gives team fight everywhere") {
  std::vector<Position> spots(10, Position{512.0, 512.0});
  const auto seqs = abstract_match(placed(spots, 20.0));
  REQUIRE(seqs.size() == 10);
  for (const auto& s : seqs) {
    CHECK(s.entries.size() == 21);
    for (const auto& e : s.entries) CHECK(e.state == BehaviorState::TeamFight);
  }
}

TEST_CASE("one team clumped alone gives full team assembly") {
  auto spots = scattered();
  for (int i = 0; i < 5; ++i) spots[i] = {900.0, 100.0};
  const auto seqs = abstract_match(placed(spots, 5.0));
  for (int i = 0; i < 5; ++i) {
    for (const auto& e : seqs[i].entries) CHECK(e.state == BehaviorState::FullTeamAssembly);
  }
  for (int i = 5; i < 10; ++i) {
    for (const auto& e : seqs[i].entries) CHECK(e.state == BehaviorState::Solo);
  }
}

TEST_CASE("approach sequence and death handling") {
  auto m = testing::empty_match();
  auto spots = scattered();
  for (int i = 0; i < 10; ++i) m.events.push_back(Event::sample(0.0, "p" + std::to_string(i), spots[i]));
  // p5 walks onto p0, then p6 joins, then p6 leaves.
  m.events.push_back(Event::sample(2.0, "p5", {spots[0].x + 10, spots[0].y}));
  m.events.push_back(Event::sample(3.0, "p6", {spots[0].x, spots[0].y + 10}));
  m.events.push_back(Event::sample(5.0, "p6", {900.0, 100.0}));
  m.events.push_back(Event::kill(7.0, "p5", "p0"));
  m.events.push_back(Event::death(7.0, "p0"));
  m.events.push_back(Event::sample(10.0, "p0", {1000.0, 20.0}));
  m.events.push_back(Event::end(11.0));
  REQUIRE(telemetry::validate(m).empty());

  const auto p0 = abstract_player(m, "p0");
  std::vector<BehaviorState> got;
  std::vector<double> times;
  for (const auto& e : p0.entries) {
    got.push_back(e.state);
    times.push_back(e.time_s);
  }
  using S = BehaviorState;
  CHECK(got == std::vector<S>{S::Solo, S::Solo, S::Fight, S::FightIntensifies, S::Harassed,
                              S::FightDiminishes, S::Fight, S::Death, S::Solo, S::Solo});
  CHECK(times == std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 10, 11});

  const auto p5 = abstract_player(m, "p5");
  CHECK(p5.entries[7].state == S::KillHero);

  CHECK_THROWS_AS(abstract_player(m, "nobody"), Error);
}

TEST_CASE("E prime skips absent ticks") {
  auto m = testing::empty_match();
  auto spots = scattered();
  spots[5] = {spots[0].x + 5, spots[0].y};
  for (int i = 0; i < 10; ++i) m.events.push_back(Event::sample(0.0, "p" + std::to_string(i), spots[i]));
  m.events.push_back(Event::kill(1.0, "p5", "p0"));
  m.events.push_back(Event::death(1.0, "p0"));
  // Respawns next to the same single enemy: E = E' = 1, so Fight rather than a change state.
  m.events.push_back(Event::sample(4.0, "p0", {spots[0].x, spots[0].y + 5}));
  m.events.push_back(Event::end(5.0));
  const auto p0 = abstract_player(m, "p0");
  REQUIRE(p0.entries.size() == 4);
  CHECK(p0.entries[1].state == BehaviorState::Death);
  CHECK(p0.entries[2].time_s == 4.0);
  CHECK(p0.entries[2].state == BehaviorState::Fight);
}

TEST_CASE("radius monotonicity on random tables") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(0.0, 300.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Position> spots;
    for (int i = 0; i < 10; ++i) spots.push_back({coord(rng), coord(rng)});
    const auto t = telemetry::resample_positions(placed(spots, 0.0), 1.0);
    for (std::size_t p = 0; p < 10; ++p) {
      int last = -1;
      for (double r = 10.0; r <= 430.0; r += 10.0) {
        const auto c = proximity_counts(t, p, 0, r);
        CHECK(c.allies + c.enemies >= last);
        last = c.allies + c.enemies;
      }
      CHECK(last == 9);
    }
  }
}

TEST_CASE("translation invariance on 100 random matches") {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> shift(-4096, 4096);
  for (int i = 0; i < 100; ++i) {
    const auto m = telemetry::generate_synthetic_match(short_config(), rng());
    const double dx = shift(rng) * 0.25;
    const double dy = shift(rng) * 0.25;
    CHECK(abstract_match(m) == abstract_match(translated(m, dx, dy)));
  }
}

TEST_CASE("abstraction is deterministic") {
  const auto m = telemetry::parse_match_log(testing::read_file(testing::fixture("match_labeled.jsonl")));
  auto bytes = [&] {
    std::vector<json_io::TaggedSequence> tagged;
    for (auto& s : abstract_match(m)) tagged.push_back({std::move(s), std::nullopt});
    return json_io::serialize_sequences(tagged);
  };
  const auto first = bytes();
  CHECK(first == bytes());
  CHECK(std::count(first.begin(), first.end(), '\n') == 10);
}

TEST_CASE("compress examples") {
  StateSequence s{"m", "p", {{0, BehaviorState::Solo}, {1, BehaviorState::Solo}, {2, BehaviorState::Fight}}};
  const auto d = compress_dss(s);
  REQUIRE(d.runs.size() == 2);
  CHECK(d.runs[0] == DssRun{BehaviorState::Solo, 2, 0.0});
  CHECK(d.runs[1] == DssRun{BehaviorState::Fight, 1, 2.0});

  StateSequence flat{"m", "p", {}};
  for (int i = 0; i < 100; ++i) flat.entries.push_back({double(i), BehaviorState::Teaming});
  const auto f = compress_dss(flat);
  REQUIRE(f.runs.size() == 1);
  CHECK(f.runs[0].length == 100);
}

TEST_CASE("expand after compress is the identity on 1000 random sequences") {
  std::mt19937_64 rng(1000);
  for (int trial = 0; trial < 1000; ++trial) {
    StateSequence s{"m", "p" + std::to_string(trial), {}};
    const auto len = 1 + rng() % 60;
    double t = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      // Small alphabet slice so runs actually occur; occasional gaps in time.
      t += (rng() % 5 == 0) ? 1.0 + double(rng() % 20) : 1.0;
      s.entries.push_back({t, kAllStates[rng() % 3]});
    }
    const auto d = compress_dss(s);
    CHECK(expand_dss(d) == s);
    for (std::size_t i = 1; i < d.runs.size(); ++i) CHECK(d.runs[i].state != d.runs[i - 1].state);
  }
}
