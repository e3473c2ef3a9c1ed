// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <httplib.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "seqlab/error.hpp"
#include "seqlab/pipeline.hpp"
#include "seqlab/server.hpp"
#include "test_support.hpp"

using namespace seqlab;
using json_io::Json;
using segmentation::Segment;
namespace t = seqlab::testing;

namespace {

// Collects failure notes for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && notes_.size() < 5) notes_.push_back(what);
    if (!ok) ++failures_;
  }
  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    std::ostringstream out;
    out << failures_ << " failure(s)";
    for (const auto& n : notes_) out << "; " << n;
    return out.str();
  }

 private:
  std::size_t failures_ = 0;
  std::vector<std::string> notes_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<telemetry::MatchLog> bundled_corpus() {
  const auto manifest = Json::parse(t::read_file(t::fixture("corpus/MANIFEST.json")));
  std::vector<telemetry::MatchLog> out;
  for (const auto& f : manifest.at("files")) {
    out.push_back(telemetry::parse_match_log(t::read_file(t::fixture("corpus/" + f.at("file").get<std::string>()))));
  }
  return out;
}

annotation::AnnotationSet load_set(const std::string& file, const std::string& annotator) {
  return annotation::make_set(annotator, annotation::parse_applications(t::read_file(t::fixture(file))));
}

annotation::Rubric final_rubric() { return annotation::load_rubric(t::read_file(t::fixture("rubric_final.toml"))); }

// --- 1 ---------------------------------------------------------------------

void corpus_shape(Check& c) {
  const auto start = Clock::now();
  std::vector<segmentation::MatchSequences> all;
  for (auto& log : bundled_corpus()) {
    const auto m = pipeline::analyze_match(std::move(log));
    all.push_back({m.log.match_id, m.boundaries, m.sequences});
  }
  const auto complete = segmentation::filter_complete_games(all);
  c.expect(complete.size() == 15, "complete matches " + std::to_string(complete.size()));
  std::array<std::size_t, 3> per_segment{};
  for (const auto& m : complete) {
    for (const auto& seq : m.sequences) {
      const auto parts = segmentation::split_sequence(seq, m.boundaries);
      for (std::size_t s = 0; s < 3; ++s) per_segment[s] += parts[s].entries.empty() ? 0 : 1;
    }
  }
  c.expect(per_segment[0] + per_segment[1] + per_segment[2] == 450, "total segment-sequences");
  for (std::size_t s = 0; s < 3; ++s) c.expect(per_segment[s] == 150, "segment " + std::to_string(s));
  const double secs = seconds_since(start);
  c.expect(secs < 10.0, "took " + fmt(secs) + " s");
}

// --- 2 ---------------------------------------------------------------------

void fixture_counts(Check& c) {
  const auto start = Clock::now();
  const auto log = telemetry::parse_match_log(t::read_file(t::fixture("match_labeled.jsonl")));
  const report::BoundaryMap boundaries{{log.match_id, segmentation::find_boundaries(log)}};
  const auto set = load_set("annotations_paper.jsonl", "analyst_1");
  const auto rubric = final_rubric();
  const auto r = report::label_counts_by_segment(set, boundaries);

  auto eq = [&](std::size_t got, std::size_t want, const std::string& what) {
    c.expect(got == want, what + " = " + std::to_string(got) + ", want " + std::to_string(want));
  };
  eq(r.label_count(Segment::Early, "Team Fighting"), 13, "Team Fighting early");
  eq(r.label_count(Segment::Mid, "Team Fighting"), 4, "Team Fighting mid");
  eq(r.label_count(Segment::Late, "Team Fighting"), 17, "Team Fighting late");
  eq(r.tag_count(Segment::Early, "Team Fighting", "Focus Target"), 10, "Focus Target early");
  eq(r.tag_count(Segment::Late, "Team Fighting", "Focus Target"), 5, "Focus Target late");
  eq(r.label_count(Segment::Early, "Solo Recovery"), 8, "Solo Recovery early");
  eq(r.label_count(Segment::Late, "Solo Recovery"), 0, "Solo Recovery late");
  eq(r.label_count(Segment::Early, "Team Recovery"), 2, "Team Recovery early");
  eq(r.label_count(Segment::Late, "Team Recovery"), 9, "Team Recovery late");

  auto push_objective = [&](Segment s) {
    std::size_t n = 0;
    for (const char* label : {"Team Recovery", "Solo Recovery"}) {
      for (const auto& [tag, count] : report::tag_distribution(r, rubric, label, s)) {
        if (tag == "Push" || tag == "Objective Struggle") n += count;
      }
    }
    return n;
  };
  eq(push_objective(Segment::Early), 2, "Push+Objective early");
  eq(push_objective(Segment::Late), 7, "Push+Objective late");

  const std::vector<telemetry::MatchLog> logs{log};
  const auto f = report::followup_counts(set, {"Team Fighting", "Focus Target"}, {"Solo Recovery", "Farming"},
                                         report::kDefaultFollowupGapS, report::died_during(logs));
  eq(f.followed, 3, "follow-ups");
  eq(f.eligible, 4, "follow-up base");
  const double secs = seconds_since(start);
  c.expect(secs < 1.0, "took " + fmt(secs) + " s");
}

// --- 3 ---------------------------------------------------------------------

void kappa(Check& c) {
  using t::Cats;
  const Cats a{"X", "X", "Y", "Y"};
  c.expect(annotation::cohen_kappa(a, a) == 1.0, "identical vectors");
  c.expect(std::abs(annotation::cohen_kappa(a, Cats{"X", "Y", "X", "Y"})) <= 1e-12, "hand vector 0.0");
  c.expect(std::abs(annotation::cohen_kappa(a, Cats{"X", "X", "Y", "X"}) - 0.5) <= 1e-12, "hand vector 0.5");

  std::mt19937_64 rng(10000);
  const auto ra = t::random_cats(rng, 10000, 4);
  const auto rb = t::random_cats(rng, 10000, 4);
  const double independent = annotation::cohen_kappa(ra, rb);
  c.expect(std::abs(independent) <= 0.05, "independent raters " + fmt(independent));
  c.expect(std::abs(independent - t::oracle_kappa(ra, rb)) <= 1e-12, "textbook formula");

  const auto log = telemetry::parse_match_log(t::read_file(t::fixture("match_labeled.jsonl")));
  const std::vector<annotation::MatchHorizon> horizons{
      {log.match_id, [&] {
         std::vector<std::string> ids;
         for (const auto& p : log.players) ids.push_back(p.player_id);
         return ids;
       }(),
       log.match_end_s()}};
  const auto sa = load_set("irr_fixture_A.jsonl", "rater_a");
  const auto sb = load_set("irr_fixture_B.jsonl", "rater_b");
  const auto rubric = final_rubric();
  c.expect(annotation::irr_report(sa, sa, horizons, 5.0, rubric).overall.kappa == 1.0, "identical sets");
  const double fixture = annotation::irr_report(sa, sb, horizons, 5.0, rubric).overall.kappa;
  c.expect(std::abs(fixture - 0.60) <= 0.005, "irr fixture " + fmt(fixture));
}

// --- 4 ---------------------------------------------------------------------

std::string sequences_bytes(const telemetry::MatchLog& m) {
  std::vector<json_io::TaggedSequence> tagged;
  for (auto& s : abstraction::abstract_match(m)) tagged.push_back({std::move(s), std::nullopt});
  return json_io::serialize_sequences(tagged);
}

telemetry::MatchLog translated(telemetry::MatchLog m, double dx, double dy) {
  m.map_bounds.min = {m.map_bounds.min.x + dx, m.map_bounds.min.y + dy};
  m.map_bounds.max = {m.map_bounds.max.x + dx, m.map_bounds.max.y + dy};
  for (auto& e : m.events) {
    if (e.kind == telemetry::EventKind::PositionSample) e.position = {e.position.x + dx, e.position.y + dy};
  }
  return m;
}

void abstraction_totality(Check& c) {
  using namespace abstraction;
  const auto prec = default_precedence();
  std::set<Rule> fired;
  for (int a = 0; a <= 4; ++a) {
    for (int e = 0; e <= 5; ++e) {
      for (int ep = 0; ep <= 5; ++ep) {
        for (int f = 0; f < 4; ++f) {
          const TickContext ctx{a, e, ep, (f & 1) != 0, (f & 2) != 0};
          std::size_t holding = 0;
          for (Rule r : prec) holding += rule_matches(r, ctx) ? 1 : 0;
          c.expect(holding >= 1, "no rule holds");
          const Rule r = first_matching_rule(ctx, prec);
          c.expect(state_of(r) == t::oracle_state(a, e, ep, ctx.killed, ctx.died), "state differs from oracle");
          fired.insert(r);
        }
      }
    }
  }
  c.expect(fired.size() == kRuleCount, "unreachable rule");

  const auto labeled = telemetry::parse_match_log(t::read_file(t::fixture("match_labeled.jsonl")));
  c.expect(sequences_bytes(labeled) == sequences_bytes(labeled), "labeled fixture runs differ");
  const auto corpus = bundled_corpus();
  c.expect(sequences_bytes(corpus.front()) == sequences_bytes(corpus.front()), "corpus match runs differ");

  telemetry::SynthConfig cfg;
  cfg.tier1_fall_s = 100.0;
  cfg.tier2_fall_s = 200.0;
  cfg.tier3_fall_s = 300.0;
  cfg.match_end_s = 400.0;
  cfg.schedule_jitter_s = 10.0;
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> shift(-4096, 4096);
  for (int i = 0; i < 100; ++i) {
    const auto m = telemetry::generate_synthetic_match(cfg, rng());
    const auto moved = translated(m, shift(rng) * 0.25, shift(rng) * 0.25);
    c.expect(abstract_match(m) == abstract_match(moved), "translation changed match " + std::to_string(i));
  }
}

// --- 5 ---------------------------------------------------------------------

void mining_oracle(Check& c) {
  using abstraction::BehaviorState;
  const std::vector<BehaviorState> alphabet{BehaviorState::Solo, BehaviorState::Fight, BehaviorState::Teaming,
                                            BehaviorState::Harassed};
  const std::vector<std::pair<std::size_t, std::size_t>> lens{{1, 1}, {1, 3}, {2, 2}, {2, 4}, {3, 5}};
  const std::vector<double> supports{0.05, 0.25, 1.0 / 3.0, 0.5, 1.0};
  const std::vector<std::size_t> ks{1, 3, 10, 100};
  std::mt19937_64 rng(5150);
  std::size_t cases = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto seqs = t::random_dss_corpus(rng, alphabet);
    const auto corpus = t::corpus_of(seqs);
    for (auto k : ks) {
      const auto got = seqmine::top_frequent_sequences(corpus, k);
      const auto want = t::oracle_top(seqs, k);
      bool same = got.rows.size() == want.size();
      for (std::size_t i = 0; same && i < want.size(); ++i) {
        same = got.rows[i].pattern == want[i].pattern && got.rows[i].count == want[i].count &&
               got.rows[i].share == want[i].share;
      }
      c.expect(same, "top-k trial " + std::to_string(trial) + " k " + std::to_string(k));
      ++cases;
    }
    for (auto [lo, hi] : lens) {
      for (double sup : supports) {
        c.expect(seqmine::mine_ngrams(corpus, lo, hi, sup).rows == t::oracle_ngrams(seqs, alphabet, lo, hi, sup),
                 "n-gram trial " + std::to_string(trial));
        ++cases;
      }
    }
  }
  c.expect(cases >= 200, "only " + std::to_string(cases) + " cases");
}

// --- 6 ---------------------------------------------------------------------

void dtw_oracle(Check& c) {
  using abstraction::BehaviorState;
  std::vector<t::Seq> all;
  t::Seq cur;
  t::dss_patterns(6, {BehaviorState::Solo, BehaviorState::Fight, BehaviorState::Teaming}, cur, all);
  for (const auto& a : all) {
    for (const auto& b : all) c.expect(dtw::dtw_distance(a, b) == t::brute_dtw(a, b).cost, "dp differs");
  }
  c.expect(all.size() == 189, "pattern count");

  std::mt19937_64 rng(50);
  seqmine::SequenceCorpus corpus;
  for (int i = 0; i < 50; ++i) {
    auto d = t::dss(t::random_dss(rng, 25));
    d.player_id = "p" + std::to_string(i);
    corpus.sequences.push_back(std::move(d));
  }
  const auto m = dtw::pairwise_distances(corpus.sequences, {}, {}, 0);
  c.expect(m.n == 50, "matrix size");
  for (std::size_t i = 0; i < m.n; ++i) {
    c.expect(m(i, i) == 0.0, "diagonal");
    for (std::size_t j = 0; j < m.n; ++j) c.expect(m(i, j) == m(j, i), "symmetry");
  }
}

// --- 7 ---------------------------------------------------------------------

void mds_fidelity(Check& c) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = t::planar(rng, 10);
    const double rms = t::embedded_rms(m, dtw::mds_embed(m));
    c.expect(rms <= 1e-6, "rms " + fmt(rms));
  }
}

// --- 8 ---------------------------------------------------------------------

void round_trips(Check& c) {
  std::vector<std::string> raws{t::read_file(t::fixture("match_labeled.jsonl"))};
  for (const auto& m : bundled_corpus()) raws.push_back(telemetry::serialize_match_log(m));
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    raws.push_back(telemetry::serialize_match_log(telemetry::generate_synthetic_match({}, seed)));
  }
  for (const auto& raw : raws) {
    const auto parsed = telemetry::parse_match_log(raw);
    c.expect(telemetry::serialize_match_log(parsed) == raw, "telemetry " + parsed.match_id);
    c.expect(telemetry::parse_match_log(telemetry::serialize_match_log(parsed)) == parsed,
             "telemetry value " + parsed.match_id);
  }

  // Crash at every log prefix: reopening yields the last acknowledged state.
  t::TempDir dir;
  const auto rubric = final_rubric();
  const auto path = dir / "full.log";
  std::vector<std::pair<std::uintmax_t, std::vector<annotation::LabelApplication>>> acked{{0, {}}};
  {
    annotation::AnnotationStore store(path);
    std::mt19937_64 rng(88);
    for (int op = 0; op < 30; ++op) {
      const auto snap = store.snapshot();
      if (!snap->applications.empty() && rng() % 4 == 0) {
        store.remove(snap->applications[rng() % snap->applications.size()].app.application_id);
      } else {
        const double s = double(rng() % 1000);
        store.add({"", "rater", "m", "p" + std::to_string(rng() % 10), s, s + 1 + double(rng() % 30),
                   "Team Fighting", "Focus Target"},
                  rubric);
      }
      if (std::filesystem::file_size(path) != acked.back().first) {
        acked.emplace_back(std::filesystem::file_size(path), store.snapshot()->all());
      }
    }
  }
  auto by_id = [](std::vector<annotation::LabelApplication> v) {
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.application_id < y.application_id; });
    return v;
  };
  const auto bytes = t::read_file(path);
  for (std::size_t len = 0; len <= bytes.size(); ++len) {
    const auto prefix = dir / "prefix.log";
    t::write_file(prefix, bytes.substr(0, len));
    std::size_t state = 0;
    while (state + 1 < acked.size() && acked[state + 1].first <= len) ++state;
    annotation::AnnotationStore store(prefix);
    c.expect(by_id(store.snapshot()->all()) == by_id(acked[state].second), "prefix " + std::to_string(len));
  }

  const auto log = telemetry::parse_match_log(raws.front());
  const report::BoundaryMap b{{log.match_id, segmentation::find_boundaries(log)}};
  const auto rep = report::label_counts_by_segment(load_set("annotations_paper.jsonl", "analyst_1"), b);
  c.expect(report::parse_csv(report::export_csv(rep)) == rep, "csv report");
  c.expect(report::export_csv(report::parse_csv(report::export_csv(rep))) == report::export_csv(rep), "csv bytes");
}

// --- 9 ---------------------------------------------------------------------

void runtime_budget(Check& c) {
  const auto start = Clock::now();
  std::vector<pipeline::AnalyzedMatch> matches;
  for (auto& log : bundled_corpus()) matches.push_back(pipeline::analyze_match(std::move(log)));
  for (auto seg : segmentation::kAllSegments) pipeline::mine(matches, {seg, 10, 2, 4, 0.1});
  pipeline::DtwParams p;
  p.segment = Segment::Late;
  const auto dtw = pipeline::dtw_analysis(matches, p);
  c.expect(dtw.distances.n == 150, "dtw matrix " + std::to_string(dtw.distances.n));
  // The bundled annotations refer to the fixture match.
  matches.push_back(
      pipeline::analyze_match(telemetry::parse_match_log(t::read_file(t::fixture("match_labeled.jsonl")))));
  pipeline::segment_report(matches, load_set("annotations_paper.jsonl", "analyst_1"), {});
  const double secs = seconds_since(start);
  c.expect(secs < 60.0, "took " + fmt(secs) + " s");
}

// --- 10 --------------------------------------------------------------------

// Empty when the CLI was not built, which fails the comparison.
std::string run_cli(const std::string& args) {
#ifndef SEQLAB_CLI_PATH
  (void)args;
  return {};
#else
  const std::string cmd = std::string(SEQLAB_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {};
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  ::pclose(pipe);
  return out;
#endif
}

void service_contract(Check& c) {
  t::TempDir dir;
  const std::string root = dir / "ws";
  std::set<std::string> acked;
  std::string irr_rest, report_rest;
  {
    server::Workspace ws(root);
    server::HttpServer http(ws);
    const int port = http.bind("127.0.0.1", 0);
    std::thread loop([&] { http.run(); });
    http.wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    auto status = [](const httplib::Result& r) { return r ? r->status : -1; };
    c.expect(status(client.Post("/api/matches", t::read_file(t::fixture("match_labeled.jsonl")), "application/x-ndjson")) ==
                 201,
             "ingest");
    c.expect(status(client.Put("/api/rubric", json_io::rubric_to_json(final_rubric()).dump(), "application/json")) ==
                 200,
             "rubric");
    for (const char* f : {"irr_fixture_A.jsonl", "irr_fixture_B.jsonl"}) {
      for (const auto& a : annotation::parse_applications(t::read_file(t::fixture(f)))) {
        c.expect(status(client.Post("/api/matches/labeled_match/annotations", json_io::application_to_json(a).dump(),
                                    "application/json")) == 201,
                 "annotate " + a.application_id);
      }
    }
    auto irr = client.Get("/api/irr?a=rater_a&b=rater_b&window=5");
    auto rep = client.Get("/api/report/segments");
    c.expect(irr && irr->status == 200 && rep && rep->status == 200, "irr/report status");
    if (irr) irr_rest = irr->body;
    if (rep) report_rest = rep->body;

    c.expect(run_cli("kappa --workspace " + root + " --a rater_a --b rater_b --window 5") == irr_rest + "\n",
             "irr differs from cli");
    c.expect(run_cli("report --workspace " + root) == report_rest + "\n", "report differs from cli");

    // 100 concurrent writers on disjoint annotators.
    std::vector<std::string> ids(100);
    std::vector<std::thread> threads;
    for (int i = 0; i < 100; ++i) {
      threads.emplace_back([&, i] {
        httplib::Client cl("127.0.0.1", port);
        const Json body{{"annotator_id", "soak_" + std::to_string(i)},
                        {"player_id", "p" + std::to_string(i % 10)},
                        {"start_s", 100.0},
                        {"end_s", 110.0},
                        {"label", "Team Fighting"},
                        {"tag", "Focus Target"}};
        auto r = cl.Post("/api/matches/labeled_match/annotations", body.dump(), "application/json");
        if (r && r->status == 201) ids[i] = Json::parse(r->body).at("application_id");
      });
    }
    for (auto& th : threads) th.join();
    for (const auto& id : ids) {
      if (!id.empty()) acked.insert(id);
    }
    c.expect(acked.size() == 100, "acknowledged " + std::to_string(acked.size()) + " of 100");
    http.stop();
    loop.join();
  }
  server::Workspace reopened(root);
  std::set<std::string> stored;
  for (const auto& a : reopened.annotation_set(std::nullopt).applications) stored.insert(a.application_id);
  for (const auto& id : acked) c.expect(stored.count(id) == 1, "lost " + id);
  c.expect(reopened.irr_body("rater_a", "rater_b", 5.0) == irr_rest, "irr changed across restart");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria{
      {"corpus shape", corpus_shape},
      {"fixture label counts", fixture_counts},
      {"kappa correctness", kappa},
      {"abstraction totality and determinism", abstraction_totality},
      {"mining oracle equivalence", mining_oracle},
      {"dtw oracle equivalence", dtw_oracle},
      {"mds fidelity", mds_fidelity},
      {"format round-trips", round_trips},
      {"runtime budget", runtime_budget},
      {"service contract", service_contract},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    const auto start = Clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(start);
    std::printf("%s %2zu %s (%.2f s)%s%s\n", c.ok() ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                c.ok() ? "" : ": ", c.ok() ? "" : c.summary().c_str());
    if (!c.ok()) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
