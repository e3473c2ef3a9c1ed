#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "seqlab/annotation.hpp"
#include "seqlab/error.hpp"
#include "seqlab/telemetry.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace seqlab;
using namespace seqlab::annotation;
using testing::Cats;
using testing::oracle_kappa;
using testing::random_cats;

namespace {

Rubric final_rubric() { return load_rubric(testing::read_file(testing::fixture("rubric_final.toml"))); }

LabelApplication app(std::string id, std::string player, double start, double end, std::string label,
                     std::string tag, std::string annotator = "x", std::string match = "m") {
  return {std::move(id), std::move(annotator), std::move(match), std::move(player), start, end,
          std::move(label), std::move(tag)};
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Empty;
}

std::vector<LabelApplication> sorted_by_id(std::vector<LabelApplication> v) {
  std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.application_id < y.application_id; });
  return v;
}

}  // namespace

TEST_CASE("final rubric fixture") {
  const auto r = final_rubric();
  REQUIRE(r.labels.size() == 3);
  auto tags = [&](const std::string& label) {
    std::vector<std::string> out;
    for (const auto& t : r.find(label)->tags) out.push_back(t.name);
    return out;
  };
  CHECK(tags("Team Fighting") == std::vector<std::string>{"Objective Struggle", "Retaliation", "Focus Target"});
  CHECK(tags("Solo Recovery") == std::vector<std::string>{"Farming", "Scout", "Push"});
  CHECK(tags("Team Recovery") == std::vector<std::string>{"Push", "Objective Struggle", "Assist"});
}

TEST_CASE("first-iteration rubric fixture") {
  const auto r = load_rubric(testing::read_file(testing::fixture("rubric_iter1.toml")));
  CHECK(r.labels.size() == 4);
  const auto* assist = r.find("Assist");
  REQUIRE(assist != nullptr);
  std::vector<std::string> names;
  for (const auto& t : assist->tags) names.push_back(t.name);
  CHECK(names == std::vector<std::string>{"Scout", "Vanguard", "Rearguard", "Babysitter"});
  CHECK(assist->tags[3].description.find("\"babysits\"") != std::string::npos);
}

TEST_CASE("rubric errors") {
  CHECK(code_of([] { load_rubric("[[label]]\nname = \"A\"\n[[label]]\nname = \"A\"\n"); }) ==
        ErrorCode::DuplicateLabel);
  CHECK(code_of([] {
          load_rubric("[[label]]\nname = \"A\"\n[[label.tag]]\nname = \"t\"\n[[label.tag]]\nname = \"t\"\n");
        }) == ErrorCode::DuplicateTag);
  CHECK(code_of([] { load_rubric("[[label.tag]]\nname = \"t\"\n"); }) == ErrorCode::Malformed);
  CHECK(code_of([] { load_rubric("[[label]]\nname = 3\n"); }) == ErrorCode::Malformed);
  CHECK(code_of([] { load_rubric("[[label]]\ncolor = \"red\"\n"); }) == ErrorCode::Malformed);
  CHECK(load_rubric("# empty\n").labels.empty());
}

TEST_CASE("rubric text round-trip") {
  const auto r = load_rubric(testing::read_file(testing::fixture("rubric_iter1.toml")));
  CHECK(load_rubric(rubric_to_toml(r)) == r);
  Rubric odd{{{"Quote \"and\" \\ slash", {{"tag # not comment", "line"}}}}};
  CHECK(load_rubric(rubric_to_toml(odd)) == odd);
}

TEST_CASE("validate application") {
  const auto r = final_rubric();
  AnnotationSet set{"x", {app("a1", "p0", 150, 250, "Team Fighting", "Retaliation")}};
  CHECK_FALSE(validate_application(r, set, app("a2", "p0", 300, 400, "Team Fighting", "Focus Target")));

  auto v = validate_application(r, set, app("a2", "p0", 300, 400, "Team Fighting", "Farming"));
  REQUIRE(v);
  CHECK(v->kind == ViolationKind::UnknownLabelTag);

  v = validate_application(r, set, app("a2", "p0", 100, 200, "Team Fighting", "Focus Target"));
  REQUIRE(v);
  CHECK(v->kind == ViolationKind::Overlap);
  CHECK(v->existing_id == "a1");

  v = validate_application(r, set, app("a2", "p0", 50, 50, "Team Fighting", "Focus Target"));
  REQUIRE(v);
  CHECK(v->kind == ViolationKind::InvertedInterval);

  // Touching intervals do not overlap; other players and matches are independent.
  CHECK_FALSE(validate_application(r, set, app("a2", "p0", 250, 300, "Team Fighting", "Focus Target")));
  CHECK_FALSE(validate_application(r, set, app("a2", "p1", 100, 200, "Team Fighting", "Focus Target")));
  CHECK_FALSE(validate_application(r, set, app("a2", "p0", 100, 200, "Team Fighting", "Focus Target", "x", "n")));

  v = validate_application(r, set, app("a1", "p3", 0, 1, "Team Fighting", "Focus Target"));
  REQUIRE(v);
  CHECK(v->kind == ViolationKind::DuplicateId);

  v = validate_application(r, set, app("a9", "p3", 0, 1, "Team Fighting", "Focus Target", "y"));
  REQUIRE(v);
  CHECK(v->kind == ViolationKind::AnnotatorMismatch);
}

TEST_CASE("audit finds stored overlaps") {
  const auto r = final_rubric();
  AnnotationSet set{"x",
                    {app("a1", "p0", 0, 10, "Team Fighting", "Retaliation"),
                     app("a2", "p0", 5, 15, "Team Fighting", "Retaliation"),
                     app("a3", "p0", 20, 30, "Team Fighting", "Nope")}};
  const auto vs = audit(r, set);
  REQUIRE(vs.size() == 2);
  CHECK(vs[0].kind == ViolationKind::Overlap);
  CHECK(vs[1].kind == ViolationKind::UnknownLabelTag);
}

TEST_CASE("application lines round-trip") {
  std::vector<LabelApplication> apps{app("a1", "p0", 0.5, 10.25, "Team Fighting", "Retaliation"),
                                     app("a \"2\"", "p1", 1e-3, 7, "Solo Recovery", "Farming")};
  CHECK(parse_applications(serialize_applications(apps)) == apps);
  CHECK(code_of([] { parse_applications("{\"annotator_id\":1}\n"); }) == ErrorCode::Malformed);
  try {
    parse_applications(serialize_applications(apps) + "not json\n");
  } catch (const Error& e) {
    CHECK(e.index() == std::size_t{3});
  }
  CHECK_THROWS_AS(make_set("x", {app("a", "p", 0, 1, "L", "T", "y")}), Error);
}

TEST_CASE("discretize") {
  AnnotationSet set{"x", {app("a1", "p0", 0, 10, "Team Fighting", "Retaliation")}};
  const Cats want{"Team Fighting/Retaliation", "Team Fighting/Retaliation", "none", "none"};
  CHECK(discretize(set, "m", "p0", {0, 20}, 5) == want);
  CHECK(discretize(AnnotationSet{"x", {}}, "m", "p0", {0, 20}, 5) == Cats(4, "none"));
  CHECK(discretize(set, "m", "p1", {0, 20}, 5) == Cats(4, "none"));

  // Midpoints 2.5 and 7.5; the second equals the end of [0, 7.5).
  AnnotationSet edge{"x", {app("a1", "p0", 0, 7.5, "Team Fighting", "Retaliation")}};
  CHECK(discretize(edge, "m", "p0", {0, 10}, 5) == Cats{"Team Fighting/Retaliation", "none"});

  // Short last window: [10, 12) has midpoint 11.
  AnnotationSet tail{"x", {app("a1", "p0", 10.5, 11.5, "Team Fighting", "Retaliation")}};
  CHECK(discretize(tail, "m", "p0", {0, 12}, 5) == Cats{"none", "none", "Team Fighting/Retaliation"});
  CHECK_THROWS_AS(discretize(set, "m", "p0", {0, 20}, 0.0), Error);
}

TEST_CASE("kappa hand vectors") {
  const Cats a{"X", "X", "Y", "Y"};
  CHECK(cohen_kappa(a, a) == 1.0);

  const auto zero = cohen_kappa_detail(a, Cats{"X", "Y", "X", "Y"});
  CHECK(zero.observed == 0.5);
  CHECK(zero.expected == 0.5);
  CHECK(std::abs(zero.kappa - 0.0) <= 1e-12);

  const auto half = cohen_kappa_detail(a, Cats{"X", "X", "Y", "X"});
  CHECK(half.observed == 0.75);
  CHECK(half.expected == 0.5);
  CHECK(std::abs(half.kappa - 0.5) <= 1e-12);

  const auto same = cohen_kappa_detail(Cats{"X", "X"}, Cats{"X", "X"});
  CHECK(same.degenerate);
  CHECK(same.kappa == 1.0);

  CHECK(code_of([] { cohen_kappa(Cats{"a"}, Cats{"a", "b"}); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([] { cohen_kappa(Cats{}, Cats{}); }) == ErrorCode::Empty);
}

TEST_CASE("kappa matches the textbook formula on random vectors") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 200;
    const std::size_t k = 2 + rng() % 5;
    auto a = random_cats(rng, n, k);
    auto b = random_cats(rng, n, k);
    // Bias toward agreement on some trials.
    if (trial % 2) {
      for (std::size_t i = 0; i < n; ++i) {
        if (rng() % 3) b[i] = a[i];
      }
    }
    const auto r = cohen_kappa_detail(a, b);
    if (r.degenerate) continue;
    CHECK(std::abs(r.kappa - oracle_kappa(a, b)) <= 1e-12);
    CHECK(r.kappa >= -1.0);
    CHECK(r.kappa <= 1.0);
    CHECK(r.kappa == cohen_kappa(b, a));
    CHECK((r.kappa == 1.0) == (r.observed == 1.0));

    // Bijective relabeling leaves kappa unchanged.
    auto relabel = [](Cats v) {
      for (auto& c : v) c = "zz_" + std::string(c.rbegin(), c.rend());
      return v;
    };
    CHECK(cohen_kappa(relabel(a), relabel(b)) == r.kappa);
  }
}

TEST_CASE("independent random raters are near zero") {
  std::mt19937_64 rng(10000);
  const auto a = random_cats(rng, 10000, 4);
  const auto b = random_cats(rng, 10000, 4);
  CHECK(std::abs(cohen_kappa(a, b)) <= 0.05);
}

TEST_CASE("confusion table reproduces kappa") {
  std::mt19937_64 rng(9);
  const auto a = random_cats(rng, 300, 3);
  const auto b = random_cats(rng, 300, 3);
  const auto t = confusion_table(a, b);
  std::size_t sum = 0;
  for (auto c : t.counts) sum += c;
  CHECK(sum == 300);
  CHECK(std::abs(t.kappa().kappa - cohen_kappa(a, b)) <= 1e-12);
  CHECK(std::is_sorted(t.categories.begin(), t.categories.end()));
}

TEST_CASE("irr report") {
  const auto r = final_rubric();
  const auto match = telemetry::parse_match_log(testing::read_file(testing::fixture("match_labeled.jsonl")));
  MatchHorizon h{match.match_id, {}, match.match_end_s()};
  for (const auto& p : match.players) h.player_ids.push_back(p.player_id);
  const std::vector<MatchHorizon> horizons{h};

  auto load = [](const char* name, const char* who) {
    return make_set(who, parse_applications(testing::read_file(testing::fixture(name))));
  };
  const auto a = load("irr_fixture_A.jsonl", "rater_a");
  const auto b = load("irr_fixture_B.jsonl", "rater_b");

  SUBCASE("identical sets") {
    auto a2 = a;
    a2.annotator_id = "copy";
    const auto rep = irr_report(a, a2, horizons, 5.0, r);
    CHECK(rep.overall.kappa == 1.0);
    for (const auto& [label, k] : rep.per_label) CHECK(k.kappa == 1.0);
  }
  SUBCASE("regression fixture") {
    const auto rep = irr_report(a, b, horizons, 5.0, r);
    CHECK(rep.n_windows == 4800);
    CHECK(std::abs(rep.overall.kappa - 0.60) <= 0.005);
    CHECK(rep.per_label.size() == 3);
    CHECK(std::abs(rep.confusion.kappa().kappa - rep.overall.kappa) <= 1e-12);
    std::size_t sum = 0;
    for (auto c : rep.confusion.counts) sum += c;
    CHECK(sum == rep.n_windows);
  }
  SUBCASE("unknown references") {
    auto bad = a;
    bad.applications[0].match_id = "elsewhere";
    CHECK(code_of([&] { irr_report(bad, b, horizons, 5.0, r); }) == ErrorCode::NotFound);
    bad = a;
    bad.applications[0].label = "Dancing";
    CHECK(code_of([&] { irr_report(bad, b, horizons, 5.0, r); }) == ErrorCode::UnknownLabel);
  }
}

TEST_CASE("store persists and reloads") {
  testing::TempDir dir;
  const auto r = final_rubric();
  const auto path = dir / "log" / "annotations.log";
  {
    AnnotationStore store(path);
    auto res = store.add(app("", "p0", 0, 10, "Team Fighting", "Retaliation"), r);
    CHECK_FALSE(res.violation);
    CHECK(res.txid == 1);
    CHECK(res.application_id == "a1");
    res = store.add(app("", "p0", 5, 15, "Team Fighting", "Retaliation"), r);
    REQUIRE(res.violation);
    CHECK(res.violation->kind == ViolationKind::Overlap);
    CHECK(store.snapshot()->last_txid == 1);
    res = store.add(app("mine", "p1", 5, 15, "Team Fighting", "Retaliation"), r);
    CHECK(res.txid == 2);
    res = store.add(app("mine", "p2", 5, 15, "Team Fighting", "Retaliation"), r);
    REQUIRE(res.violation);
    CHECK(res.violation->kind == ViolationKind::DuplicateId);
    CHECK(store.remove("a1") == std::uint64_t{3});
    CHECK_FALSE(store.remove("a1").has_value());
  }
  AnnotationStore again(path);
  const auto snap = again.snapshot();
  CHECK(snap->last_txid == 3);
  REQUIRE(snap->applications.size() == 1);
  CHECK(snap->applications[0].app.application_id == "mine");
  CHECK(snap->applications[0].txid == 2);
  // Deleted ids may not be reused by auto-assignment: next id is a4.
  CHECK(again.add(app("", "p0", 0, 10, "Team Fighting", "Retaliation"), r).application_id == "a4");
}

TEST_CASE("store check callback vetoes writes") {
  testing::TempDir dir;
  AnnotationStore store(dir / "a.log");
  auto res = store.add(app("", "p0", 0, 10, "Team Fighting", "Retaliation"), final_rubric(),
                       [](const LabelApplication&) -> std::optional<ApplicationViolation> {
                         return ApplicationViolation{ViolationKind::UnknownMatch, {}, "no"};
                       });
  REQUIRE(res.violation);
  CHECK(res.violation->kind == ViolationKind::UnknownMatch);
  CHECK(std::filesystem::file_size(dir / "a.log") == 0);
}

TEST_CASE("crash at every log prefix") {
  testing::TempDir dir;
  const auto r = final_rubric();
  const auto path = dir / "full.log";
  // Acknowledged state after each operation, keyed by the log size at that point.
  std::vector<std::pair<std::uintmax_t, std::vector<LabelApplication>>> acked{{0, {}}};
  {
    AnnotationStore store(path);
    std::mt19937_64 rng(404);
    for (int op = 0; op < 40; ++op) {
      const auto snap = store.snapshot();
      if (!snap->applications.empty() && rng() % 4 == 0) {
        store.remove(snap->applications[rng() % snap->applications.size()].app.application_id);
      } else {
        const double start = double(rng() % 1000);
        store.add(app("", "p" + std::to_string(rng() % 10), start, start + 1 + double(rng() % 30), "Team Fighting",
                      "Focus Target", "rater_" + std::to_string(rng() % 2)),
                  r);
      }
      if (std::filesystem::file_size(path) != acked.back().first) {
        acked.emplace_back(std::filesystem::file_size(path), store.snapshot()->all());
      }
    }
  }
  const auto bytes = testing::read_file(path);
  REQUIRE(acked.back().first == bytes.size());
  REQUIRE(acked.size() > 30);

  std::size_t checked = 0;
  for (std::size_t len = 0; len <= bytes.size(); ++len) {
    const auto prefix_path = dir / "prefix.log";
    testing::write_file(prefix_path, bytes.substr(0, len));
    std::size_t state = 0;
    while (state + 1 < acked.size() && acked[state + 1].first <= len) ++state;
    {
      AnnotationStore store(prefix_path);
      CHECK(sorted_by_id(store.snapshot()->all()) == sorted_by_id(acked[state].second));
      // The torn tail is cut so the next append starts on a line boundary.
      CHECK(std::filesystem::file_size(prefix_path) == acked[state].first);
    }
    ++checked;
  }
  CHECK(checked == bytes.size() + 1);
}

TEST_CASE("corrupt complete lines are a storage failure") {
  testing::TempDir dir;
  testing::write_file(dir / "bad.log", "{\"txid\":1,\"op\":\"launch\"}\n");
  CHECK(code_of([&] { AnnotationStore s(dir / "bad.log"); }) == ErrorCode::StorageFailure);
  testing::write_file(dir / "bad2.log",
                      "{\"txid\":2,\"op\":\"delete\",\"application_id\":\"x\"}\n"
                      "{\"txid\":2,\"op\":\"delete\",\"application_id\":\"x\"}\n");
  CHECK(code_of([&] { AnnotationStore s(dir / "bad2.log"); }) == ErrorCode::StorageFailure);
}

TEST_CASE("100 concurrent writers") {
  testing::TempDir dir;
  const auto r = final_rubric();
  const auto path = dir / "soak.log";
  std::vector<AnnotationStore::AddResult> results(100);
  {
    AnnotationStore store(path);
    std::vector<std::thread> threads;
    for (int i = 0; i < 100; ++i) {
      threads.emplace_back([&, i] {
        results[i] = store.add(app("", "p" + std::to_string(i), 0, 10, "Team Fighting", "Focus Target"), r);
      });
    }
    for (auto& t : threads) t.join();
  }
  std::set<std::uint64_t> txids;
  for (const auto& res : results) {
    CHECK_FALSE(res.violation);
    txids.insert(res.txid);
  }
  CHECK(txids.size() == 100);
  CHECK(*txids.begin() == 1);
  CHECK(*txids.rbegin() == 100);

  AnnotationStore reopened(path);
  const auto snap = reopened.snapshot();
  REQUIRE(snap->applications.size() == 100);
  for (std::size_t i = 1; i < snap->applications.size(); ++i) {
    CHECK(snap->applications[i].txid > snap->applications[i - 1].txid);
  }
}
