// seqlab: command-line front end for the analysis pipeline and the service.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "seqlab/error.hpp"
#include "seqlab/json_io.hpp"
#include "seqlab/pipeline.hpp"
#include "seqlab/server.hpp"
#include "seqlab/workspace.hpp"

namespace fs = std::filesystem;
using namespace seqlab;
using json_io::Json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// Writes to `path`, or stdout when it is empty. JSON bodies get a newline.
void emit(const std::string& path, const std::string& body) {
  if (path.empty()) {
    std::cout << body << '\n';
  } else {
    write_file(path, body + "\n");
  }
}

std::vector<telemetry::MatchLog> load_match_dir(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::vector<telemetry::MatchLog> logs;
  for (const auto& f : files) {
    try {
      logs.push_back(telemetry::parse_match_log(read_file(f.string())));
    } catch (const Error& e) {
      throw Error(e.code(), f.string() + ": " + e.what(), e.index());
    }
  }
  std::sort(logs.begin(), logs.end(), [](const auto& a, const auto& b) { return a.match_id < b.match_id; });
  return logs;
}

std::vector<pipeline::AnalyzedMatch> analyze_all(std::vector<telemetry::MatchLog> logs,
                                                 const abstraction::ProximityConfig& cfg = {}) {
  std::vector<pipeline::AnalyzedMatch> out;
  for (auto& log : logs) out.push_back(pipeline::analyze_match(std::move(log), cfg));
  return out;
}

// Boundaries only; enough for agreement, which needs no state sequences.
std::vector<pipeline::AnalyzedMatch> headers_only(std::vector<telemetry::MatchLog> logs) {
  std::vector<pipeline::AnalyzedMatch> out;
  for (auto& log : logs) {
    pipeline::AnalyzedMatch m;
    m.boundaries = segmentation::find_boundaries(log);
    m.log = std::move(log);
    out.push_back(std::move(m));
  }
  return out;
}

annotation::AnnotationSet load_set(const std::string& path) {
  auto apps = annotation::parse_applications(read_file(path));
  if (apps.empty()) return annotation::AnnotationSet{};
  const std::string id = apps.front().annotator_id;
  return annotation::make_set(id, std::move(apps));
}

seqmine::SequenceCorpus corpus_from_file(const std::string& path, segmentation::Segment segment) {
  seqmine::SequenceCorpus corpus;
  corpus.segment = segment;
  for (auto& ts : json_io::parse_sequences(read_file(path))) {
    if (ts.segment && *ts.segment != segment) continue;
    if (ts.sequence.entries.empty()) continue;
    corpus.sequences.push_back(abstraction::compress_dss(ts.sequence));
  }
  return corpus;
}

segmentation::Segment to_segment(const std::string& name) {
  const auto s = segmentation::segment_from_string(name);
  if (!s) throw Error(ErrorCode::InvalidArgument, "segment must be early, mid or late");
  return *s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seqlab: behavior-sequence analysis of match telemetry"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic match telemetry");
  int players = 10;
  std::uint64_t seed = 1;
  std::string synth_out;
  std::string synth_id = "synth";
  int sample_every = 1;
  bool surrender = false;
  std::string corpus_dir;
  std::size_t corpus_complete = 15;
  std::size_t corpus_surrendered = 5;
  synth->add_option("--players", players, "Players per match (two teams of five)")->capture_default_str();
  synth->add_option("--seed", seed, "Random seed")->required();
  synth->add_option("--out", synth_out, "Output telemetry file");
  synth->add_option("--match-id", synth_id, "Match id")->capture_default_str();
  synth->add_option("--sample-every", sample_every, "Position sample stride in ticks")->capture_default_str();
  synth->add_flag("--surrender", surrender, "End the match before any tier-3 tower falls");
  synth->add_option("--corpus", corpus_dir, "Write a whole corpus into this directory instead of one match");
  synth->add_option("--complete", corpus_complete, "Corpus matches that reach late game")->capture_default_str();
  synth->add_option("--surrendered", corpus_surrendered, "Corpus matches that end early")->capture_default_str();

  // validate
  auto* validate = app.add_subcommand("validate", "Parse and validate a telemetry file");
  std::string validate_file;
  validate->add_option("file", validate_file)->required();

  // abstract
  auto* abstract = app.add_subcommand("abstract", "Abstract telemetry into per-player state sequences");
  std::vector<std::string> abstract_files;
  double radius = 81.92;
  double tick = 1.0;
  std::string abstract_out;
  bool split = false;
  bool complete_only = false;
  abstract->add_option("files", abstract_files)->required();
  abstract->add_option("--radius", radius)->capture_default_str();
  abstract->add_option("--tick", tick)->capture_default_str();
  abstract->add_option("--out", abstract_out);
  abstract->add_flag("--split", split, "Split each sequence by game segment");
  abstract->add_flag("--complete-only", complete_only, "Skip matches that never reached late game");

  // segment
  auto* segment = app.add_subcommand("segment", "Find early/mid/late boundaries");
  std::string segment_file;
  std::string segment_out;
  segment->add_option("file", segment_file)->required();
  segment->add_option("--out", segment_out);

  // mine
  auto* mine = app.add_subcommand("mine", "Frequent sequences and n-grams of one segment");
  std::string mine_file;
  std::string mine_segment = "early";
  pipeline::MineParams mine_params;
  std::string mine_svg;
  std::string mine_out;
  mine->add_option("file", mine_file)->required();
  mine->add_option("--segment", mine_segment)->capture_default_str()->check(CLI::IsMember({"early", "mid", "late"}));
  mine->add_option("--top", mine_params.top)->capture_default_str();
  mine->add_option("--ngram-min", mine_params.ngram_min)->capture_default_str();
  mine->add_option("--ngram-max", mine_params.ngram_max)->capture_default_str();
  mine->add_option("--min-support", mine_params.min_support)->capture_default_str();
  mine->add_option("--svg", mine_svg, "Write the frequency plot");
  mine->add_option("--out", mine_out);

  // dtw
  auto* dtwc = app.add_subcommand("dtw", "DTW distances, clustering and 2-D embedding");
  std::string dtw_file;
  std::string dtw_segment = "late";
  pipeline::DtwParams dtw_params;
  std::string linkage = "average";
  std::size_t band = 0;
  std::string dtw_out;
  std::string embed_out;
  dtwc->add_option("file", dtw_file)->required();
  dtwc->add_option("--segment", dtw_segment)->capture_default_str()->check(CLI::IsMember({"early", "mid", "late"}));
  dtwc->add_flag("--normalize", dtw_params.normalize, "Divide by the warping-path length");
  dtwc->add_option("--k", dtw_params.k)->capture_default_str();
  dtwc->add_option("--linkage", linkage)->capture_default_str()->check(CLI::IsMember({"average", "complete"}));
  auto* band_opt = dtwc->add_option("--band", band, "Sakoe-Chiba radius");
  dtwc->add_option("--threads", dtw_params.threads, "Worker threads (0: all cores)");
  dtwc->add_option("--out", dtw_out, "Distance matrix JSON");
  dtwc->add_option("--embed", embed_out, "Embedding and clusters JSON");

  // kappa
  auto* kappa = app.add_subcommand("kappa", "Inter-rater agreement between two annotators");
  std::string kappa_a;
  std::string kappa_b;
  std::string kappa_matches;
  std::string kappa_rubric;
  std::string kappa_workspace;
  double window = 5.0;
  std::string kappa_out;
  kappa->add_option("--a", kappa_a, "Annotation file (or annotator id with --workspace)")->required();
  kappa->add_option("--b", kappa_b, "Annotation file (or annotator id with --workspace)")->required();
  kappa->add_option("--matches", kappa_matches, "Directory of telemetry files");
  kappa->add_option("--rubric", kappa_rubric);
  kappa->add_option("--workspace", kappa_workspace);
  kappa->add_option("--window", window)->capture_default_str();
  kappa->add_option("--out", kappa_out);

  // report
  auto* reportc = app.add_subcommand("report", "Label and state frequencies by game segment");
  std::string report_annotations;
  std::string report_matches;
  std::string report_workspace;
  std::string report_annotator;
  std::string report_out;
  std::string report_csv;
  std::string first = "Team Fighting/Focus Target";
  std::string second = "Solo Recovery/Farming";
  double gap = report::kDefaultFollowupGapS;
  bool no_death = false;
  reportc->add_option("--annotations", report_annotations);
  reportc->add_option("--matches", report_matches);
  reportc->add_option("--workspace", report_workspace);
  reportc->add_option("--annotator", report_annotator, "Only this annotator's applications");
  reportc->add_option("--out", report_out);
  reportc->add_option("--csv", report_csv);
  reportc->add_option("--first", first, "Follow-up source as Label/Tag")->capture_default_str();
  reportc->add_option("--second", second, "Follow-up target as Label/Tag")->capture_default_str();
  reportc->add_option("--gap", gap, "Follow-up window in seconds")->capture_default_str();
  reportc->add_flag("--no-death", no_death, "Count follow-ups without requiring a death");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Add matches, a rubric or annotations to a workspace");
  std::string ingest_workspace;
  std::vector<std::string> ingest_files;
  std::string ingest_rubric;
  std::string ingest_annotations;
  ingest->add_option("--workspace", ingest_workspace)->required();
  ingest->add_option("files", ingest_files, "Telemetry files");
  ingest->add_option("--rubric", ingest_rubric);
  ingest->add_option("--annotations", ingest_annotations);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string serve_workspace;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  serve->add_option("--workspace", serve_workspace)->required();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--static", static_dir, "Directory served at /");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      if (players != 2 * telemetry::kPlayersPerTeam) {
        throw Error(ErrorCode::InvalidConfig, "only two teams of five are supported");
      }
      if (!corpus_dir.empty()) {
        fs::create_directories(corpus_dir);
        pipeline::CorpusSpec spec;
        spec.complete = corpus_complete;
        spec.surrendered = corpus_surrendered;
        spec.seed = seed;
        spec.sample_every_ticks = sample_every;
        Json files = Json::array();
        for (const auto& log : pipeline::generate_corpus(spec)) {
          const auto text = telemetry::serialize_match_log(log);
          write_file((fs::path(corpus_dir) / (log.match_id + ".jsonl")).string(), text);
          char hash[17];
          std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(server::fnv1a(text)));
          files.push_back(Json{{"file", log.match_id + ".jsonl"},
                               {"match_id", log.match_id},
                               {"fnv1a64", hash},
                               {"reached_late", segmentation::find_boundaries(log).reached_late()}});
        }
        const Json manifest{{"generator", Json{{"complete", spec.complete},
                                               {"surrendered", spec.surrendered},
                                               {"seed", spec.seed},
                                               {"sample_every_ticks", spec.sample_every_ticks}}},
                            {"files", std::move(files)}};
        write_file((fs::path(corpus_dir) / "MANIFEST.json").string(), manifest.dump(2) + "\n");
        return 0;
      }
      if (synth_out.empty()) throw Error(ErrorCode::InvalidArgument, "--out or --corpus is required");
      telemetry::SynthConfig cfg;
      cfg.match_id = synth_id;
      cfg.sample_every_ticks = sample_every;
      cfg.surrender_before_late = surrender;
      write_file(synth_out, telemetry::serialize_match_log(telemetry::generate_synthetic_match(cfg, seed)));
      return 0;
    }

    if (*validate) {
      try {
        const auto log = telemetry::parse_match_log(read_file(validate_file));
        std::cout << "ok " << log.match_id << " (" << log.events.size() << " events)\n";
        return 0;
      } catch (const Error& e) {
        std::cerr << validate_file << ": " << e.what() << '\n';
        return 1;
      }
    }

    if (*abstract) {
      abstraction::ProximityConfig cfg;
      cfg.radius = radius;
      cfg.tick_interval_s = tick;
      std::vector<telemetry::MatchLog> logs;
      for (const auto& f : abstract_files) logs.push_back(telemetry::parse_match_log(read_file(f)));
      std::vector<json_io::TaggedSequence> out;
      for (const auto& m : analyze_all(std::move(logs), cfg)) {
        if (complete_only && !m.boundaries.reached_late()) continue;
        for (const auto& seq : m.sequences) {
          if (!split) {
            out.push_back({seq, std::nullopt});
            continue;
          }
          const auto parts = segmentation::split_sequence(seq, m.boundaries);
          for (auto s : segmentation::kAllSegments) {
            const auto& part = parts[static_cast<std::size_t>(s)];
            if (!part.entries.empty()) out.push_back({part, s});
          }
        }
      }
      const auto text = json_io::serialize_sequences(out);
      if (abstract_out.empty()) {
        std::cout << text;
      } else {
        write_file(abstract_out, text);
      }
      return 0;
    }

    if (*segment) {
      const auto log = telemetry::parse_match_log(read_file(segment_file));
      Json j{{"match_id", log.match_id}};
      const Json b = json_io::boundaries_to_json(segmentation::find_boundaries(log));
      for (const auto& [k, v] : b.items()) j[k] = v;
      emit(segment_out, j.dump());
      return 0;
    }

    if (*mine) {
      const auto corpus = corpus_from_file(mine_file, to_segment(mine_segment));
      mine_params.segment = corpus.segment;
      emit(mine_out, pipeline::mine_corpus(corpus, mine_params).dump());
      if (!mine_svg.empty()) {
        const auto table = seqmine::top_frequent_sequences(corpus, mine_params.top);
        write_file(mine_svg, seqmine::render_svg(seqmine::plot_data(table)));
      }
      return 0;
    }

    if (*dtwc) {
      dtw_params.segment = to_segment(dtw_segment);
      dtw_params.linkage = linkage == "complete" ? dtw::Linkage::Complete : dtw::Linkage::Average;
      if (band_opt->count() > 0) dtw_params.band = band;
      const auto result = pipeline::dtw_corpus(corpus_from_file(dtw_file, dtw_params.segment), dtw_params);
      if (!embed_out.empty()) write_file(embed_out, pipeline::embedding(result, dtw_params).dump() + "\n");
      if (!dtw_out.empty() || embed_out.empty()) emit(dtw_out, json_io::distance_matrix_to_json(result.distances).dump());
      return 0;
    }

    if (*kappa) {
      if (!kappa_workspace.empty()) {
        server::Workspace ws(kappa_workspace);
        emit(kappa_out, ws.irr_body(kappa_a, kappa_b, window));
        return 0;
      }
      if (kappa_matches.empty() || kappa_rubric.empty()) {
        throw Error(ErrorCode::InvalidArgument, "file mode needs --matches and --rubric");
      }
      const auto rubric = annotation::load_rubric(read_file(kappa_rubric));
      const auto matches = headers_only(load_match_dir(kappa_matches));
      emit(kappa_out, pipeline::irr(matches, load_set(kappa_a), load_set(kappa_b), window, rubric).dump());
      return 0;
    }

    if (*reportc) {
      pipeline::ReportParams params;
      params.followup_first = pipeline::parse_label_tag(first);
      params.followup_second = pipeline::parse_label_tag(second);
      params.followup_gap_s = gap;
      params.followup_requires_death = !no_death;
      const std::optional<std::string> annotator =
          report_annotator.empty() ? std::nullopt : std::optional(report_annotator);
      if (!report_workspace.empty()) {
        server::Workspace ws(report_workspace);
        emit(report_out, ws.report_body(params, annotator));
        if (!report_csv.empty()) write_file(report_csv, ws.report_csv(annotator));
        return 0;
      }
      if (report_annotations.empty() || report_matches.empty()) {
        throw Error(ErrorCode::InvalidArgument, "file mode needs --annotations and --matches");
      }
      const auto matches = analyze_all(load_match_dir(report_matches));
      auto apps = annotation::parse_applications(read_file(report_annotations));
      if (annotator) std::erase_if(apps, [&](const auto& a) { return a.annotator_id != *annotator; });
      const annotation::AnnotationSet set{annotator.value_or(""), std::move(apps)};
      emit(report_out, pipeline::segment_report(matches, set, params).dump());
      if (!report_csv.empty()) write_file(report_csv, report::export_csv(pipeline::label_report(matches, set)));
      return 0;
    }

    if (*ingest) {
      server::Workspace ws(ingest_workspace);
      Json summary{{"matches", Json::array()}, {"annotations_added", 0}, {"annotations_rejected", Json::array()}};
      if (!ingest_rubric.empty()) ws.set_rubric(annotation::load_rubric(read_file(ingest_rubric)));
      for (const auto& f : ingest_files) {
        try {
          summary["matches"].push_back(ws.ingest(read_file(f)));
        } catch (const Error& e) {
          throw Error(e.code(), f + ": " + e.what(), e.index());
        }
      }
      if (!ingest_annotations.empty()) {
        int added = 0;
        for (auto& a : annotation::parse_applications(read_file(ingest_annotations))) {
          const std::string id = a.application_id;
          const auto result = ws.annotate(std::move(a));
          if (result.violation) {
            Json v = json_io::violation_to_json(*result.violation);
            v["application_id"] = id;
            summary["annotations_rejected"].push_back(std::move(v));
          } else {
            ++added;
          }
        }
        summary["annotations_added"] = added;
      }
      std::cout << summary.dump() << '\n';
      return summary["annotations_rejected"].empty() ? 0 : 1;
    }

    if (*serve) {
      // Signals are taken by a dedicated thread so that stop() runs outside a
      // signal handler.
      sigset_t signals;
      sigemptyset(&signals);
      sigaddset(&signals, SIGINT);
      sigaddset(&signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &signals, nullptr);

      server::Workspace ws(serve_workspace);
      server::HttpServer http(ws, static_dir.empty() ? std::nullopt : std::optional<fs::path>(static_dir));
      const int bound = http.bind(host, port);
      if (bound < 0) throw Error(ErrorCode::StorageFailure, "cannot bind " + host + ":" + std::to_string(port));
      std::cerr << "listening on http://" << host << ":" << bound << '\n';
      std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        http.stop();
      });
      const bool ok = http.run();
      pthread_kill(waiter.native_handle(), SIGTERM);
      waiter.join();
      return ok ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
