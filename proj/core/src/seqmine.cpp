#include "seqlab/seqmine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "seqlab/error.hpp"

namespace seqlab::seqmine {

Pattern pattern_of(const DssSequence& seq, PatternMode mode) {
  if (mode == PatternMode::Dss) return seq.pattern();
  Pattern out;
  out.reserve(seq.tick_length());
  for (const auto& run : seq.runs) out.insert(out.end(), run.length, run.state);
  return out;
}

bool pattern_less(const Pattern& a, const Pattern& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::string format_pattern(const Pattern& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i > 0) out += '-';
    out += abstraction::to_string(p[i]);
  }
  return out;
}

FrequentSequenceTable top_frequent_sequences(const SequenceCorpus& corpus, std::size_t k,
                                             PatternMode mode) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (corpus.sequences.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no sequences");

  std::map<Pattern, std::size_t> counts;
  for (const auto& seq : corpus.sequences) ++counts[pattern_of(seq, mode)];

  std::vector<FrequentRow> rows;
  rows.reserve(counts.size());
  const double n = static_cast<double>(corpus.sequences.size());
  for (auto& [pattern, count] : counts) {
    rows.push_back(FrequentRow{pattern, count, static_cast<double>(count) / n});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const FrequentRow& a, const FrequentRow& b) {
    if (a.count != b.count) return a.count > b.count;
    return pattern_less(a.pattern, b.pattern);
  });
  if (rows.size() > k) rows.resize(k);

  FrequentSequenceTable table;
  table.corpus_size = corpus.sequences.size();
  table.rows = std::move(rows);
  for (const auto& r : table.rows) table.coverage += r.share;
  return table;
}

NgramTable mine_ngrams(const SequenceCorpus& corpus, std::size_t min_len, std::size_t max_len,
                       double min_support, PatternMode mode) {
  if (min_len < 1 || min_len > max_len) {
    throw Error(ErrorCode::InvalidArgument, "need 1 <= min_len <= max_len");
  }
  if (!(min_support > 0.0 && min_support <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "min_support must be in (0, 1]");
  }
  if (corpus.sequences.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no sequences");

  struct Tally {
    std::size_t sequences = 0;
    std::size_t occurrences = 0;
    std::size_t last_seen = static_cast<std::size_t>(-1);
  };
  std::map<Pattern, Tally> tallies;
  for (std::size_t s = 0; s < corpus.sequences.size(); ++s) {
    const Pattern p = pattern_of(corpus.sequences[s], mode);
    for (std::size_t start = 0; start < p.size(); ++start) {
      for (std::size_t n = min_len; n <= max_len && start + n <= p.size(); ++n) {
        auto& t = tallies[Pattern(p.begin() + static_cast<std::ptrdiff_t>(start),
                                  p.begin() + static_cast<std::ptrdiff_t>(start + n))];
        ++t.occurrences;
        if (t.last_seen != s) {
          t.last_seen = s;
          ++t.sequences;
        }
      }
    }
  }

  NgramTable table;
  table.corpus_size = corpus.sequences.size();
  const double n = static_cast<double>(corpus.sequences.size());
  for (auto& [gram, t] : tallies) {
    // Compare counts, not rounded fractions, so support == min_support is kept.
    if (static_cast<double>(t.sequences) < min_support * n - 1e-9) continue;
    table.rows.push_back(NgramRow{gram, static_cast<double>(t.sequences) / n, t.sequences, t.occurrences});
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const NgramRow& a, const NgramRow& b) {
    if (a.sequence_count != b.sequence_count) return a.sequence_count > b.sequence_count;
    if (a.ngram.size() != b.ngram.size()) return a.ngram.size() < b.ngram.size();
    return pattern_less(a.ngram, b.ngram);
  });
  return table;
}

std::array<std::string, abstraction::kStateCount> state_colors() {
  // Order follows abstraction::kAllStates.
  return {"#8dd3c7", "#fb8072", "#e31a1c", "#80b1d3", "#252525",
          "#fdb462", "#b3de69", "#fccde5", "#bc80bd", "#1f78b4"};
}

PlotSpec plot_data(const FrequentSequenceTable& table) {
  if (table.rows.empty()) throw Error(ErrorCode::EmptyTable, "frequency table has no rows");
  PlotSpec spec;
  spec.colors = state_colors();
  spec.coverage = table.coverage;
  double offset = 0.0;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    spec.bands.push_back(PlotBand{i + 1, row.pattern, offset, row.share});
    offset += row.share;
    spec.max_operations = std::max(spec.max_operations, row.pattern.size());
  }
  return spec;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  using L = SvgLayout;
  if (spec.bands.empty()) throw Error(ErrorCode::EmptyTable, "plot has no bands");
  const double ops = static_cast<double>(std::max<std::size_t>(spec.max_operations, 1));
  const double cell_w = L::plot_width() / ops;
  const double y_scale = spec.coverage > 0.0 ? L::plot_height() / spec.coverage : 0.0;
  const double baseline = L::kTop + L::plot_height();

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(L::kWidth) + "\" height=\"" +
         fmt(L::kHeight) + "\" viewBox=\"0 0 " + fmt(L::kWidth) + " " + fmt(L::kHeight) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + fmt(L::kWidth) + "\" height=\"" + fmt(L::kHeight) +
         "\" fill=\"#ffffff\"/>\n";

  for (const auto& band : spec.bands) {
    const double h = band.height * y_scale;
    const double y = baseline - (band.y_offset + band.height) * y_scale;
    svg += "<g class=\"band\" data-rank=\"" + std::to_string(band.rank) + "\" data-share=\"" +
           fmt(band.height) + "\">\n";
    for (std::size_t op = 0; op < band.pattern.size(); ++op) {
      const auto state = band.pattern[op];
      svg += "<rect data-rank=\"" + std::to_string(band.rank) + "\" data-op=\"" +
             std::to_string(op + 1) + "\" data-state=\"" + std::string(abstraction::to_string(state)) +
             "\" x=\"" + fmt(L::kLeft + static_cast<double>(op) * cell_w) + "\" y=\"" + fmt(y) +
             "\" width=\"" + fmt(cell_w) + "\" height=\"" + fmt(h) + "\" fill=\"" +
             spec.colors[abstraction::index_of(state)] + "\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>\n";
    }
    svg += "</g>\n";
  }

  // Axes.
  svg += "<line x1=\"" + fmt(L::kLeft) + "\" y1=\"" + fmt(L::kTop) + "\" x2=\"" + fmt(L::kLeft) +
         "\" y2=\"" + fmt(baseline) + "\" stroke=\"#000000\"/>\n";
  svg += "<line x1=\"" + fmt(L::kLeft) + "\" y1=\"" + fmt(baseline) + "\" x2=\"" +
         fmt(L::kLeft + L::plot_width()) + "\" y2=\"" + fmt(baseline) + "\" stroke=\"#000000\"/>\n";
  svg += "<text class=\"y-label\" x=\"" + fmt(L::kLeft - 6) + "\" y=\"" + fmt(L::kTop + 4) +
         "\" text-anchor=\"end\" font-size=\"10\">" + fmt(spec.coverage * 100.0) + "%</text>\n";
  svg += "<text x=\"" + fmt(L::kLeft - 6) + "\" y=\"" + fmt(baseline) +
         "\" text-anchor=\"end\" font-size=\"10\">0%</text>\n";
  for (std::size_t op = 1; op <= spec.max_operations; ++op) {
    svg += "<text class=\"x-tick\" x=\"" +
           fmt(L::kLeft + (static_cast<double>(op) - 0.5) * cell_w) + "\" y=\"" + fmt(baseline + 14) +
           "\" text-anchor=\"middle\" font-size=\"9\">" + std::to_string(op) + "</text>\n";
  }
  svg += "<text x=\"" + fmt(L::kLeft + L::plot_width() / 2) + "\" y=\"" + fmt(L::kHeight - 6) +
         "\" text-anchor=\"middle\" font-size=\"11\">operation</text>\n";

  // Color key.
  const double key_x = L::kLeft + L::plot_width() + 12;
  for (std::size_t i = 0; i < abstraction::kStateCount; ++i) {
    const double y = L::kTop + static_cast<double>(i) * 18.0;
    svg += "<rect class=\"key\" data-state=\"" + std::string(abstraction::to_string(abstraction::kAllStates[i])) +
           "\" x=\"" + fmt(key_x) + "\" y=\"" + fmt(y) + "\" width=\"12\" height=\"12\" fill=\"" +
           spec.colors[i] + "\"/>\n";
    svg += "<text x=\"" + fmt(key_x + 16) + "\" y=\"" + fmt(y + 10) + "\" font-size=\"10\">" +
           std::string(abstraction::to_string(abstraction::kAllStates[i])) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::size_t BehaviorGraph::total_transitions() const {
  std::size_t total = 0;
  for (const auto& [edge, count] : edges) total += count;
  return total;
}

BehaviorGraph build_behavior_graph(const SequenceCorpus& corpus) {
  BehaviorGraph graph;
  for (const auto& seq : corpus.sequences) {
    for (std::size_t i = 0; i < seq.runs.size(); ++i) {
      ++graph.visits[abstraction::index_of(seq.runs[i].state)];
      if (i + 1 < seq.runs.size()) ++graph.edges[{seq.runs[i].state, seq.runs[i + 1].state}];
    }
  }
  return graph;
}

}  // namespace seqlab::seqmine
