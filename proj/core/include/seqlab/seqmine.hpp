#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "seqlab/abstraction.hpp"
#include "seqlab/segmentation.hpp"

namespace seqlab::seqmine {

using abstraction::BehaviorState;
using abstraction::DssSequence;
using Pattern = std::vector<BehaviorState>;

struct SequenceCorpus {
  segmentation::Segment segment = segmentation::Segment::Early;
  std::vector<DssSequence> sequences;
};

// Dss counts state episodes (run-state list); RawTicks counts one symbol per tick.
enum class PatternMode { Dss, RawTicks };

Pattern pattern_of(const DssSequence& seq, PatternMode mode = PatternMode::Dss);

// Orders patterns by the state alphabet, element by element, shorter first on
// a shared prefix.
bool pattern_less(const Pattern& a, const Pattern& b);

std::string format_pattern(const Pattern& p);  // "solo-fight-death"

struct FrequentRow {
  Pattern pattern;
  std::size_t count = 0;
  double share = 0.0;

  friend bool operator==(const FrequentRow&, const FrequentRow&) = default;
};

struct FrequentSequenceTable {
  std::vector<FrequentRow> rows;  // count desc, then pattern_less
  double coverage = 0.0;          // sum of listed shares
  std::size_t corpus_size = 0;
};

// Throws Error(EmptyCorpus) or Error(InvalidArgument) for k == 0.
FrequentSequenceTable top_frequent_sequences(const SequenceCorpus& corpus, std::size_t k,
                                             PatternMode mode = PatternMode::Dss);

struct NgramRow {
  Pattern ngram;
  double support = 0.0;               // fraction of sequences containing it
  std::size_t sequence_count = 0;     // number of sequences containing it
  std::size_t occurrence_count = 0;   // overlapping occurrences, all sequences

  friend bool operator==(const NgramRow&, const NgramRow&) = default;
};

struct NgramTable {
  std::vector<NgramRow> rows;  // support desc, length asc, pattern_less
  std::size_t corpus_size = 0;
};

// Contiguous n-grams with min_len <= n <= max_len and support >= min_support.
NgramTable mine_ngrams(const SequenceCorpus& corpus, std::size_t min_len, std::size_t max_len,
                       double min_support, PatternMode mode = PatternMode::Dss);

// --- frequency plot --------------------------------------------------------

struct PlotBand {
  std::size_t rank = 0;  // 1 = most frequent, drawn at the bottom
  Pattern pattern;
  double y_offset = 0.0;  // cumulative share below this band
  double height = 0.0;    // equal to the row's share
};

struct PlotSpec {
  std::vector<PlotBand> bands;
  std::size_t max_operations = 0;  // x-axis domain: 0..max_operations
  double coverage = 0.0;
  std::array<std::string, abstraction::kStateCount> colors;  // by state index
};

std::array<std::string, abstraction::kStateCount> state_colors();

PlotSpec plot_data(const FrequentSequenceTable& table);  // throws Error(EmptyTable)
std::string render_svg(const PlotSpec& spec);

// Drawing geometry shared by render_svg and anything that reads the SVG back.
struct SvgLayout {
  static constexpr double kWidth = 640.0;
  static constexpr double kHeight = 420.0;
  static constexpr double kLeft = 60.0;
  static constexpr double kRight = 150.0;
  static constexpr double kTop = 20.0;
  static constexpr double kBottom = 40.0;
  static constexpr double plot_width() { return kWidth - kLeft - kRight; }
  static constexpr double plot_height() { return kHeight - kTop - kBottom; }
};

// --- transition graph ------------------------------------------------------

struct BehaviorGraph {
  std::array<std::size_t, abstraction::kStateCount> visits{};  // runs per state
  std::map<std::pair<BehaviorState, BehaviorState>, std::size_t> edges;

  std::size_t total_transitions() const;
};

BehaviorGraph build_behavior_graph(const SequenceCorpus& corpus);

}  // namespace seqlab::seqmine
