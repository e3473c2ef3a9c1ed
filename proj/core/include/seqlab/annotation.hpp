#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seqlab::annotation {

// --- rubric ----------------------------------------------------------------

struct RubricTag {
  std::string name;
  std::string description;

  friend bool operator==(const RubricTag&, const RubricTag&) = default;
};

struct RubricLabel {
  std::string name;
  std::vector<RubricTag> tags;

  friend bool operator==(const RubricLabel&, const RubricLabel&) = default;
};

struct Rubric {
  std::vector<RubricLabel> labels;

  const RubricLabel* find(std::string_view label) const;
  bool contains(std::string_view label, std::string_view tag) const;

  friend bool operator==(const Rubric&, const Rubric&) = default;
};

// Reads the rubric file format:
//
//   [[label]]
//   name = "Team Fighting"
//   [[label.tag]]
//   name = "Focus Target"
//   description = "..."
//
// Throws Error(DuplicateLabel), Error(DuplicateTag) or Error(Malformed).
Rubric load_rubric(std::string_view text);
std::string rubric_to_toml(const Rubric& rubric);
// Throws DuplicateLabel / DuplicateTag / Malformed (empty names).
void check_rubric(const Rubric& rubric);

// --- applications ----------------------------------------------------------

struct LabelApplication {
  std::string application_id;
  std::string annotator_id;
  std::string match_id;
  std::string player_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string label;
  std::string tag;

  double midpoint() const { return 0.5 * (start_s + end_s); }
  bool covers(double t) const { return start_s <= t && t < end_s; }
  std::string category() const { return label + "/" + tag; }

  friend bool operator==(const LabelApplication&, const LabelApplication&) = default;
};

struct AnnotationSet {
  std::string annotator_id;
  std::vector<LabelApplication> applications;
};

// One JSON object per line (see README for the field list). Throws
// Error(Malformed) with the 1-based line number.
std::vector<LabelApplication> parse_applications(std::string_view text);
LabelApplication parse_application(std::string_view json_object);
std::string serialize_applications(std::span<const LabelApplication> apps);
std::string application_to_json_line(const LabelApplication& app);  // no newline

// Applications of one annotator; throws Error(InvalidArgument) if the list
// mixes annotators.
AnnotationSet make_set(std::string annotator_id, std::vector<LabelApplication> apps);

enum class ViolationKind : std::uint8_t {
  UnknownLabelTag,
  InvertedInterval,
  Overlap,
  AnnotatorMismatch,
  DuplicateId,
  UnknownMatch,
  UnknownPlayer,
};

std::string_view to_string(ViolationKind kind);

struct ApplicationViolation {
  ViolationKind kind;
  std::string existing_id;  // the conflicting application, for Overlap / DuplicateId
  std::string message;
};

std::optional<ApplicationViolation> validate_application(const Rubric& rubric,
                                                         const AnnotationSet& existing,
                                                         const LabelApplication& app);

// Every pairwise violation inside a stored set (overlaps, unknown pairs, ...).
std::vector<ApplicationViolation> audit(const Rubric& rubric, const AnnotationSet& set);

// --- agreement -------------------------------------------------------------

inline constexpr std::string_view kNoCategory = "none";

struct Horizon {
  double start_s = 0.0;
  double end_s = 0.0;
};

// Windows of `window_s` cut from the horizon (the last one may be short); each
// takes the category of the application covering its midpoint, else
// kNoCategory. Throws Error(InvalidArgument) for window_s <= 0.
std::vector<std::string> discretize(const AnnotationSet& set, std::string_view match_id,
                                    std::string_view player_id, Horizon horizon, double window_s);

struct KappaResult {
  double kappa = 0.0;
  double observed = 0.0;  // p_o
  double expected = 0.0;  // p_e
  bool degenerate = false;  // p_e == 1; kappa is 1 if p_o == 1 else 0
};

// Throws Error(LengthMismatch) or Error(Empty).
KappaResult cohen_kappa_detail(std::span<const std::string> a, std::span<const std::string> b);
double cohen_kappa(std::span<const std::string> a, std::span<const std::string> b);

struct ConfusionTable {
  std::vector<std::string> categories;  // sorted
  std::vector<std::size_t> counts;      // row = rater A, column = rater B
  std::size_t total = 0;

  std::size_t at(std::size_t row, std::size_t col) const { return counts[row * categories.size() + col]; }
  KappaResult kappa() const;
};

ConfusionTable confusion_table(std::span<const std::string> a, std::span<const std::string> b);

struct MatchHorizon {
  std::string match_id;
  std::vector<std::string> player_ids;
  double end_s = 0.0;
};

struct KappaReport {
  double window_s = 0.0;
  KappaResult overall;
  std::map<std::string, KappaResult> per_label;  // one-vs-rest, every rubric label
  ConfusionTable confusion;
  std::size_t n_windows = 0;
};

// Discretizes both sets for each (match, player) over [0, end_s), concatenates
// in match order then player order, and compares label/tag categories.
// Throws Error(UnknownLabel) for applications outside the rubric and
// Error(NotFound) for applications on matches or players not in `matches`.
KappaReport irr_report(const AnnotationSet& a, const AnnotationSet& b,
                       std::span<const MatchHorizon> matches, double window_s,
                       const Rubric& rubric);

// --- durable store ---------------------------------------------------------

struct StoredApplication {
  std::uint64_t txid = 0;
  LabelApplication app;
};

struct StoreSnapshot {
  std::uint64_t last_txid = 0;
  std::vector<StoredApplication> applications;  // txid order

  std::vector<LabelApplication> all() const;
  AnnotationSet for_annotator(std::string_view annotator_id) const;
  std::vector<std::string> annotators() const;  // sorted, unique
};

// Append-only log of add/delete transactions, one JSON line each, fsynced
// before a call returns. Writers serialize on a mutex; readers take immutable
// snapshots. A torn final line (no trailing newline) is discarded on open.
class AnnotationStore {
 public:
  // Extra check run under the writer lock (e.g. match/player existence).
  using Check = std::function<std::optional<ApplicationViolation>(const LabelApplication&)>;

  struct AddResult {
    std::string application_id;
    std::uint64_t txid = 0;
    std::optional<ApplicationViolation> violation;  // set => nothing was written
  };

  // Throws Error(StorageFailure) when the log cannot be opened or a complete
  // line fails to parse.
  explicit AnnotationStore(std::filesystem::path log_path);
  ~AnnotationStore();
  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  // Assigns "a<txid>" when application_id is empty.
  AddResult add(LabelApplication app, const Rubric& rubric, const Check& check = {});
  // Returns the txid of the delete, or nullopt if the id is unknown.
  std::optional<std::uint64_t> remove(std::string_view application_id);

  std::shared_ptr<const StoreSnapshot> snapshot() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  void append_line(const std::string& line);

  std::filesystem::path path_;
  int fd_ = -1;
  std::mutex write_mutex_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const StoreSnapshot> snapshot_;
};

}  // namespace seqlab::annotation
