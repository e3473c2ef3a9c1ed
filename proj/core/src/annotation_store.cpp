#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "seqlab/annotation.hpp"
#include "seqlab/error.hpp"

namespace seqlab::annotation {

using ojson = nlohmann::ordered_json;

std::vector<LabelApplication> StoreSnapshot::all() const {
  std::vector<LabelApplication> out;
  out.reserve(applications.size());
  for (const auto& s : applications) out.push_back(s.app);
  return out;
}

AnnotationSet StoreSnapshot::for_annotator(std::string_view annotator_id) const {
  AnnotationSet set;
  set.annotator_id = std::string(annotator_id);
  for (const auto& s : applications) {
    if (s.app.annotator_id == annotator_id) set.applications.push_back(s.app);
  }
  return set;
}

std::vector<std::string> StoreSnapshot::annotators() const {
  std::set<std::string> ids;
  for (const auto& s : applications) ids.insert(s.app.annotator_id);
  return {ids.begin(), ids.end()};
}

namespace {

[[noreturn]] void storage_failure(const std::string& what) {
  throw Error(ErrorCode::StorageFailure, what);
}

std::string errno_text() { return std::strerror(errno); }

}  // namespace

AnnotationStore::AnnotationStore(std::filesystem::path log_path) : path_(std::move(log_path)) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  std::string content;
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) storage_failure("cannot read " + path_.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    content = ss.str();
  }

  // Only newline-terminated lines were acknowledged.
  const auto last_nl = content.rfind('\n');
  const std::size_t durable = last_nl == std::string::npos ? 0 : last_nl + 1;

  auto snap = std::make_shared<StoreSnapshot>();
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < durable) {
    const std::size_t nl = content.find('\n', pos);
    const std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
      const auto txid = j.at("txid").get<std::uint64_t>();
      if (txid <= snap->last_txid) storage_failure("non-increasing txid on line " + std::to_string(line_no));
      const auto op = j.at("op").get<std::string>();
      if (op == "add") {
        auto app = parse_application(j.at("application").dump());
        snap->applications.push_back(StoredApplication{txid, std::move(app)});
      } else if (op == "delete") {
        const auto id = j.at("application_id").get<std::string>();
        std::erase_if(snap->applications, [&](const StoredApplication& s) { return s.app.application_id == id; });
      } else {
        storage_failure("unknown op '" + op + "' on line " + std::to_string(line_no));
      }
      snap->last_txid = txid;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::StorageFailure) throw;
      storage_failure("corrupt log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      storage_failure("corrupt log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  snapshot_ = std::move(snap);

  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) storage_failure("cannot open " + path_.string() + ": " + errno_text());
  if (durable != content.size()) {
    if (::ftruncate(fd_, static_cast<off_t>(durable)) != 0) {
      storage_failure("cannot truncate torn tail of " + path_.string() + ": " + errno_text());
    }
  }
}

AnnotationStore::~AnnotationStore() {
  if (fd_ >= 0) ::close(fd_);
}

void AnnotationStore::append_line(const std::string& line) {
  std::string buf = line;
  buf += '\n';
  std::size_t written = 0;
  while (written < buf.size()) {
    const auto n = ::write(fd_, buf.data() + written, buf.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      storage_failure("write to " + path_.string() + " failed: " + errno_text());
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) storage_failure("fsync of " + path_.string() + " failed: " + errno_text());
}

AnnotationStore::AddResult AnnotationStore::add(LabelApplication app, const Rubric& rubric,
                                                const Check& check) {
  std::lock_guard writer(write_mutex_);
  const auto current = snapshot();
  AddResult result;
  const std::uint64_t txid = current->last_txid + 1;
  if (app.application_id.empty()) app.application_id = "a" + std::to_string(txid);
  result.application_id = app.application_id;

  for (const auto& s : current->applications) {
    if (s.app.application_id == app.application_id) {
      result.violation = ApplicationViolation{ViolationKind::DuplicateId, s.app.application_id,
                                              "application id already used"};
      return result;
    }
  }
  if (check) {
    if (auto v = check(app)) {
      result.violation = std::move(v);
      return result;
    }
  }
  if (auto v = validate_application(rubric, current->for_annotator(app.annotator_id), app)) {
    result.violation = std::move(v);
    return result;
  }

  ojson line;
  line["txid"] = txid;
  line["op"] = "add";
  line["application"] = ojson::parse(application_to_json_line(app));
  append_line(line.dump());

  auto next = std::make_shared<StoreSnapshot>(*current);
  next->last_txid = txid;
  next->applications.push_back(StoredApplication{txid, std::move(app)});
  {
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(next);
  }
  result.txid = txid;
  return result;
}

std::optional<std::uint64_t> AnnotationStore::remove(std::string_view application_id) {
  std::lock_guard writer(write_mutex_);
  const auto current = snapshot();
  const auto it = std::find_if(current->applications.begin(), current->applications.end(),
                               [&](const StoredApplication& s) { return s.app.application_id == application_id; });
  if (it == current->applications.end()) return std::nullopt;

  const std::uint64_t txid = current->last_txid + 1;
  ojson line;
  line["txid"] = txid;
  line["op"] = "delete";
  line["application_id"] = std::string(application_id);
  append_line(line.dump());

  auto next = std::make_shared<StoreSnapshot>(*current);
  next->last_txid = txid;
  std::erase_if(next->applications,
                [&](const StoredApplication& s) { return s.app.application_id == application_id; });
  {
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(next);
  }
  return txid;
}

std::shared_ptr<const StoreSnapshot> AnnotationStore::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

}  // namespace seqlab::annotation
