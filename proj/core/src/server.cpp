#include "seqlab/server.hpp"

#include <charconv>
#include <sstream>

// Bursts of concurrent clients must not overflow the accept queue.
#define CPPHTTPLIB_LISTEN_BACKLOG 256
#include <httplib.h>

#include "seqlab/error.hpp"
#include "seqlab/json_io.hpp"

namespace seqlab::server {

using json_io::Json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict: return 409;
    case ErrorCode::StorageFailure: return 500;
    default: return 400;
  }
}

namespace {

constexpr const char* kJson = "application/json";

class BadRequest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void send_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, kJson);
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                std::optional<std::size_t> index = std::nullopt) {
  Json j{{"error", code}, {"message", message}};
  if (index) j["index"] = *index;
  send_json(res, status, j.dump());
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  auto v = req.get_param_value(name);
  if (v.empty()) return std::nullopt;
  return v;
}

double parse_double(const std::string& text, const char* name) {
  double v = 0.0;
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, v);
  if (ec != std::errc() || ptr != last) throw BadRequest(std::string("parameter '") + name + "' must be a number");
  return v;
}

std::size_t parse_size(const std::string& text, const char* name) {
  std::size_t v = 0;
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, v);
  if (ec != std::errc() || ptr != last) {
    throw BadRequest(std::string("parameter '") + name + "' must be a non-negative integer");
  }
  return v;
}

bool parse_bool(const std::string& text, const char* name) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw BadRequest(std::string("parameter '") + name + "' must be true or false");
}

segmentation::Segment parse_segment(const std::string& text) {
  const auto s = segmentation::segment_from_string(text);
  if (!s) throw BadRequest("segment must be early, mid or late");
  return *s;
}

std::optional<segmentation::Segment> segment_param(const httplib::Request& req) {
  const auto v = param(req, "segment");
  return v ? std::optional(parse_segment(*v)) : std::nullopt;
}

std::set<telemetry::EventKind> parse_kinds(const std::string& text) {
  std::set<telemetry::EventKind> kinds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    bool found = false;
    for (auto k : {telemetry::EventKind::PositionSample, telemetry::EventKind::Kill, telemetry::EventKind::Death,
                   telemetry::EventKind::TowerFall, telemetry::EventKind::MatchEnd}) {
      if (telemetry::to_string(k) == item) {
        kinds.insert(k);
        found = true;
      }
    }
    if (!found) throw BadRequest("unknown event kind '" + item + "'");
  }
  return kinds;
}

// Runs a handler, mapping library errors to JSON error responses.
template <typename F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const BadRequest& e) {
      send_error(res, 400, "BadRequest", e.what());
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what(), e.index());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "Malformed", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  Workspace& ws;
  httplib::Server http;

  // Keep-alive connections pin a worker each, so the pool is sized for many
  // idle clients rather than for the core count.
  static constexpr std::size_t kWorkers = 64;

  explicit Impl(Workspace& w) : ws(w) {
    http.new_task_queue = [] { return new httplib::ThreadPool(kWorkers); };
  }

  void routes(const std::optional<std::filesystem::path>& static_dir) {
    http.Get("/api/matches", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, ws.matches_body());
    }));
    http.Post("/api/matches", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto id = ws.ingest(req.body);
      send_json(res, 201, Json{{"match_id", id}}.dump());
    }));
    http.Get(R"(/api/matches/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, ws.match_body(req.matches[1].str()));
    }));
    http.Get(R"(/api/matches/([^/]+)/events)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      EventQuery q;
      if (auto v = param(req, "from")) q.from_s = parse_double(*v, "from");
      if (auto v = param(req, "to")) q.to_s = parse_double(*v, "to");
      if (auto v = param(req, "kinds")) q.kinds = parse_kinds(*v);
      send_json(res, 200, ws.events_body(req.matches[1].str(), q));
    }));
    http.Get(R"(/api/matches/([^/]+)/sequences)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const auto dss = param(req, "dss");
               send_json(res, 200,
                         ws.sequences_body(req.matches[1].str(), segment_param(req), dss && parse_bool(*dss, "dss")));
             }));
    http.Get("/api/rubric", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, ws.rubric_body());
    }));
    http.Put("/api/rubric", guarded([this](const httplib::Request& req, httplib::Response& res) {
      ws.set_rubric(json_io::rubric_from_json(Json::parse(req.body)));
      send_json(res, 200, ws.rubric_body());
    }));
    http.Post(R"(/api/matches/([^/]+)/annotations)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const std::string match_id = req.matches[1].str();
                Json body = Json::parse(req.body);
                if (!body.is_object()) throw BadRequest("body must be a JSON object");
                if (body.contains("match_id") && body["match_id"] != match_id) {
                  throw BadRequest("body match_id differs from the path");
                }
                body["match_id"] = match_id;
                auto app = annotation::parse_application(body.dump());
                const auto result = ws.annotate(std::move(app));
                if (result.violation) {
                  send_json(res, 422, json_io::violation_to_json(*result.violation).dump());
                  return;
                }
                send_json(res, 201, Json{{"application_id", result.application_id}, {"txid", result.txid}}.dump());
              }));
    http.Get("/api/annotations", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, ws.annotations_body(param(req, "annotator"), param(req, "match")));
    }));
    http.Delete(R"(/api/annotations/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto id = req.matches[1].str();
      const auto txid = ws.remove_annotation(id);
      if (!txid) throw Error(ErrorCode::NotFound, "no application '" + id + "'");
      send_json(res, 200, Json{{"application_id", id}, {"txid", *txid}}.dump());
    }));
    http.Get("/api/mine", guarded([this](const httplib::Request& req, httplib::Response& res) {
      pipeline::MineParams p;
      if (auto s = segment_param(req)) p.segment = *s;
      if (auto v = param(req, "top")) p.top = parse_size(*v, "top");
      if (auto v = param(req, "min_support")) p.min_support = parse_double(*v, "min_support");
      if (auto v = param(req, "ngram_min")) p.ngram_min = parse_size(*v, "ngram_min");
      if (auto v = param(req, "ngram_max")) p.ngram_max = parse_size(*v, "ngram_max");
      send_json(res, 200, ws.mine_body(p));
    }));
    http.Get("/api/dtw/embedding", guarded([this](const httplib::Request& req, httplib::Response& res) {
      pipeline::DtwParams p;
      if (auto s = segment_param(req)) p.segment = *s;
      if (auto v = param(req, "k")) p.k = parse_size(*v, "k");
      if (auto v = param(req, "normalize")) p.normalize = parse_bool(*v, "normalize");
      if (auto v = param(req, "band")) p.band = parse_size(*v, "band");
      if (auto v = param(req, "linkage")) {
        if (*v == "average") {
          p.linkage = dtw::Linkage::Average;
        } else if (*v == "complete") {
          p.linkage = dtw::Linkage::Complete;
        } else {
          throw BadRequest("linkage must be average or complete");
        }
      }
      send_json(res, 200, ws.embedding_body(p));
    }));
    http.Get("/api/graph", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, ws.graph_body(segment_param(req).value_or(segmentation::Segment::Early)));
    }));
    http.Get("/api/irr", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto a = param(req, "a");
      const auto b = param(req, "b");
      if (!a || !b) throw BadRequest("parameters 'a' and 'b' are required");
      const auto w = param(req, "window");
      send_json(res, 200, ws.irr_body(*a, *b, w ? parse_double(*w, "window") : 5.0));
    }));
    http.Get("/api/report/segments", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto annotator = param(req, "annotator");
      if (param(req, "format").value_or("json") == "csv") {
        res.status = 200;
        res.set_content(ws.report_csv(annotator), "text/csv");
        return;
      }
      pipeline::ReportParams p;
      if (auto v = param(req, "first")) p.followup_first = pipeline::parse_label_tag(*v);
      if (auto v = param(req, "second")) p.followup_second = pipeline::parse_label_tag(*v);
      if (auto v = param(req, "gap")) p.followup_gap_s = parse_double(*v, "gap");
      if (auto v = param(req, "death")) p.followup_requires_death = parse_bool(*v, "death");
      send_json(res, 200, ws.report_body(p, annotator));
    }));

    if (static_dir) {
      http.set_mount_point("/", static_dir->string());
    } else {
      http.Get("/", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, Json{{"service", "seqlab"}, {"api", "/api"}}.dump());
      });
    }
  }
};

HttpServer::HttpServer(Workspace& workspace, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(workspace)) {
  impl_->routes(static_dir);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::run() { return impl_->http.listen_after_bind(); }

void HttpServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

void HttpServer::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

}  // namespace seqlab::server
