#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "seqlab/error.hpp"
#include "seqlab/workspace.hpp"

namespace seqlab::server {

// HTTP status for a library error code.
int http_status(ErrorCode code);

// JSON-over-HTTP front end for a Workspace. Routes are listed in the README.
class HttpServer {
 public:
  explicit HttpServer(Workspace& workspace, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds without serving. Port 0 picks a free port. Returns the bound port,
  // or -1 on failure.
  int bind(const std::string& host, int port);
  // Serves until stop(); returns false if the loop failed.
  bool run();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace seqlab::server
