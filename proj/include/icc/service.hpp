#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "icc/deform.hpp"

namespace icc {

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

struct ServiceOptions {
  unsigned threads = 1;         ///< tracing fan-out per request; 0 uses all hardware threads
  std::size_t target_cache = 4; ///< target fields kept per session
  int default_samples = 48;
  int default_resolution = 50;
  int max_samples = 512;
  int max_resolution = 400;
};

/// Request handlers of the deformation service, independent of any transport.
///
/// POST /session   {"cage": [[x, y], ...], "resolution": 50, "method": "laplace", "epsilon": 1e-6}
/// POST /deform    {"session": id, "target": [[x, y], ...], "samples": 48, "svg": false}
/// GET  /session/{id}/viz?field=source|target&tree=0|1&curves=N&expansion=0|1&compression=0|1
/// GET  /health
class DeformService {
 public:
  explicit DeformService(ServiceOptions options = {});
  ~DeformService();

  HttpResponse create_session(const std::string& body);
  HttpResponse deform(const std::string& body);
  HttpResponse viz(const std::string& session_id, const std::map<std::string, std::string>& query);
  HttpResponse health() const;

  std::size_t session_count() const;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;

  ServiceOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// HTTP front end for a DeformService.
class HttpServer {
 public:
  explicit HttpServer(DeformService& service);
  ~HttpServer();

  /// Binds the listening socket; port 0 picks an ephemeral port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves requests until stop() is called. Requires a successful bind().
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace icc
