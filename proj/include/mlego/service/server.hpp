#pragma once

#include <memory>

#include "mlego/service/config.hpp"
#include "mlego/service/jobs.hpp"
#include "mlego/service/workspace.hpp"

namespace httplib {
class Server;
}

namespace mlego::service {

/// REST front end: datasets, models, queries and batches as jobs, traces.
class Service {
 public:
  explicit Service(ServiceConfig cfg);
  ~Service();

  // Blocks until stop().
  bool listen();
  // Binds an ephemeral port and serves on a background thread; returns the
  // port.
  int start_background();
  void stop();

  Workspace& workspace() noexcept { return ws_; }
  JobQueue& jobs() noexcept { return jobs_; }
  const ServiceConfig& config() const noexcept { return cfg_; }

 private:
  void routes();

  ServiceConfig cfg_;
  Workspace ws_;
  JobQueue jobs_;
  std::unique_ptr<httplib::Server> http_;
  std::thread bg_;
};

}  // namespace mlego::service
