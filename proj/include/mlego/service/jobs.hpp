#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace mlego::service {

enum class JobKind { Query, Batch, Ingest, Materialize };
enum class JobState { Queued, Running, Done, Failed };

std::string_view to_string(JobKind k) noexcept;
std::string_view to_string(JobState s) noexcept;

struct Job {
  std::string id;
  JobKind kind = JobKind::Query;
  JobState state = JobState::Queued;
  std::string submitted_at, started_at, finished_at;
  nlohmann::json result;  // null until done
  nlohmann::json trace;   // null when the job kind has none
  std::string error;
  int error_status = 500;  // HTTP status mapped from the failure

  bool finished() const noexcept { return state == JobState::Done || state == JobState::Failed; }
  nlohmann::json to_json() const;
};

/// FIFO job queue drained by a fixed number of worker threads. A job runs
/// once; its record is frozen when it finishes.
class JobQueue {
 public:
  struct Output {
    nlohmann::json result;
    nlohmann::json trace;
  };
  using Work = std::function<Output()>;

  explicit JobQueue(std::size_t workers);
  ~JobQueue();
  JobQueue(const JobQueue&) = delete;
  JobQueue& operator=(const JobQueue&) = delete;

  std::string submit(JobKind kind, Work work);
  std::optional<Job> get(const std::string& id) const;
  std::vector<Job> list() const;
  // Blocks until the job finishes or the timeout passes; false on timeout
  // or unknown id.
  bool wait(const std::string& id, std::chrono::milliseconds timeout) const;
  std::size_t peak_running() const;

 private:
  void worker();

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;       // work available / stopping
  mutable std::condition_variable done_cv_;  // some job finished
  std::map<std::string, Job> jobs_;
  std::deque<std::pair<std::string, Work>> queue_;
  std::vector<std::thread> threads_;
  std::size_t next_ = 1;
  std::size_t running_ = 0, peak_ = 0;
  bool stopping_ = false;
};

std::string utc_now();

}  // namespace mlego::service
