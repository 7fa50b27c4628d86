#include "mlego/service/jobs.hpp"

#include <cstdio>
#include <ctime>

#include "mlego/common/error.hpp"

namespace mlego::service {

std::string_view to_string(JobKind k) noexcept {
  switch (k) {
    case JobKind::Query: return "query";
    case JobKind::Batch: return "batch";
    case JobKind::Ingest: return "ingest";
    case JobKind::Materialize: return "materialize";
  }
  return "query";
}

std::string_view to_string(JobState s) noexcept {
  switch (s) {
    case JobState::Queued: return "queued";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "queued";
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

nlohmann::json Job::to_json() const {
  nlohmann::json j = {{"job_id", id},
                      {"kind", to_string(kind)},
                      {"state", to_string(state)},
                      {"submitted_at", submitted_at},
                      {"started_at", started_at.empty() ? nlohmann::json(nullptr) : nlohmann::json(started_at)},
                      {"finished_at", finished_at.empty() ? nlohmann::json(nullptr) : nlohmann::json(finished_at)},
                      {"has_trace", !trace.is_null()}};
  if (state == JobState::Done) j["result"] = result;
  if (state == JobState::Failed) j["error"] = error;
  return j;
}

JobQueue::JobQueue(std::size_t workers) {
  if (workers == 0) throw InvalidArgument("need at least one worker");
  for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this] { worker(); });
}

JobQueue::~JobQueue() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

std::string JobQueue::submit(JobKind kind, Work work) {
  std::string id;
  {
    std::lock_guard lock(mu_);
    if (stopping_) throw Error("job queue is shutting down");
    char buf[32];
    std::snprintf(buf, sizeof buf, "job-%06zu", next_++);
    id = buf;
    Job j;
    j.id = id;
    j.kind = kind;
    j.submitted_at = utc_now();
    jobs_.emplace(id, std::move(j));
    queue_.emplace_back(id, std::move(work));
  }
  cv_.notify_one();
  return id;
}

std::optional<Job> JobQueue::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

std::vector<Job> JobQueue::list() const {
  std::lock_guard lock(mu_);
  std::vector<Job> out;
  for (const auto& [_, j] : jobs_) out.push_back(j);
  return out;
}

bool JobQueue::wait(const std::string& id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return done_cv_.wait_for(lock, timeout, [&] {
    auto it = jobs_.find(id);
    return it == jobs_.end() || it->second.finished();
  }) && jobs_.count(id);
}

std::size_t JobQueue::peak_running() const {
  std::lock_guard lock(mu_);
  return peak_;
}

void JobQueue::worker() {
  for (;;) {
    std::pair<std::string, Work> item;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) {
        // Whatever is still queued will not run.
        for (auto& [qid, _] : queue_) {
          auto& j = jobs_.at(qid);
          j.state = JobState::Failed;
          j.error = "service stopped before the job ran";
          j.finished_at = utc_now();
        }
        queue_.clear();
        done_cv_.notify_all();
        return;
      }
      item = std::move(queue_.front());
      queue_.pop_front();
      auto& j = jobs_.at(item.first);
      j.state = JobState::Running;
      j.started_at = utc_now();
      peak_ = std::max(peak_, ++running_);
    }
    Job outcome;
    try {
      auto out = item.second();
      outcome.state = JobState::Done;
      outcome.result = std::move(out.result);
      outcome.trace = std::move(out.trace);
    } catch (const InvalidArgument& e) {
      outcome.state = JobState::Failed;
      outcome.error = e.what();
      outcome.error_status = 400;
    } catch (const NotFound& e) {
      outcome.state = JobState::Failed;
      outcome.error = e.what();
      outcome.error_status = 404;
    } catch (const std::exception& e) {
      outcome.state = JobState::Failed;
      outcome.error = e.what();
    }
    {
      std::lock_guard lock(mu_);
      auto& j = jobs_.at(item.first);
      j.state = outcome.state;
      j.result = std::move(outcome.result);
      j.trace = std::move(outcome.trace);
      j.error = std::move(outcome.error);
      j.error_status = outcome.error_status;
      j.finished_at = utc_now();
      --running_;
    }
    done_cv_.notify_all();
  }
}

}  // namespace mlego::service
