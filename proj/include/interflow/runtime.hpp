#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "interflow/session.hpp"

namespace interflow {

/// Drives a session on virtual time. Jobs run synchronously when submitted
/// and their results are scheduled at issue time plus the backend's virtual
/// latency. Ticks fire on the configured grid. Ties at equal time resolve
/// ticks first, then scheduled results in submission order, then the input.
class VirtualRuntime : public JobSink {
 public:
  explicit VirtualRuntime(Session& session);
  ~VirtualRuntime() override;

  void submit(Job job) override;

  /// Applies due ticks and results up to `t`, then the input event.
  ApplyResult post(const std::string& kind, const nlohmann::json& payload, Seconds t,
                   const std::optional<std::string>& client = std::nullopt);
  ApplyResult post_client(const std::string& client, std::string_view text, Seconds t);

  /// Applies due ticks and results up to and including `t`.
  void advance_to(Seconds t);

  /// Flushes ingest and the aggregator, then runs until no result is
  /// outstanding and `linger` seconds of ticks have passed.
  void finish(Seconds linger = 0);

  std::size_t outstanding() const { return scheduled_.size(); }
  /// Wall-clock microseconds spent inside Session::apply per event.
  const std::vector<double>& apply_micros() const { return apply_micros_; }

 private:
  struct Scheduled {
    Micros t;
    std::uint64_t order;
    JobOutcome outcome;
  };
  struct Later {
    bool operator()(const Scheduled& a, const Scheduled& b) const {
      return a.t != b.t ? a.t > b.t : a.order > b.order;
    }
  };

  ApplyResult timed_apply(const std::string& kind, const nlohmann::json& payload, Seconds t,
                          const std::optional<std::string>& client);

  Session& session_;
  std::priority_queue<Scheduled, std::vector<Scheduled>, Later> scheduled_;
  std::uint64_t order_ = 0;
  Micros tick_;
  Micros next_tick_;
  std::vector<double> apply_micros_;
};

/// Bounded multi-producer queue; producers block while it is full.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  /// Returns false once the queue is closed.
  bool push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  std::deque<T> items_;
  bool closed_ = false;
};

/// Wall-clock runtime: one application thread owns the session; socket
/// reads, gateway completions and ticks are producers into a bounded queue.
/// Gateway jobs run on a worker pool limited to `inflight_cap` calls.
class LiveRuntime : public JobSink {
 public:
  using Listener = std::function<void(const std::vector<Outbound>&)>;

  /// `log_path` receives every event line as it is appended (may be empty).
  LiveRuntime(Session& session, std::string log_path = {});
  ~LiveRuntime() override;

  void set_listener(Listener listener) { listener_ = std::move(listener); }
  void start();
  void stop();

  void submit(Job job) override;
  /// Thread-safe producers.
  bool post_client(const std::string& client, std::string message);
  bool post(std::string kind, nlohmann::json payload);

  Seconds elapsed() const;
  /// Runs `fn` on the application thread and waits for it.
  void sync(const std::function<void(Session&)>& fn);

 private:
  struct Item {
    enum class Type { Client, Event, Call } type;
    std::string a;  // client id or event kind
    std::string text;
    nlohmann::json payload;
    std::function<void(Session&)> call;
  };

  void apply_loop();
  void worker_loop();
  void tick_loop();
  void persist();

  Session& session_;
  std::string log_path_;
  std::size_t persisted_ = 0;
  Listener listener_;
  BoundedQueue<Item> queue_;
  BoundedQueue<Job> jobs_;
  std::chrono::steady_clock::time_point started_;
  Seconds origin_ = 0;
  std::vector<std::thread> threads_;
  std::mutex stop_mu_;
  std::condition_variable stop_cv_;
  bool stopping_ = false;
  bool running_ = false;
};

}  // namespace interflow
