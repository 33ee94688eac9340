#include "interflow/runtime.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>

#include "interflow/errors.hpp"

namespace interflow {

using nlohmann::json;

// ---------------------------------------------------------------------------
// VirtualRuntime

VirtualRuntime::VirtualRuntime(Session& session)
    : session_(session), tick_(to_micros(session.config().tick_seconds)) {
  Micros start = to_micros(session.now());
  next_tick_ = (start / tick_ + 1) * tick_;
  session_.set_sink(this);
}

VirtualRuntime::~VirtualRuntime() { session_.set_sink(nullptr); }

void VirtualRuntime::submit(Job job) {
  JobOutcome outcome = job.run();
  Micros at = to_micros(job.issued_at + std::max(0.0, outcome.latency));
  scheduled_.push({at, order_++, std::move(outcome)});
}

ApplyResult VirtualRuntime::timed_apply(const std::string& kind, const json& payload, Seconds t,
                                        const std::optional<std::string>& client) {
  auto begin = std::chrono::steady_clock::now();
  auto r = session_.apply(kind, payload, t, client);
  apply_micros_.push_back(
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - begin).count());
  return r;
}

void VirtualRuntime::advance_to(Seconds t) {
  Micros target = to_micros(t);
  for (;;) {
    bool due = !scheduled_.empty() && scheduled_.top().t <= target;
    bool tick_due = next_tick_ <= target;
    if (tick_due && (!due || next_tick_ <= scheduled_.top().t)) {
      Micros at = next_tick_;
      next_tick_ += tick_;
      timed_apply("tick", json::object(), to_seconds(at), std::nullopt);
    } else if (due) {
      Scheduled s = scheduled_.top();
      scheduled_.pop();
      timed_apply(s.outcome.kind, s.outcome.payload, to_seconds(s.t), std::nullopt);
    } else {
      break;
    }
  }
}

ApplyResult VirtualRuntime::post(const std::string& kind, const json& payload, Seconds t,
                                 const std::optional<std::string>& client) {
  advance_to(t);
  return timed_apply(kind, payload, t, client);
}

ApplyResult VirtualRuntime::post_client(const std::string& client, std::string_view text, Seconds t) {
  advance_to(t);
  auto begin = std::chrono::steady_clock::now();
  auto r = session_.handle_client_message(client, text, t);
  apply_micros_.push_back(
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - begin).count());
  return r;
}

void VirtualRuntime::finish(Seconds linger) {
  post("flush", json::object(), session_.now());
  while (!scheduled_.empty()) advance_to(to_seconds(scheduled_.top().t));
  advance_to(session_.now() + linger);
}

// ---------------------------------------------------------------------------
// LiveRuntime

namespace {
void open_log(const std::string& path) {
  std::ofstream out;
  if (!path.empty()) {
    out.open(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write event log " + path);
  }
}
}  // namespace

LiveRuntime::LiveRuntime(Session& session, std::string log_path)
    : session_(session),
      log_path_(std::move(log_path)),
      queue_(session.config().queue_capacity),
      jobs_(std::numeric_limits<std::size_t>::max()) {}

LiveRuntime::~LiveRuntime() { stop(); }

Seconds LiveRuntime::elapsed() const {
  return origin_ + std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
}

void LiveRuntime::start() {
  if (running_) return;
  running_ = true;
  stopping_ = false;
  started_ = std::chrono::steady_clock::now();
  origin_ = session_.now();
  open_log(log_path_);
  persisted_ = 0;
  session_.set_sink(this);
  // The genesis event and anything applied before start.
  persist();
  threads_.emplace_back([this] { apply_loop(); });
  for (std::size_t i = 0; i < session_.config().inflight_cap; ++i) threads_.emplace_back([this] { worker_loop(); });
  threads_.emplace_back([this] { tick_loop(); });
}

void LiveRuntime::stop() {
  if (!running_) return;
  {
    std::lock_guard lock(stop_mu_);
    stopping_ = true;
  }
  stop_cv_.notify_all();
  jobs_.close();
  // Ticker and workers first; the apply thread drains what they posted.
  for (std::size_t i = 1; i < threads_.size(); ++i) threads_[i].join();
  queue_.close();
  threads_[0].join();
  threads_.clear();
  session_.set_sink(nullptr);
  running_ = false;
}

void LiveRuntime::submit(Job job) { jobs_.push(std::move(job)); }

bool LiveRuntime::post_client(const std::string& client, std::string message) {
  return queue_.push({Item::Type::Client, client, std::move(message), {}, {}});
}

bool LiveRuntime::post(std::string kind, json payload) {
  return queue_.push({Item::Type::Event, std::move(kind), {}, std::move(payload), {}});
}

void LiveRuntime::sync(const std::function<void(Session&)>& fn) {
  if (!running_) {
    fn(session_);
    return;
  }
  std::promise<void> done;
  auto fut = done.get_future();
  if (!queue_.push({Item::Type::Call, {}, {}, {}, [&](Session& s) {
                      fn(s);
                      done.set_value();
                    }}))
    return;
  fut.wait();
}

void LiveRuntime::persist() {
  if (log_path_.empty()) return;
  const auto& log = session_.log();
  if (persisted_ == log.size()) return;
  std::ofstream out(log_path_, std::ios::app);
  for (; persisted_ < log.size(); ++persisted_) out << to_line(log[persisted_]) << '\n';
}

void LiveRuntime::apply_loop() {
  while (auto item = queue_.pop()) {
    if (item->type == Item::Type::Call) {
      item->call(session_);
      continue;
    }
    ApplyResult r;
    try {
      if (item->type == Item::Type::Client) r = session_.handle_client_message(item->a, item->text, elapsed());
      else r = session_.apply(item->a, item->payload, elapsed());
    } catch (const Error& e) {
      std::cerr << "interflow: dropped event: " << e.what() << '\n';
      continue;
    }
    persist();
    if (listener_) {
      if (r.state_changed)
        r.messages.push_back({std::nullopt, {{"type", "snapshot"}, {"protocol", kProtocolVersion},
                                             {"state", session_.snapshot()}}});
      listener_(r.messages);
    }
  }
}

void LiveRuntime::worker_loop() {
  while (auto job = jobs_.pop()) {
    JobOutcome outcome = job->run();
    post(std::move(outcome.kind), std::move(outcome.payload));
  }
}

void LiveRuntime::tick_loop() {
  auto period = std::chrono::duration<double>(session_.config().tick_seconds);
  auto next = std::chrono::steady_clock::now();
  std::unique_lock lock(stop_mu_);
  for (;;) {
    next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
    if (stop_cv_.wait_until(lock, next, [&] { return stopping_; })) return;
    lock.unlock();
    post("tick", json::object());
    lock.lock();
  }
}

}  // namespace interflow
