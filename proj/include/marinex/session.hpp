#pragma once

// Live simulation sessions. A Session owns one Simulation and a loop thread;
// operator commands are queued and drained at tick boundaries, telemetry is
// fanned out to subscribers through latest-only mailboxes so that a slow
// consumer skips frames instead of stalling the loop.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "marinex/sim_engine.hpp"

namespace marinex {

inline constexpr int kGatewaySchemaVersion = 1;

enum class RunStatus { Idle, Running, Paused, Finished };
std::string_view to_string(RunStatus status);

// RealTime paces ticks at wall-clock dt, Headless runs flat out, Manual
// starts no thread and advances only through Session::step().
enum class Pace { RealTime, Headless, Manual };

struct CommandMessage {
  std::string kind;  // set_thrust | set_mode | set_gains | pause | resume | reset
  nlohmann::json payload = nlohmann::json::object();
  nlohmann::json client_timestamp;  // echoed verbatim, null when absent
};

// Wire form: {"kind": ..., "payload": {...}, "client_timestamp": ...}.
// Only the outer shape is checked here; payloads are checked on apply.
CommandMessage command_from_json(const nlohmann::json& doc);

struct CommandReply {
  bool accepted = false;
  std::string kind;
  long effective_tick = -1;  // first record reflecting the command
  std::string reason;        // rejections only
  nlohmann::json client_timestamp;
};
nlohmann::ordered_json to_json(const CommandReply& reply);

// Telemetry record plus display fields (bearing to target, overlay bbox).
nlohmann::ordered_json telemetry_frame(const TelemetryRecord& rec);

class Subscription {
 public:
  explicit Subscription(long every) : every_(every) {}

  long every() const { return every_; }
  // Latest undelivered frame, if any.
  std::optional<nlohmann::json> take();
  // Blocks until a frame arrives, the stream closes or the timeout expires.
  std::optional<nlohmann::json> wait(std::chrono::milliseconds timeout);
  bool closed() const;
  // Called (from the loop thread) after each offered frame and on close.
  void set_notify(std::function<void()> fn);

  void offer(nlohmann::json frame);
  void close();

 private:
  void notify();

  long every_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::optional<nlohmann::json> slot_;
  bool closed_ = false;
  std::function<void()> notify_;
};

struct SessionInfo {
  std::string id;
  std::string scenario;
  RunStatus status = RunStatus::Idle;
  long tick = 0;  // next tick to be produced
  long tick_count = 0;
  int clients = 0;
  Mode mode = Mode::Auto;
  AutoPhase phase = AutoPhase::Search;
  double dt = 0.0;
  double max_thrust_forward = 0.0;
  double max_thrust_reverse = 0.0;
};
nlohmann::ordered_json to_json(const SessionInfo& info);

class Session {
 public:
  Session(std::string id, Scenario scenario, Pace pace);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  Pace pace() const { return pace_; }

  // Idle -> Running. Starts the loop thread unless the pace is Manual.
  void start();
  // Stops the loop thread and closes all subscriptions.
  void stop();

  // Drains queued commands and produces one record. Returns false when the
  // session is finished. Paused sessions drain commands but do not tick.
  bool step();

  CommandReply apply(const CommandMessage& cmd);

  // rate_hz must be in (0, 1/dt]; frames are emitted on ticks divisible by
  // round((1/dt) / rate_hz), plus the final record.
  std::shared_ptr<Subscription> subscribe(double rate_hz);

  void client_connected() { ++clients_; }
  void client_disconnected() { --clients_; }

  SessionInfo info() const;
  RunStatus status() const;
  std::vector<TelemetryRecord> telemetry() const;
  // Blocks until the session finishes or the timeout expires.
  bool wait_finished(std::chrono::milliseconds timeout) const;

 private:
  void loop();
  bool step_locked();
  void drain_locked();
  void publish_locked(const TelemetryRecord& rec);
  void finish_locked();

  const std::string id_;
  const Pace pace_;
  mutable std::mutex mu_;
  mutable std::condition_variable finished_cv_;
  Simulation sim_;
  RunStatus status_ = RunStatus::Idle;
  Mode queued_mode_;  // mode after every queued command has applied
  std::deque<CommandMessage> queue_;
  std::vector<TelemetryRecord> telemetry_;
  std::vector<std::weak_ptr<Subscription>> subscribers_;
  std::atomic<int> clients_{0};
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

class SessionManager {
 public:
  explicit SessionManager(Pace pace = Pace::RealTime) : pace_(pace) {}
  ~SessionManager();

  // Validates, registers and starts a session. Throws ValidationError.
  std::shared_ptr<Session> create(const Scenario& scenario);
  std::shared_ptr<Session> create(const Scenario& scenario, Pace pace);
  std::shared_ptr<Session> find(const std::string& id) const;
  bool remove(const std::string& id);
  std::vector<SessionInfo> list() const;
  // Stops and forgets every session.
  void clear();

 private:
  Pace pace_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  long next_id_ = 1;
};

// Body of POST /sessions: {"preset": name} or {"scenario": {...}}, with an
// optional "seed" override.
Scenario scenario_from_request(const nlohmann::json& body);

}  // namespace marinex
