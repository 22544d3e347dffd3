#include "marinex/session.hpp"

#include <cmath>

#include "marinex/error.hpp"
#include "marinex/telemetry_io.hpp"

namespace marinex {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

double finite_number(const json& payload, const char* key) {
  const auto it = payload.find(key);
  if (it == payload.end() || !it->is_number()) {
    throw ValidationError("must be a number", std::string("payload.") + key);
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ValidationError("must be finite", std::string("payload.") + key);
  return v;
}

CommandReply reject(const CommandMessage& cmd, std::string reason) {
  CommandReply r;
  r.kind = cmd.kind;
  r.reason = std::move(reason);
  r.client_timestamp = cmd.client_timestamp;
  return r;
}

}  // namespace

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Idle: return "idle";
    case RunStatus::Running: return "running";
    case RunStatus::Paused: return "paused";
    case RunStatus::Finished: return "finished";
  }
  return "idle";
}

CommandMessage command_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("command must be a JSON object", "command");
  CommandMessage cmd;
  const auto kind = doc.find("kind");
  if (kind == doc.end() || !kind->is_string()) throw ValidationError("must be a string", "kind");
  cmd.kind = kind->get<std::string>();
  if (const auto p = doc.find("payload"); p != doc.end() && !p->is_null()) {
    if (!p->is_object()) throw ValidationError("must be an object", "payload");
    cmd.payload = *p;
  }
  if (const auto ts = doc.find("client_timestamp"); ts != doc.end()) cmd.client_timestamp = *ts;
  return cmd;
}

ojson to_json(const CommandReply& r) {
  ojson doc;
  doc["schema_version"] = kGatewaySchemaVersion;
  doc["type"] = r.accepted ? "ack" : "rejection";
  doc["kind"] = r.kind;
  if (r.accepted) {
    doc["effective_tick"] = r.effective_tick;
  } else {
    doc["reason"] = r.reason;
  }
  doc["client_timestamp"] = r.client_timestamp;
  return doc;
}

ojson telemetry_frame(const TelemetryRecord& rec) {
  ojson frame;
  frame["schema_version"] = kGatewaySchemaVersion;
  frame["type"] = "frame";
  const ojson record = to_json(rec);
  for (const auto& [key, value] : record.items()) frame[key] = value;
  frame["bearing"] = camera_bearing(rec.state, rec.target.x, rec.target.y);
  if (rec.detection) {
    const Detection& d = *rec.detection;
    frame["bbox"] = {{"x0", d.center_x - d.box_w / 2}, {"y0", d.center_y - d.box_h / 2},
                     {"x1", d.center_x + d.box_w / 2}, {"y1", d.center_y + d.box_h / 2}};
  } else {
    frame["bbox"] = nullptr;
  }
  return frame;
}

ojson to_json(const SessionInfo& info) {
  ojson doc;
  doc["schema_version"] = kGatewaySchemaVersion;
  doc["id"] = info.id;
  doc["scenario"] = info.scenario;
  doc["status"] = std::string(to_string(info.status));
  doc["tick"] = info.tick;
  doc["tick_count"] = info.tick_count;
  doc["clients"] = info.clients;
  doc["mode"] = std::string(to_string(info.mode));
  doc["phase"] = std::string(to_string(info.phase));
  doc["dt"] = info.dt;
  doc["thrust_limits"] = {{"forward", info.max_thrust_forward},
                          {"reverse", info.max_thrust_reverse}};
  return doc;
}

// Subscription

std::optional<json> Subscription::take() {
  std::lock_guard lock(mu_);
  std::optional<json> out = std::move(slot_);
  slot_.reset();
  return out;
}

std::optional<json> Subscription::wait(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return slot_.has_value() || closed_; });
  std::optional<json> out = std::move(slot_);
  slot_.reset();
  return out;
}

bool Subscription::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

void Subscription::set_notify(std::function<void()> fn) {
  std::lock_guard lock(mu_);
  notify_ = std::move(fn);
}

void Subscription::offer(json frame) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    slot_ = std::move(frame);
  }
  notify();
}

void Subscription::close() {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    closed_ = true;
  }
  notify();
}

void Subscription::notify() {
  cv_.notify_all();
  std::function<void()> fn;
  {
    std::lock_guard lock(mu_);
    fn = notify_;
  }
  if (fn) fn();
}

// Session

Session::Session(std::string id, Scenario scenario, Pace pace)
    : id_(std::move(id)), pace_(pace), sim_(std::move(scenario)) {
  queued_mode_ = sim_.navigator().mode;
}

Session::~Session() { stop(); }

void Session::start() {
  std::lock_guard lock(mu_);
  if (status_ != RunStatus::Idle) return;
  status_ = RunStatus::Running;
  if (pace_ != Pace::Manual) thread_ = std::thread([this] { loop(); });
}

void Session::stop() {
  stopping_ = true;
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(mu_);
  if (status_ != RunStatus::Finished) finish_locked();
}

bool Session::step() {
  std::lock_guard lock(mu_);
  return step_locked();
}

bool Session::step_locked() {
  if (status_ == RunStatus::Finished) return false;
  if (status_ == RunStatus::Idle) return true;
  drain_locked();
  if (status_ == RunStatus::Paused) return true;
  TelemetryRecord rec = sim_.tick();
  telemetry_.push_back(rec);
  publish_locked(telemetry_.back());
  if (sim_.finished()) {
    finish_locked();
    return false;
  }
  return true;
}

void Session::drain_locked() {
  while (!queue_.empty()) {
    CommandMessage cmd = std::move(queue_.front());
    queue_.pop_front();
    const json& p = cmd.payload;
    if (cmd.kind == "set_thrust") {
      sim_.set_teleop({p.at("left").get<double>(), p.at("right").get<double>()});
    } else if (cmd.kind == "set_mode") {
      sim_.set_mode(parse_mode(p.at("mode").get<std::string>()));
    } else if (cmd.kind == "set_gains") {
      PidGains g = sim_.scenario().gains;
      if (p.contains("kp")) g.kp = p["kp"].get<double>();
      if (p.contains("ki")) g.ki = p["ki"].get<double>();
      if (p.contains("kd")) g.kd = p["kd"].get<double>();
      sim_.set_gains(g);
    } else if (cmd.kind == "pause") {
      status_ = RunStatus::Paused;
    } else if (cmd.kind == "resume") {
      status_ = RunStatus::Running;
    } else if (cmd.kind == "reset") {
      sim_.reset_navigator();
    }
  }
}

CommandReply Session::apply(const CommandMessage& cmd) {
  std::lock_guard lock(mu_);
  if (status_ == RunStatus::Finished) return reject(cmd, "session finished");
  if (status_ == RunStatus::Idle) return reject(cmd, "session not started");

  CommandMessage queued = cmd;
  try {
    const json& p = cmd.payload;
    if (cmd.kind == "set_thrust") {
      if (queued_mode_ == Mode::Auto) return reject(cmd, "teleop command in AUTO");
      queued.payload = {{"left", finite_number(p, "left")}, {"right", finite_number(p, "right")}};
    } else if (cmd.kind == "set_mode") {
      const auto it = p.find("mode");
      if (it == p.end() || !it->is_string()) throw ValidationError("must be a string", "payload.mode");
      queued_mode_ = parse_mode(it->get<std::string>());
    } else if (cmd.kind == "set_gains") {
      PidGains g = sim_.scenario().gains;
      if (p.contains("kp")) g.kp = finite_number(p, "kp");
      if (p.contains("ki")) g.ki = finite_number(p, "ki");
      if (p.contains("kd")) g.kd = finite_number(p, "kd");
      validate(g);
      queued.payload = {{"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}};
    } else if (cmd.kind != "pause" && cmd.kind != "resume" && cmd.kind != "reset") {
      return reject(cmd, "unknown kind: " + cmd.kind);
    }
  } catch (const std::invalid_argument& e) {
    return reject(cmd, e.what());
  }

  queue_.push_back(std::move(queued));
  CommandReply r;
  r.accepted = true;
  r.kind = cmd.kind;
  r.effective_tick = sim_.next_tick();
  r.client_timestamp = cmd.client_timestamp;
  return r;
}

std::shared_ptr<Subscription> Session::subscribe(double rate_hz) {
  std::lock_guard lock(mu_);
  const double tick_rate = 1.0 / sim_.scenario().dt;
  if (!std::isfinite(rate_hz) || rate_hz <= 0.0 || rate_hz > tick_rate * (1.0 + 1e-9)) {
    throw ValidationError("must be in (0, " + format_double(tick_rate) + "]", "rate");
  }
  const long every = std::max(1L, std::lround(tick_rate / rate_hz));
  auto sub = std::make_shared<Subscription>(every);
  if (status_ == RunStatus::Finished) {
    if (!telemetry_.empty()) sub->offer(telemetry_frame(telemetry_.back()));
    sub->close();
  } else {
    subscribers_.push_back(sub);
  }
  return sub;
}

void Session::publish_locked(const TelemetryRecord& rec) {
  std::optional<json> frame;
  const bool last = sim_.finished();
  for (auto it = subscribers_.begin(); it != subscribers_.end();) {
    auto sub = it->lock();
    if (!sub) {
      it = subscribers_.erase(it);
      continue;
    }
    if (last || rec.tick % sub->every() == 0) {
      if (!frame) frame = telemetry_frame(rec);
      sub->offer(*frame);
    }
    ++it;
  }
}

void Session::finish_locked() {
  status_ = RunStatus::Finished;
  for (auto& weak : subscribers_) {
    if (auto sub = weak.lock()) sub->close();
  }
  subscribers_.clear();
  finished_cv_.notify_all();
}

void Session::loop() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(sim_.scenario().dt));
  auto next = clock::now();
  while (!stopping_) {
    bool paused = false;
    {
      std::lock_guard lock(mu_);
      if (!step_locked()) return;
      paused = status_ == RunStatus::Paused;
    }
    if (pace_ == Pace::RealTime) {
      next += period;
      const auto now = clock::now();
      if (now > next + period) next = now;  // fell behind: do not burst
      std::this_thread::sleep_until(next);
    } else if (paused) {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }
}

SessionInfo Session::info() const {
  std::lock_guard lock(mu_);
  SessionInfo info;
  info.id = id_;
  info.scenario = sim_.scenario().name;
  info.status = status_;
  info.tick = sim_.next_tick();
  info.tick_count = sim_.tick_count();
  info.clients = clients_;
  info.mode = sim_.navigator().mode;
  info.phase = sim_.navigator().phase;
  info.dt = sim_.scenario().dt;
  info.max_thrust_forward = sim_.scenario().vessel.max_thrust_forward;
  info.max_thrust_reverse = sim_.scenario().vessel.max_thrust_reverse;
  return info;
}

RunStatus Session::status() const {
  std::lock_guard lock(mu_);
  return status_;
}

std::vector<TelemetryRecord> Session::telemetry() const {
  std::lock_guard lock(mu_);
  return telemetry_;
}

bool Session::wait_finished(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return finished_cv_.wait_for(lock, timeout, [&] { return status_ == RunStatus::Finished; });
}

// SessionManager

SessionManager::~SessionManager() { clear(); }

void SessionManager::clear() {
  std::map<std::string, std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(mu_);
    sessions.swap(sessions_);
  }
  for (auto& [id, s] : sessions) s->stop();
}

std::shared_ptr<Session> SessionManager::create(const Scenario& scenario) {
  return create(scenario, pace_);
}

std::shared_ptr<Session> SessionManager::create(const Scenario& scenario, Pace pace) {
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = "s" + std::to_string(next_id_++);
  }
  auto session = std::make_shared<Session>(id, scenario, pace);
  {
    std::lock_guard lock(mu_);
    sessions_[id] = session;
  }
  session->start();
  return session;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

bool SessionManager::remove(const std::string& id) {
  std::shared_ptr<Session> session;
  {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return false;
    session = std::move(it->second);
    sessions_.erase(it);
  }
  session->stop();
  return true;
}

std::vector<SessionInfo> SessionManager::list() const {
  std::vector<std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : sessions_) sessions.push_back(s);
  }
  std::vector<SessionInfo> out;
  for (const auto& s : sessions) out.push_back(s->info());
  return out;
}

Scenario scenario_from_request(const json& body) {
  if (!body.is_object()) throw ValidationError("request body must be a JSON object", "body");
  Scenario scenario;
  if (const auto p = body.find("preset"); p != body.end()) {
    if (!p->is_string()) throw ValidationError("must be a string", "preset");
    scenario = load_preset(p->get<std::string>());
  } else if (const auto s = body.find("scenario"); s != body.end()) {
    scenario = scenario_from_json(*s);
  } else {
    throw ValidationError("expected \"preset\" or \"scenario\"", "body");
  }
  if (const auto seed = body.find("seed"); seed != body.end()) {
    const bool negative = seed->is_number_integer() && !seed->is_number_unsigned() && seed->get<std::int64_t>() < 0;
    if (!seed->is_number_integer() || negative) throw ValidationError("must be a non-negative integer", "seed");
    scenario.seed = seed->get<std::uint64_t>();
  }
  validate(scenario);
  return scenario;
}

}  // namespace marinex
