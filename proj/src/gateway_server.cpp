#include "marinex/gateway_server.hpp"

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <fstream>
#include <sstream>
#include <thread>

#include "marinex/error.hpp"
#include "marinex/scenario.hpp"

namespace marinex {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

HttpReply json_reply(int status, const ojson& doc) {
  return {status, "application/json", doc.dump()};
}

HttpReply error_reply(int status, const std::string& message, const std::string& field = {}) {
  ojson doc;
  doc["schema_version"] = kGatewaySchemaVersion;
  doc["error"] = message;
  if (!field.empty()) doc["field"] = field;
  return json_reply(status, doc);
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 1;
  while (start <= path.size()) {
    const std::size_t slash = path.find('/', start);
    const std::string part = path.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
    if (!part.empty()) parts.push_back(part);
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  return parts;
}

std::pair<std::string, std::string> split_target(const std::string& target) {
  const std::size_t q = target.find('?');
  if (q == std::string::npos) return {target, {}};
  return {target.substr(0, q), target.substr(q + 1)};
}

std::optional<std::string> query_param(const std::string& query, const std::string& key) {
  std::istringstream in(query);
  std::string pair;
  while (std::getline(in, pair, '&')) {
    const std::size_t eq = pair.find('=');
    if (pair.substr(0, eq) == key) return eq == std::string::npos ? "" : pair.substr(eq + 1);
  }
  return std::nullopt;
}

std::string content_type_for(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

HttpReply serve_static(const std::filesystem::path& root, const std::string& path) {
  if (root.empty()) return error_reply(404, "not found");
  std::string rel = path == "/" ? "index.html" : path.substr(1);
  if (rel.find("..") != std::string::npos) return error_reply(400, "bad path");
  const auto file = root / rel;
  std::ifstream in(file, std::ios::binary);
  if (!in || std::filesystem::is_directory(file)) return error_reply(404, "not found");
  std::ostringstream body;
  body << in.rdbuf();
  return {200, content_type_for(file), body.str()};
}

HttpReply list_scenarios() {
  ojson doc;
  doc["schema_version"] = kGatewaySchemaVersion;
  doc["presets"] = ojson::array();
  for (const auto& name : list_presets()) {
    ojson entry;
    entry["name"] = name;
    try {
      entry["description"] = load_preset(name).description;
    } catch (const std::exception& e) {
      entry["error"] = e.what();
    }
    doc["presets"].push_back(entry);
  }
  return json_reply(200, doc);
}

}  // namespace

HttpReply handle_http(SessionManager& sessions, const std::string& method,
                      const std::string& target, const std::string& body,
                      const std::filesystem::path& static_dir) {
  const auto [path, query] = split_target(target);
  const auto parts = split_path(path);

  if (parts.size() == 1 && parts[0] == "scenarios") {
    if (method != "GET") return error_reply(405, "method not allowed");
    return list_scenarios();
  }
  if (!parts.empty() && parts[0] == "sessions") {
    if (parts.size() == 1) {
      if (method == "GET") {
        ojson doc;
        doc["schema_version"] = kGatewaySchemaVersion;
        doc["sessions"] = ojson::array();
        for (const auto& info : sessions.list()) doc["sessions"].push_back(to_json(info));
        return json_reply(200, doc);
      }
      if (method != "POST") return error_reply(405, "method not allowed");
      json request;
      try {
        request = json::parse(body);
      } catch (const json::parse_error& e) {
        return error_reply(400, std::string("invalid JSON: ") + e.what(), "body");
      }
      try {
        auto session = sessions.create(scenario_from_request(request));
        return json_reply(201, to_json(session->info()));
      } catch (const ValidationError& e) {
        return error_reply(400, e.what(), e.field());
      } catch (const std::exception& e) {
        return error_reply(400, e.what());
      }
    }
    if (parts.size() == 2) {
      if (method == "GET") {
        auto session = sessions.find(parts[1]);
        if (!session) return error_reply(404, "unknown session '" + parts[1] + "'");
        return json_reply(200, to_json(session->info()));
      }
      if (method == "DELETE") {
        if (!sessions.remove(parts[1])) return error_reply(404, "unknown session '" + parts[1] + "'");
        ojson doc;
        doc["schema_version"] = kGatewaySchemaVersion;
        doc["deleted"] = parts[1];
        return json_reply(200, doc);
      }
      return error_reply(405, "method not allowed");
    }
    if (parts.size() == 3 && (parts[2] == "stream" || parts[2] == "control")) {
      return error_reply(426, "websocket upgrade required");
    }
    return error_reply(404, "not found");
  }
  if (method != "GET") return error_reply(404, "not found");
  return serve_static(static_dir, path);
}

// Transport

namespace {

class StreamConnection : public std::enable_shared_from_this<StreamConnection> {
 public:
  StreamConnection(tcp::socket socket, std::shared_ptr<Session> session,
                   std::shared_ptr<Subscription> sub)
      : ws_(std::move(socket)), session_(std::move(session)), sub_(std::move(sub)) {}

  ~StreamConnection() {
    sub_->set_notify(nullptr);
    if (connected_) session_->client_disconnected();
  }

  void run(http::request<http::string_body> req) {
    req_ = std::move(req);
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req_, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->connected_ = true;
      self->session_->client_connected();
      std::weak_ptr<StreamConnection> weak = self;
      auto ex = self->ws_.get_executor();
      self->sub_->set_notify([weak, ex] {
        net::post(ex, [weak] {
          if (auto s = weak.lock()) s->pump();
        });
      });
      self->pump();
      self->read();
    });
  }

 private:
  void pump() {
    if (writing_ || done_) return;
    if (auto frame = sub_->take()) {
      out_ = frame->dump();
      writing_ = true;
      ws_.text(true);
      ws_.async_write(net::buffer(out_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        self->writing_ = false;
        if (ec) {
          self->done_ = true;
          return;
        }
        self->pump();
      });
      return;
    }
    if (sub_->closed()) {
      done_ = true;
      ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
    }
  }

  // Inbound messages are ignored; the read loop only observes the close.
  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->done_ = true;
        self->sub_->set_notify(nullptr);
        return;
      }
      self->in_.consume(self->in_.size());
      self->read();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  http::request<http::string_body> req_;
  std::shared_ptr<Session> session_;
  std::shared_ptr<Subscription> sub_;
  beast::flat_buffer in_;
  std::string out_;
  bool writing_ = false;
  bool done_ = false;
  bool connected_ = false;
};

class ControlConnection : public std::enable_shared_from_this<ControlConnection> {
 public:
  ControlConnection(tcp::socket socket, std::shared_ptr<Session> session)
      : ws_(std::move(socket)), session_(std::move(session)) {}

  ~ControlConnection() {
    if (connected_) session_->client_disconnected();
  }

  void run(http::request<http::string_body> req) {
    req_ = std::move(req);
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req_, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->connected_ = true;
      self->session_->client_connected();
      self->read();
    });
  }

 private:
  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->reply(beast::buffers_to_string(self->in_.data()));
      self->in_.consume(self->in_.size());
    });
  }

  void reply(const std::string& text) {
    CommandReply r;
    json doc;
    try {
      doc = json::parse(text);
      r = session_->apply(command_from_json(doc));
    } catch (const json::parse_error& e) {
      r.reason = std::string("invalid JSON: ") + e.what();
    } catch (const std::exception& e) {
      r.reason = e.what();
      if (doc.is_object()) {
        if (doc.contains("client_timestamp")) r.client_timestamp = doc["client_timestamp"];
        if (doc.contains("kind") && doc["kind"].is_string()) r.kind = doc["kind"];
      }
    }
    out_ = to_json(r).dump();
    ws_.text(true);
    ws_.async_write(net::buffer(out_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (!ec) self->read();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  http::request<http::string_body> req_;
  std::shared_ptr<Session> session_;
  beast::flat_buffer in_;
  std::string out_;
  bool connected_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, SessionManager& sessions, const GatewayOptions& options)
      : stream_(std::move(socket)), sessions_(sessions), options_(options) {}

  void run() {
    net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read(); });
  }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (ec == http::error::end_of_stream) {
                         beast::error_code ignored;
                         self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                         return;
                       }
                       if (ec) return;
                       self->handle();
                     });
  }

  void handle() {
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_)) {
      upgrade(target);
      return;
    }
    write(handle_http(sessions_, std::string(req_.method_string()), target, req_.body(),
                      options_.static_dir));
  }

  // On success the socket moves to a WebSocket connection.
  void upgrade(const std::string& target) {
    const auto [path, query] = split_target(target);
    const auto parts = split_path(path);
    if (parts.size() != 3 || parts[0] != "sessions" ||
        (parts[2] != "stream" && parts[2] != "control")) {
      write(error_reply(404, "not found"));
      return;
    }
    auto session = sessions_.find(parts[1]);
    if (!session) {
      write(error_reply(404, "unknown session '" + parts[1] + "'"));
      return;
    }
    stream_.expires_never();
    if (parts[2] == "control") {
      std::make_shared<ControlConnection>(stream_.release_socket(), session)->run(std::move(req_));
      return;
    }
    double rate = options_.default_rate;
    std::shared_ptr<Subscription> sub;
    try {
      if (auto r = query_param(query, "rate")) rate = std::stod(*r);
      sub = session->subscribe(rate);
    } catch (const ValidationError& e) {
      write(error_reply(400, e.what(), e.field()));
      return;
    } catch (const std::exception&) {
      write(error_reply(400, "rate must be a number", "rate"));
      return;
    }
    std::make_shared<StreamConnection>(stream_.release_socket(), session, sub)->run(std::move(req_));
  }

  void write(const HttpReply& r) {
    auto res = std::make_shared<http::response<http::string_body>>(
        static_cast<http::status>(r.status), req_.version());
    res->set(http::field::content_type, r.content_type);
    res->set(http::field::access_control_allow_origin, "*");
    res->keep_alive(req_.keep_alive());
    res->body() = r.body;
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (!res->keep_alive()) {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                          return;
                        }
                        self->read();
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  SessionManager& sessions_;
  const GatewayOptions& options_;
};

}  // namespace

struct GatewayServer::Impl {
  explicit Impl(GatewayOptions opts)
      : options(std::move(opts)), sessions(options.pace), acceptor(ioc) {
    const tcp::endpoint endpoint(net::ip::make_address(options.address), options.port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen(net::socket_base::max_listen_connections);
  }

  ~Impl() {
    sessions.clear();
    ioc.stop();
    for (auto& t : threads) {
      if (t.joinable()) t.join();
    }
  }

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpConnection>(std::move(socket), sessions, options)->run();
      accept();
    });
  }

  GatewayOptions options;
  SessionManager sessions;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::vector<std::thread> threads;
  bool started = false;
};

GatewayServer::GatewayServer(GatewayOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

GatewayServer::~GatewayServer() = default;

unsigned short GatewayServer::port() const { return impl_->acceptor.local_endpoint().port(); }

SessionManager& GatewayServer::sessions() { return impl_->sessions; }

void GatewayServer::start() {
  if (impl_->started) return;
  impl_->started = true;
  impl_->accept();
  const unsigned n = std::max(1u, impl_->options.threads);
  for (unsigned i = 0; i < n; ++i) impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

void GatewayServer::run() {
  net::signal_set signals(impl_->ioc, SIGINT, SIGTERM);
  signals.async_wait([this](beast::error_code, int) { stop(); });
  start();
  for (auto& t : impl_->threads) t.join();
  impl_->threads.clear();
}

void GatewayServer::stop() {
  impl_->sessions.clear();
  impl_->ioc.stop();
}

}  // namespace marinex
