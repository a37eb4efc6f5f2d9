#include "turtletalk/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <regex>
#include <stop_token>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

namespace turtletalk {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class StreamConnection;

struct Hosted {
  explicit Hosted(net::io_context& ioc) : strand(net::make_strand(ioc)) {}

  net::strand<net::io_context::executor_type> strand;
  std::mutex mutex;
  std::unique_ptr<Session> session;
  std::unique_ptr<TranscriptWriter> writer;
  std::vector<std::weak_ptr<StreamConnection>> subscribers;
  std::optional<std::stop_source> in_flight;
  std::uint64_t launched = 0;
};

std::string event_line(const SessionEvent& e) { return e.to_json().dump(); }

std::string error_record(std::string_view message) {
  ordered_json j;
  j["type"] = "error";
  j["message"] = message;
  return j.dump();
}

struct Route {
  std::string id;
  std::string leaf;
};

std::optional<Route> parse_route(std::string_view target) {
  static const std::regex pattern(R"(^/sessions/([0-9a-f]+)/(transcript|view|stream)$)");
  const std::string path(target.substr(0, target.find('?')));
  std::smatch m;
  if (!std::regex_match(path, m, pattern)) return std::nullopt;
  return Route{m[1], m[2]};
}

}  // namespace

struct SessionServer::Impl {
  explicit Impl(ServerOptions o) : options(std::move(o)), acceptor(ioc), pool(std::max(1u, options.backend_threads)) {}

  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::thread_pool pool;
  std::vector<std::thread> threads;
  mutable std::mutex registry_mutex;
  std::map<std::string, std::shared_ptr<Hosted>> sessions;
  std::mutex stop_mutex;
  std::condition_variable stopped_cv;
  bool stopped = false;

  std::shared_ptr<Hosted> find(const std::string& id) const {
    std::lock_guard lock(registry_mutex);
    const auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  void accept();
  http::response<http::string_body> route(const http::request<http::string_body>& req);
  http::response<http::string_body> create(const http::request<http::string_body>& req);

  void submit(const std::shared_ptr<Hosted>& hosted, Event event);
  void broadcast(Hosted& hosted, const std::vector<SessionEvent>& events);
  void launch_pending(const std::shared_ptr<Hosted>& hosted);
};

namespace {

class StreamConnection : public std::enable_shared_from_this<StreamConnection> {
 public:
  StreamConnection(tcp::socket socket, std::shared_ptr<Hosted> hosted, SessionServer::Impl& server)
      : ws_(std::move(socket)), hosted_(std::move(hosted)), server_(server), heartbeat_(ws_.get_executor()) {}

  void run(http::request<http::string_body> req) {
    beast::get_lowest_layer(ws_).expires_never();
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&StreamConnection::on_accept, shared_from_this()));
  }

  void send(std::string text) {
    net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->queue_.push_back(Outgoing{false, std::move(text)});
      self->pump();
    });
  }

 private:
  struct Outgoing {
    bool ping = false;
    std::string text;
  };

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Hosted> hosted_;
  SessionServer::Impl& server_;
  net::steady_timer heartbeat_;
  beast::flat_buffer buffer_;
  std::deque<Outgoing> queue_;
  bool writing_ = false;
  bool closed_ = false;

  void on_accept(beast::error_code ec) {
    if (ec) return;
    net::post(hosted_->strand, [self = shared_from_this()] {
      std::lock_guard lock(self->hosted_->mutex);
      for (const auto& e : self->hosted_->session->transcript()) self->send(event_line(e));
      self->hosted_->subscribers.push_back(self);
    });
    arm_heartbeat();
    read();
  }

  void arm_heartbeat() {
    heartbeat_.expires_after(server_.options.heartbeat);
    heartbeat_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      self->queue_.push_back(Outgoing{true, {}});
      self->pump();
      self->arm_heartbeat();
    });
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&StreamConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      heartbeat_.cancel();
      return;
    }
    const auto text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
      auto event = event_from_json(nlohmann::json::parse(text));
      if (!is_user_event(event)) {
        send(error_record("only user events may be sent"));
      } else {
        server_.submit(hosted_, std::move(event));
      }
    } catch (const std::exception& e) {
      send(error_record(e.what()));
    }
    read();
  }

  void pump() {
    if (writing_ || queue_.empty() || closed_) return;
    writing_ = true;
    auto done = [self = shared_from_this()](beast::error_code ec, std::size_t = 0) {
      self->writing_ = false;
      self->queue_.pop_front();
      if (ec) {
        self->closed_ = true;
        self->heartbeat_.cancel();
        return;
      }
      self->pump();
    };
    if (queue_.front().ping) {
      ws_.async_ping({}, [done](beast::error_code ec) mutable { done(ec); });
    } else {
      ws_.text(true);
      ws_.async_write(net::buffer(queue_.front().text), done);
    }
  }
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, SessionServer::Impl& server) : stream_(std::move(socket)), server_(server) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpConnection::read, shared_from_this()));
  }

 private:
  beast::tcp_stream stream_;
  SessionServer::Impl& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<http::response<http::string_body>> res_;

  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      const auto route = parse_route(std::string_view(req_.target().data(), req_.target().size()));
      auto hosted = route && route->leaf == "stream" ? server_.find(route->id) : nullptr;
      if (hosted) {
        std::make_shared<StreamConnection>(stream_.release_socket(), std::move(hosted), server_)->run(std::move(req_));
        return;
      }
    }
    res_ = std::make_shared<http::response<http::string_body>>(server_.route(req_));
    http::async_write(stream_, *res_, beast::bind_front_handler(&HttpConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return;
    if (!res_->keep_alive()) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    read();
  }
};

http::response<http::string_body> reply(const http::request<http::string_body>& req, http::status status,
                                        std::string body, std::string_view type = "application/json") {
  http::response<http::string_body> res{status, req.version()};
  res.set(http::field::server, "turtletalk");
  res.set(http::field::content_type, std::string(type));
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

}  // namespace

void SessionServer::Impl::accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec == net::error::operation_aborted) return;
    if (!ec) std::make_shared<HttpConnection>(std::move(socket), *this)->run();
    accept();
  });
}

http::response<http::string_body> SessionServer::Impl::route(const http::request<http::string_body>& req) {
  const std::string_view target(req.target().data(), req.target().size());
  if (target.substr(0, target.find('?')) == "/sessions") {
    if (req.method() != http::verb::post) return reply(req, http::status::method_not_allowed, error_record("use POST"));
    return create(req);
  }
  const auto route = parse_route(target);
  if (!route) return reply(req, http::status::not_found, error_record("no such resource"));
  const auto hosted = find(route->id);
  if (!hosted) return reply(req, http::status::not_found, error_record("no such session"));
  if (route->leaf == "stream") {
    return reply(req, http::status::upgrade_required, error_record("open this path as a WebSocket"));
  }
  if (req.method() != http::verb::get) return reply(req, http::status::method_not_allowed, error_record("use GET"));

  std::lock_guard lock(hosted->mutex);
  if (route->leaf == "view") return reply(req, http::status::ok, hosted->session->view().to_json().dump());
  std::string body;
  for (const auto& e : hosted->session->transcript()) {
    body += event_line(e);
    body += '\n';
  }
  return reply(req, http::status::ok, std::move(body), "application/x-ndjson");
}

http::response<http::string_body> SessionServer::Impl::create(const http::request<http::string_body>& req) {
  auto hosted = std::make_shared<Hosted>(ioc);
  try {
    auto merged = nlohmann::json::parse(options.defaults.to_json().dump());
    if (!req.body().empty()) {
      const auto patch = nlohmann::json::parse(req.body(), nullptr, false);
      if (patch.is_discarded() || !patch.is_object()) {
        return reply(req, http::status::bad_request, error_record("body must be a JSON object"));
      }
      merged.merge_patch(patch);
    }
    auto config = SessionConfig::from_json(merged);
    auto backend = make_backend(config.backend);
    Session::Listener listener;
    if (options.transcript_dir) {
      listener = [raw = hosted.get()](const SessionEvent& e) {
        if (raw->writer) raw->writer->append(e);
      };
    }
    hosted->session =
        std::make_unique<Session>(std::move(config), std::move(backend), BackendMode::deferred, utc_timestamp, listener);
    if (options.transcript_dir) {
      std::filesystem::create_directories(*options.transcript_dir);
      hosted->writer = std::make_unique<TranscriptWriter>(*options.transcript_dir / (hosted->session->id() + ".jsonl"));
      for (const auto& e : hosted->session->transcript()) hosted->writer->append(e);
    }
  } catch (const ConfigError& e) {
    return reply(req, http::status::bad_request, error_record(e.what()));
  }
  const auto id = hosted->session->id();
  ordered_json body;
  body["id"] = id;
  body["config"] = hosted->session->config().to_json();
  {
    std::lock_guard lock(registry_mutex);
    sessions.emplace(id, std::move(hosted));
  }
  spdlog::info("session {} created", id);
  return reply(req, http::status::created, body.dump());
}

void SessionServer::Impl::submit(const std::shared_ptr<Hosted>& hosted, Event event) {
  net::post(hosted->strand, [this, hosted, event = std::move(event)] {
    std::vector<SessionEvent> events;
    {
      std::lock_guard lock(hosted->mutex);
      if (hosted->in_flight) {
        hosted->in_flight->request_stop();
        hosted->in_flight.reset();
      }
      events = hosted->session->handle(event);
    }
    broadcast(*hosted, events);
    launch_pending(hosted);
  });
}

void SessionServer::Impl::broadcast(Hosted& hosted, const std::vector<SessionEvent>& events) {
  std::vector<std::shared_ptr<StreamConnection>> live;
  for (auto it = hosted.subscribers.begin(); it != hosted.subscribers.end();) {
    if (auto conn = it->lock()) {
      live.push_back(std::move(conn));
      ++it;
    } else {
      it = hosted.subscribers.erase(it);
    }
  }
  for (const auto& e : events) {
    const auto line = event_line(e);
    for (const auto& conn : live) conn->send(line);
  }
}

void SessionServer::Impl::launch_pending(const std::shared_ptr<Hosted>& hosted) {
  std::optional<PendingCall> call;
  std::stop_token token;
  ModelBackend* backend = nullptr;
  {
    std::lock_guard lock(hosted->mutex);
    const auto& pending = hosted->session->pending_call();
    if (!pending || pending->id == hosted->launched) return;
    call = pending;
    hosted->launched = pending->id;
    hosted->in_flight.emplace();
    token = hosted->in_flight->get_token();
    backend = &hosted->session->backend();
  }
  net::post(pool, [this, hosted, call = std::move(*call), token, backend] {
    Completion result;
    try {
      result = backend->complete(call.prompt, {}, token);
    } catch (const std::exception& e) {
      result = BackendError{e.what()};
    }
    net::post(hosted->strand, [this, hosted, id = call.id, result = std::move(result)] {
      std::vector<SessionEvent> events;
      {
        std::lock_guard lock(hosted->mutex);
        if (hosted->launched == id) hosted->in_flight.reset();
        events = hosted->session->deliver(id, result);
      }
      broadcast(*hosted, events);
      launch_pending(hosted);
    });
  });
}

SessionServer::SessionServer(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  if (!is_registered_backend(impl_->options.defaults.backend.name)) {
    throw ConfigError("unknown backend: " + impl_->options.defaults.backend.name);
  }
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::start() {
  auto& i = *impl_;
  const tcp::endpoint endpoint(net::ip::make_address(i.options.address), i.options.port);
  i.acceptor.open(endpoint.protocol());
  i.acceptor.set_option(net::socket_base::reuse_address(true));
  i.acceptor.bind(endpoint);
  i.acceptor.listen(net::socket_base::max_listen_connections);
  i.accept();
  for (unsigned n = 0; n < std::max(1u, i.options.io_threads); ++n) i.threads.emplace_back([&i] { i.ioc.run(); });
  spdlog::info("listening on {}:{}", i.options.address, port());
}

void SessionServer::wait() {
  std::unique_lock lock(impl_->stop_mutex);
  impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

void SessionServer::stop() {
  auto& i = *impl_;
  {
    std::lock_guard lock(i.stop_mutex);
    if (i.stopped) return;
    i.stopped = true;
  }
  i.stopped_cv.notify_all();
  i.ioc.stop();
  for (auto& t : i.threads) {
    if (t.joinable()) t.join();
  }
  beast::error_code ignored;
  i.acceptor.close(ignored);
  i.pool.join();
}

std::uint16_t SessionServer::port() const {
  beast::error_code ec;
  const auto endpoint = impl_->acceptor.local_endpoint(ec);
  return ec ? impl_->options.port : endpoint.port();
}

std::size_t SessionServer::session_count() const {
  std::lock_guard lock(impl_->registry_mutex);
  return impl_->sessions.size();
}

}  // namespace turtletalk
