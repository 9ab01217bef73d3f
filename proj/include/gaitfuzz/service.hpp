#pragma once

// Live service: streams frames over websocket JSON messages and applies
// controller patches and transport commands between frames.
//
// Threads: one network thread owns every session; one simulation worker
// owns the gait state. They talk through the command queue (inbound) and
// posted broadcasts (outbound). Slow clients lose frames, never the worker.

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "gaitfuzz/dsl.hpp"
#include "gaitfuzz/engine.hpp"
#include "gaitfuzz/error.hpp"
#include "gaitfuzz/json_io.hpp"

namespace gaitfuzz {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::uint16_t kDefaultPort = 7341;

class BindError : public Error {
 public:
  using Error::Error;
};

struct ServiceOptions {
  std::uint16_t port = kDefaultPort;  // 0 picks a free port
  std::string address = "127.0.0.1";
  double max_frame_rate = 60.0;       // outbound frame messages per second
  double speed = 1.0;                 // simulated seconds per wall second
  std::size_t max_backlog = 64;       // queued messages before frames are dropped
};

namespace detail {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace ws = boost::beast::websocket;
using tcp = boost::asio::ip::tcp;

class Session : public std::enable_shared_from_this<Session> {
 public:
  using Handler = std::function<void(const std::shared_ptr<Session>&, std::string)>;

  Session(tcp::socket socket, std::size_t max_backlog) : ws_(std::move(socket)), max_backlog_(max_backlog) {}

  void start(std::shared_ptr<const std::string> hello, Handler on_message, std::function<void()> on_open,
             std::function<void()> on_close) {
    on_message_ = std::move(on_message);
    on_close_ = std::move(on_close);
    ws_.set_option(ws::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this(), hello, on_open = std::move(on_open)](beast::error_code ec) {
      if (ec) return self->close();
      self->send(hello, true);
      on_open();
      self->read();
    });
  }

  /// Frames may be dropped when the client is behind; everything else is not.
  void send(std::shared_ptr<const std::string> msg, bool must_deliver) {
    if (closed_) return;
    if (!must_deliver && queue_.size() >= max_backlog_) {
      ++dropped_;
      return;
    }
    queue_.push_back(std::move(msg));
    if (queue_.size() == 1) write();
  }

  bool open() const noexcept { return !closed_; }
  std::size_t dropped() const noexcept { return dropped_; }

  void close() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
    ws_.next_layer().close(ec);
    if (on_close_) on_close_();
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->on_message_(self, std::move(text));
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  ws::stream<tcp::socket> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  std::size_t max_backlog_;
  std::size_t dropped_ = 0;
  bool closed_ = false;
  Handler on_message_;
  std::function<void()> on_close_;
};

}  // namespace detail

class LiveService {
 public:
  /// Binds immediately; throws BindError when the port is taken.
  LiveService(GaitConfig config, ServiceOptions options)
      : options_(options), config_(std::move(config)), acceptor_(ioc_) {
    config_.validate();
    state_ = initial_state(config_);
    namespace net = boost::asio;
    try {
      const auto ep = detail::tcp::endpoint(net::ip::make_address(options_.address), options_.port);
      acceptor_.open(ep.protocol());
      acceptor_.bind(ep);
      acceptor_.listen();
    } catch (const boost::system::system_error& e) {
      throw BindError("cannot listen on " + options_.address + ":" + std::to_string(options_.port) + ": " +
                      e.code().message());
    }
    port_ = acceptor_.local_endpoint().port();
    hello_ = std::make_shared<const std::string>(hello_message());
  }

  LiveService(const LiveService&) = delete;
  LiveService& operator=(const LiveService&) = delete;
  ~LiveService() { stop(); }

  std::uint16_t port() const noexcept { return port_; }

  void start() {
    if (running_.exchange(true)) return;
    accept();
    net_thread_ = std::thread([this] { ioc_.run(); });
    sim_thread_ = std::thread([this] { simulate(); });
  }

  void stop() {
    if (!running_.exchange(false)) return;
    wake_.notify_all();
    if (sim_thread_.joinable()) sim_thread_.join();
    boost::asio::post(ioc_, [this] {
      boost::system::error_code ec;
      acceptor_.close(ec);
      for (const auto& s : std::set(sessions_)) s->close();
      sessions_.clear();
    });
    work_.reset();
    if (net_thread_.joinable()) net_thread_.join();
  }

  /// Frames produced so far (simulation frames, not messages sent).
  std::uint64_t frame_index() const noexcept { return frame_index_.load(); }

 private:
  using json = nlohmann::json;
  using SessionPtr = std::shared_ptr<detail::Session>;

  struct Patch {
    std::weak_ptr<detail::Session> from;
    std::vector<dsl::PatchEntry> entries;
    json id;
  };
  struct Command {
    std::weak_ptr<detail::Session> from;
    std::string name;
    json value;
  };
  using Inbound = std::variant<Patch, Command>;

  std::string hello_message() const {
    return json{{"type", "hello"},
                {"protocol_version", kProtocolVersion},
                {"controllers", dsl::serialize(config_.controllers)},
                {"config", to_json(config_)}}
        .dump();
  }

  static std::string error_message(const std::string& what) { return json{{"type", "error"}, {"message", what}}.dump(); }

  void accept() {
    acceptor_.async_accept([this](boost::system::error_code ec, detail::tcp::socket socket) {
      if (ec) return;
      auto s = std::make_shared<detail::Session>(std::move(socket), options_.max_backlog);
      std::weak_ptr<detail::Session> weak = s;
      std::shared_ptr<const std::string> hello;
      {
        std::lock_guard lock(hello_mutex_);
        hello = hello_;
      }
      s->start(
          hello, [this](const SessionPtr& from, std::string text) { on_message(from, std::move(text)); },
          [this, weak] {
            if (auto p = weak.lock()) sessions_.insert(p);
          },
          [this, weak] {
            if (auto p = weak.lock()) sessions_.erase(p);
          });
      accept();
    });
  }

  // network thread
  void on_message(const SessionPtr& from, std::string text) {
    auto reply_error = [&](const std::string& what) {
      from->send(std::make_shared<const std::string>(error_message(what)), true);
    };
    json msg = json::parse(text, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) return reply_error("malformed JSON message");
    const auto type = msg.value("type", std::string());
    if (type == "patch") {
      Patch p{from, {}, msg.value("id", json())};
      const json entries = msg.value("entries", json());
      if (!entries.is_array()) return reply_error("patch needs an 'entries' array");
      for (const auto& e : entries) {
        if (!e.is_object() || !e.contains("path") || !e["path"].is_string() || !e.contains("value") ||
            !e["value"].is_number())
          return reply_error("patch entries need a string 'path' and a numeric 'value'");
        p.entries.push_back({e["path"].get<std::string>(), e["value"].get<double>()});
      }
      enqueue(std::move(p));
    } else if (type == "command") {
      const auto name = msg.value("command", std::string());
      if (name != "pause" && name != "resume" && name != "reset" && name != "set_terrain" &&
          name != "set_step_length")
        return reply_error("unknown command '" + name + "'");
      enqueue(Command{from, name, msg.value("value", json())});
    } else {
      reply_error("unknown message type '" + type + "'");
    }
  }

  void enqueue(Inbound in) {
    {
      std::lock_guard lock(queue_mutex_);
      inbound_.push_back(std::move(in));
    }
    wake_.notify_all();
  }

  // Posts `text` to one session (weak) or to all sessions (null).
  void post(std::weak_ptr<detail::Session> to, std::string text, bool must_deliver) {
    auto msg = std::make_shared<const std::string>(std::move(text));
    boost::asio::post(ioc_, [this, to, msg, must_deliver] {
      if (auto s = to.lock()) s->send(msg, must_deliver);
    });
  }
  void broadcast(std::string text, bool must_deliver) {
    auto msg = std::make_shared<const std::string>(std::move(text));
    boost::asio::post(ioc_, [this, msg, must_deliver] {
      for (const auto& s : sessions_) s->send(msg, must_deliver);
    });
  }

  // simulation worker: drain the queue at the frame boundary
  void drain() {
    std::deque<Inbound> batch;
    {
      std::lock_guard lock(queue_mutex_);
      batch.swap(inbound_);
    }
    bool changed = false;
    for (auto& in : batch) {
      if (auto* p = std::get_if<Patch>(&in)) {
        json ack{{"type", "patch_ack"}, {"accepted", true}, {"diagnostics", json::array()}};
        if (!p->id.is_null()) ack["id"] = p->id;
        try {
          config_.controllers = dsl::apply_patch(config_.controllers, p->entries);
          changed = true;
        } catch (const dsl::PatchError& e) {
          ack["accepted"] = false;
          for (const auto& d : e.diagnostics()) ack["diagnostics"].push_back(d);
        } catch (const Error& e) {
          ack["accepted"] = false;
          ack["diagnostics"].push_back(e.what());
        }
        post(p->from, ack.dump(), true);
      } else {
        auto& c = std::get<Command>(in);
        try {
          changed |= run_command(c);
        } catch (const Error& e) {
          post(c.from, error_message(e.what()), true);
        }
      }
    }
    if (changed) {
      std::lock_guard lock(hello_mutex_);
      hello_ = std::make_shared<const std::string>(hello_message());
    }
  }

  bool run_command(const Command& c) {
    if (c.name == "pause") {
      paused_ = true;
      return false;
    }
    if (c.name == "resume") {
      paused_ = false;
      return false;
    }
    if (c.name == "reset") {
      state_ = initial_state(config_);
      return false;
    }
    if (c.name == "set_terrain") {
      if (!c.value.is_string()) throw InvalidInput("set_terrain needs a string value");
      GaitConfig next = config_;
      next.terrain = Terrain::parse(c.value.get<std::string>());
      next.validate();
      config_ = std::move(next);
      state_ = initial_state(config_);
      return true;
    }
    // set_step_length
    if (!c.value.is_number()) throw InvalidInput("set_step_length needs a numeric value");
    const double v = c.value.get<double>();
    if (!std::isfinite(v) || !(v > 0.0) || v >= config_.dims.leg_length())
      throw InvalidInput("step length must be in (0, " + std::to_string(config_.dims.leg_length()) + ") m");
    config_.step_length = v;
    return true;
  }

  void simulate() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(config_.dt / options_.speed));
    const auto stride = static_cast<std::uint64_t>(
        std::max(1.0, std::ceil((1.0 / config_.dt) * options_.speed / options_.max_frame_rate - 1e-9)));
    auto next = clock::now();
    while (running_) {
      drain();
      if (!paused_) {
        try {
          auto [s, frame] = step_frame(state_, config_);
          state_ = std::move(s);
          const auto index = frame_index_.fetch_add(1) + 1;
          if (index % stride == 0) {
            json j = to_json(frame, config_.dims);
            j["type"] = "frame";
            j["frame_index"] = index;
            broadcast(j.dump(), false);
          }
        } catch (const Error& e) {
          broadcast(error_message(std::string("simulation reset: ") + e.what()), true);
          state_ = initial_state(config_);
        }
      }
      next += period;
      std::unique_lock lock(queue_mutex_);
      wake_.wait_until(lock, next, [this] { return !running_; });
    }
  }

  ServiceOptions options_;
  GaitConfig config_;
  GaitState state_;
  bool paused_ = false;
  std::atomic<std::uint64_t> frame_index_{0};

  boost::asio::io_context ioc_;
  std::optional<boost::asio::executor_work_guard<boost::asio::io_context::executor_type>> work_{
      boost::asio::make_work_guard(ioc_)};
  detail::tcp::acceptor acceptor_;
  std::uint16_t port_ = 0;
  std::set<SessionPtr> sessions_;  // network thread only

  std::mutex hello_mutex_;
  std::shared_ptr<const std::string> hello_;

  std::mutex queue_mutex_;
  std::condition_variable wake_;
  std::deque<Inbound> inbound_;

  std::atomic<bool> running_{false};
  std::thread net_thread_;
  std::thread sim_thread_;
};

}  // namespace gaitfuzz
