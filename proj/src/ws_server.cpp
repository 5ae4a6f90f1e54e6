#include "rtsmooth/ws_server.hpp"

#include <chrono>
#include <deque>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "rtsmooth/service_protocol.hpp"

namespace rtsmooth {

namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

class Hub;

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}
  void start();
  void send(std::string text);

 private:
  void read();
  void write_next();
  void close();

  websocket::stream<tcp::socket> ws_;
  Hub& hub_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  ClientSequenceGuard guard_;
  bool open_ = false;
};

class Hub {
 public:
  Hub(RealtimeLoop& loop) : loop_(loop) {}

  void join(const std::shared_ptr<Session>& s) {
    sessions_.insert(s);
    for (const auto& [type, msg] : latest_) s->send(msg);
  }
  void leave(const std::shared_ptr<Session>& s) { sessions_.erase(s); }

  void publish(const std::vector<LoopEvent>& events) {
    for (const auto& e : events) {
      const std::string text = to_message(e, seq_).dump();
      if (e.type == "state" || e.type == "occupancy" || e.type == "trajectory") latest_[e.type] = text;
      for (const auto& s : sessions_) s->send(text);
    }
  }

  /// Reply to one client only.
  void reply(Session& s, const std::string& type, nlohmann::json payload) {
    s.send(nlohmann::json{{"type", type}, {"seq", seq_.next()}, {"payload", std::move(payload)}}.dump());
  }

  RealtimeLoop& loop() { return loop_; }

 private:
  RealtimeLoop& loop_;
  MessageSequencer seq_;
  std::set<std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::string> latest_;
};

void Session::start() {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
    if (ec) return;
    self->open_ = true;
    self->hub_.join(self);
    self->read();
  });
}

void Session::send(std::string text) {
  if (!open_) return;
  outbox_.push_back(std::move(text));
  if (outbox_.size() == 1) write_next();
}

void Session::write_next() {
  ws_.text(true);
  ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) return self->close();
    self->outbox_.pop_front();
    if (!self->outbox_.empty()) self->write_next();
  });
}

void Session::read() {
  ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) return self->close();
    const std::string text = beast::buffers_to_string(self->buffer_.data());
    self->buffer_.consume(self->buffer_.size());
    try {
      const ClientMessage msg = parse_client_message(text);
      if (self->guard_.accept(msg.seq))
        self->hub_.reply(*self, "ack", handle_client_message(self->hub_.loop(), msg));
      else
        self->hub_.reply(*self, "error", {{"reason", "stale sequence number"}, {"seq", msg.seq}});
    } catch (const std::exception& e) {
      self->hub_.reply(*self, "error", {{"reason", e.what()}});
    }
    self->read();
  });
}

void Session::close() {
  if (!open_) return;
  open_ = false;
  hub_.leave(shared_from_this());
}

void accept_loop(tcp::acceptor& acceptor, Hub& hub) {
  acceptor.async_accept([&acceptor, &hub](beast::error_code ec, tcp::socket socket) {
    if (!ec) std::make_shared<Session>(std::move(socket), hub)->start();
    if (acceptor.is_open()) accept_loop(acceptor, hub);
  });
}

}  // namespace

void run_server(RealtimeLoop& loop, const ServerConfig& cfg, const std::atomic<bool>& stop) {
  asio::io_context io;
  Hub hub(loop);
  tcp::acceptor acceptor(io, {asio::ip::make_address(cfg.address), cfg.port});
  std::cerr << "listening on ws://" << cfg.address << ':' << acceptor.local_endpoint().port() << "\n";
  accept_loop(acceptor, hub);
  hub.publish(loop.start());

  asio::steady_timer timer(io);
  const auto period = std::chrono::duration_cast<asio::steady_timer::duration>(std::chrono::duration<double>(cfg.tick_wall));
  std::function<void()> schedule = [&] {
    timer.expires_after(period);
    timer.async_wait([&](beast::error_code ec) {
      if (ec) return;
      if (stop.load()) {
        acceptor.close();
        io.stop();
        return;
      }
      hub.publish(loop.tick());
      schedule();
    });
  };
  schedule();
  io.run();
}

}  // namespace rtsmooth
