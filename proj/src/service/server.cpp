// Copyright 2026 The Teleop Retarget Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <deque>
#include <memory>
#include <set>
#include <string>

#include "teleop/service.hpp"

namespace teleop::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr auto kPumpPeriod = std::chrono::milliseconds(5);

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Session& session, std::set<std::shared_ptr<Connection>>& live)
      : ws_(std::move(socket)), session_(session), live_(live) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->close();
      self->id_ = self->session_.connect();
      self->ws_.text(true);
      self->read();
    });
  }

  // Called from the pump timer: forwards queued frames unless a write is
  // already in flight, so the session's newest-wins slot absorbs backlog.
  void flush() {
    if (!id_ || closed_) return;
    if (session_.dropped(*id_)) return close();
    if (writing_) return;
    for (std::string& f : session_.drain(*id_)) queue_.push_back(std::move(f));
    write_next();
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    if (id_) session_.disconnect(*id_);
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
    live_.erase(shared_from_this());
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, size_t) {
      if (ec) return self->close();
      self->session_.receive(*self->id_, beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void write_next() {
    if (queue_.empty() || closed_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.async_write(asio::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, size_t) {
                      if (ec) return self->close();
                      self->queue_.pop_front();
                      self->write_next();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Session& session_;
  std::set<std::shared_ptr<Connection>>& live_;
  beast::flat_buffer buffer_;
  std::optional<ClientId> id_;
  std::deque<std::string> queue_;
  bool writing_ = false;
  bool closed_ = false;
};

}  // namespace

struct Server::Impl {
  Impl(Session& s, unsigned short port, const std::string& address)
      : session(s), acceptor(ioc, {asio::ip::make_address(address), port}), timer(ioc), signals(ioc) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto c = std::make_shared<Connection>(std::move(socket), session, live);
      live.insert(c);
      c->start();
      accept();
    });
  }

  void tick() {
    timer.expires_after(kPumpPeriod);
    timer.async_wait([this](beast::error_code ec) {
      if (ec) return;
      session.pump();
      // Copy: flush may close and erase a connection.
      const auto snapshot = live;
      for (const auto& c : snapshot) c->flush();
      tick();
    });
  }

  void shutdown() {
    beast::error_code ignored;
    acceptor.close(ignored);
    timer.cancel();
    signals.cancel();
    const auto snapshot = live;
    for (const auto& c : snapshot) c->close();
  }

  Session& session;
  asio::io_context ioc{1};
  tcp::acceptor acceptor;
  asio::steady_timer timer;
  asio::signal_set signals;
  std::set<std::shared_ptr<Connection>> live;
};

Server::Server(Session& session, unsigned short port, const std::string& address)
    : impl_(std::make_unique<Impl>(session, port, address)) {}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run(bool stop_on_signals) {
  if (stop_on_signals) {
    impl_->signals.add(SIGINT);
    impl_->signals.add(SIGTERM);
    impl_->signals.async_wait([this](beast::error_code ec, int) {
      if (!ec) impl_->shutdown();
    });
  }
  impl_->accept();
  impl_->tick();
  impl_->ioc.run();
}

void Server::stop() {
  asio::post(impl_->ioc, [this] { impl_->shutdown(); });
}

}  // namespace teleop::service
