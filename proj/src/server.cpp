#include "interflow/server.hpp"

#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "interflow/errors.hpp"

namespace interflow {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  using OnMessage = std::function<void(const std::string&, std::string)>;
  using OnClose = std::function<void(const std::string&)>;

  Connection(tcp::socket socket, std::string id, OnMessage on_message, OnClose on_close)
      : ws_(std::move(socket)), id_(std::move(id)), on_message_(std::move(on_message)), on_close_(std::move(on_close)) {}

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->closed();
      self->read();
    });
  }

  void send(std::string text) {
    net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->outbox_.push_back(std::move(text));
      if (self->outbox_.size() == 1) self->write();
    });
  }

  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      beast::get_lowest_layer(self->ws_).close();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->closed();
      auto text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->on_message_(self->id_, std::move(text));
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->closed();
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write();
    });
  }

  void closed() {
    if (done_) return;
    done_ = true;
    on_close_(id_);
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::string id_;
  OnMessage on_message_;
  OnClose on_close_;
  bool done_ = false;
};

}  // namespace

struct WebSocketServer::Impl {
  LiveRuntime& runtime;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::thread thread;
  std::mutex mu;
  std::map<std::string, std::shared_ptr<Connection>> clients;
  std::uint64_t next_client = 1;

  Impl(LiveRuntime& rt, const std::string& address, unsigned short port)
      : runtime(rt), acceptor(ioc) {
    tcp::endpoint ep(net::ip::make_address(address), port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
  }

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::string id;
      std::shared_ptr<Connection> conn;
      {
        std::lock_guard lock(mu);
        id = "c" + std::to_string(next_client++);
        conn = std::make_shared<Connection>(
            std::move(socket), id,
            [this](const std::string& client, std::string text) { runtime.post_client(client, std::move(text)); },
            [this](const std::string& client) {
              std::lock_guard lock(mu);
              clients.erase(client);
            });
        clients[id] = conn;
      }
      conn->run();
      accept();
    });
  }
};

WebSocketServer::WebSocketServer(LiveRuntime& runtime, const std::string& address, unsigned short port) {
  try {
    impl_ = std::make_unique<Impl>(runtime, address, port);
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("cannot listen: ") + e.what());
  }
}

WebSocketServer::~WebSocketServer() { stop(); }

unsigned short WebSocketServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WebSocketServer::start() {
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void WebSocketServer::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  {
    std::lock_guard lock(impl_->mu);
    for (auto& [id, conn] : impl_->clients) conn->close();
  }
  impl_->ioc.stop();
  impl_->thread.join();
  std::lock_guard lock(impl_->mu);
  impl_->clients.clear();
}

void WebSocketServer::deliver(const std::vector<Outbound>& messages) {
  std::lock_guard lock(impl_->mu);
  for (const auto& m : messages) {
    auto text = m.message.dump();
    if (m.client) {
      if (auto it = impl_->clients.find(*m.client); it != impl_->clients.end()) it->second->send(text);
    } else {
      for (auto& [id, conn] : impl_->clients) conn->send(text);
    }
  }
}

}  // namespace interflow
