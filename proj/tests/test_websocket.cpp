#include <doctest.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "interflow/mock_backend.hpp"
#include "interflow/runtime.hpp"
#include "interflow/server.hpp"

using namespace interflow;
using nlohmann::json;

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

const char* kScript = "---\nplanned_minutes: 5\n---\n# A\n- Where do you live?\n- What do you do?\n";

class Client {
 public:
  explicit Client(unsigned short port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }
  ~Client() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }
  void send(const json& j) { ws_.write(net::buffer(j.dump())); }
  json receive() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }
  // Reads until a message of the given type arrives.
  json until(const std::string& type, const std::function<bool(const json&)>& pred = {}) {
    for (int i = 0; i < 1000; ++i) {
      auto m = receive();
      if (m["type"] == type && (!pred || pred(m))) return m;
    }
    FAIL("message never arrived: " << type);
    return {};
  }

 private:
  net::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

}  // namespace

TEST_CASE("websocket clients get a snapshot on hello and deltas afterwards") {
  Config c;
  c.tick_seconds = 0.1;
  auto s = Session::create(kScript, c, make_gateway(c));
  LiveRuntime rt(*s);
  WebSocketServer server(rt, "127.0.0.1", 0);
  rt.set_listener([&](const std::vector<Outbound>& m) { server.deliver(m); });
  rt.start();
  server.start();
  REQUIRE(server.port() != 0);
  {
    Client a(server.port());
    a.send({{"type", "hello"}, {"protocol", 1}});
    auto snap = a.until("snapshot");
    CHECK(snap["protocol"] == kProtocolVersion);
    CHECK(snap["state"]["script"]["stages"].size() == 1);

    Client b(server.port());
    b.send({{"type", "hello"}});
    b.until("snapshot");

    a.send({{"type", "manual_select"}, {"question_id", "q2"}});
    auto is_status = [](const json& m) { return m["event"]["kind"] == "status"; };
    auto da = a.until("delta", is_status);
    auto db = b.until("delta", is_status);
    CHECK(da["event"]["payload"]["question_id"] == "q2");
    CHECK(da["event"] == db["event"]);

    b.send(json::array({1, 2}));
    auto err = b.until("error");
    CHECK(err["code"] == "MalformedEvent");
  }
  server.stop();
  rt.stop();
  CHECK(s->script().ongoing() == std::optional<std::string>("q2"));
}
