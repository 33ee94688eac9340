#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "interflow/runtime.hpp"

namespace interflow {

/// WebSocket front end for a live runtime. Each text frame is one protocol
/// message; outbound messages are delivered to one client or broadcast.
class WebSocketServer {
 public:
  WebSocketServer(LiveRuntime& runtime, const std::string& address, unsigned short port);
  ~WebSocketServer();

  WebSocketServer(const WebSocketServer&) = delete;
  WebSocketServer& operator=(const WebSocketServer&) = delete;

  void start();
  void stop();
  /// Bound port; useful when constructed with port 0.
  unsigned short port() const;

  void deliver(const std::vector<Outbound>& messages);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace interflow
