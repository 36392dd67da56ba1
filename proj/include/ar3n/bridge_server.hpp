#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "ar3n/bridge.hpp"

namespace ar3n {

struct ServerConfig {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  SessionConfig session;       // template for every connection's protocol
  std::shared_ptr<const PolicyModel> model;
  std::string out_dir;  // per-trial logs are written here when set
  std::chrono::microseconds tick_period{20'000};
};

/// WebSocket endpoint. Each connection runs its own trial protocol and tick
/// loop; all connections share one I/O thread.
///
/// Client -> server: {"type":"input","x","y","ts"} and
///                   {"type":"control","action":"start"|"next"|"abort"}
/// Server -> client: {"type":"hello","session"}, {"type":"tick",...} every
///                   tick while a trial runs, {"type":"trial_end",...},
///                   {"type":"protocol_end","paired":[...]}, {"type":"error"}
/// Every message carries "v" (integer schema version).
class BridgeServer {
 public:
  explicit BridgeServer(ServerConfig config);
  ~BridgeServer();
  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  /// Bound port, valid after construction.
  unsigned short port() const;
  /// Runs the I/O loop on a background thread.
  void start();
  /// Runs the I/O loop on the calling thread until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ar3n
