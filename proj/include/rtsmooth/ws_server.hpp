#pragma once

#include <atomic>
#include <string>

#include "rtsmooth/realtime_loop.hpp"

namespace rtsmooth {

struct ServerConfig {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;
  /// Wall-clock seconds between ticks; the loop's own tick is the simulated step.
  double tick_wall = 0.05;
};

/// Serves the loop over a websocket on one thread until `stop` becomes true.
/// Every tick's events go to all clients; new clients first receive the latest
/// occupancy, trajectory and state messages.
void run_server(RealtimeLoop& loop, const ServerConfig& cfg, const std::atomic<bool>& stop);

}  // namespace rtsmooth
