#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtsmooth/realtime_loop.hpp"

namespace rtsmooth {

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

/// Stamps outgoing messages with a strictly increasing sequence number.
class MessageSequencer {
 public:
  std::uint64_t next() { return ++last_; }
  std::uint64_t last() const { return last_; }

 private:
  std::uint64_t last_ = 0;
};

/// {"type", "seq", "payload"}. Occupancy payloads carry the bit-packed vector in base64.
nlohmann::json to_message(const LoopEvent& event, MessageSequencer& seq);

/// Recovers the occupancy vector from an `occupancy` message payload.
OccupancyVector occupancy_from_payload(const nlohmann::json& payload);

struct PauseRequest {};
struct ResumeRequest {};
struct SetConfigRequest {
  std::optional<int> c;
  std::optional<double> threshold;
};

using ClientRequest = std::variant<ObstacleCommand, PauseRequest, ResumeRequest, SetConfigRequest>;

struct ClientMessage {
  std::uint64_t seq = 0;
  ClientRequest request;
};

/// Throws InvalidArgument when the message is malformed or of an unknown type.
ClientMessage parse_client_message(const std::string& text);

/// Client sequence numbers must increase per connection; stale ones are dropped.
class ClientSequenceGuard {
 public:
  bool accept(std::uint64_t seq) {
    if (seq <= last_) return false;
    last_ = seq;
    return true;
  }

 private:
  std::uint64_t last_ = 0;
};

/// Applies one client request to the loop; returns the acknowledgement message payload.
nlohmann::json handle_client_message(RealtimeLoop& loop, const ClientMessage& msg);

}  // namespace rtsmooth
