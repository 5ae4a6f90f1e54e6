#include "rtsmooth/service_protocol.hpp"

#include <algorithm>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

namespace rtsmooth {

namespace {

namespace it = boost::archive::iterators;
using ToBase64 = it::base64_from_binary<it::transform_width<const std::uint8_t*, 6, 8>>;
using FromBase64 = it::transform_width<it::binary_from_base64<std::string::const_iterator>, 8, 6>;

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(ToBase64(bytes.data()), ToBase64(bytes.data() + bytes.size()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  const auto pad = static_cast<std::size_t>(std::count(text.end() - std::min<std::size_t>(2, text.size()), text.end(), '='));
  if (text.size() % 4 != 0) throw InvalidArgument("base64: length must be a multiple of 4");
  if (!std::all_of(text.begin(), text.end() - static_cast<std::ptrdiff_t>(pad), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '/';
      }))
    throw InvalidArgument("base64: invalid character");
  std::string body = text.substr(0, text.size() - pad);
  body.append(pad, 'A');
  std::vector<std::uint8_t> out(FromBase64(body.cbegin()), FromBase64(body.cend()));
  out.resize(out.size() - pad);
  return out;
}

nlohmann::json to_message(const LoopEvent& event, MessageSequencer& seq) {
  nlohmann::json payload = event.payload;
  if (event.type == "occupancy") {
    OccupancyVector occ(payload.at("voxels").get<int>());
    for (int v : payload.at("occupied").get<std::vector<int>>()) occ.set(v);
    payload.erase("occupied");
    payload["bits"] = base64_encode(occ.pack_bits());
    payload["count"] = occ.count();
  }
  return {{"type", event.type}, {"seq", seq.next()}, {"payload", payload}};
}

OccupancyVector occupancy_from_payload(const nlohmann::json& payload) {
  return OccupancyVector::unpack_bits(base64_decode(payload.at("bits").get<std::string>()),
                                      payload.at("voxels").get<int>());
}

ClientMessage parse_client_message(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("message is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("message must be an object");
  if (!j.contains("seq") || !j["seq"].is_number_unsigned()) throw InvalidArgument("message needs an unsigned 'seq'");
  if (!j.contains("type") || !j["type"].is_string()) throw InvalidArgument("message needs a string 'type'");
  ClientMessage msg;
  msg.seq = j["seq"].get<std::uint64_t>();
  const auto type = j["type"].get<std::string>();
  const nlohmann::json payload = j.value("payload", nlohmann::json::object());
  if (type == "obstacle") {
    msg.request = obstacle_command_from_json(payload);
  } else if (type == "pause") {
    msg.request = PauseRequest{};
  } else if (type == "resume") {
    msg.request = ResumeRequest{};
  } else if (type == "set-config") {
    SetConfigRequest req;
    if (payload.contains("c")) {
      if (!payload["c"].is_number_integer() || payload["c"].get<int>() < 0)
        throw InvalidArgument("set-config: 'c' must be a non-negative integer");
      req.c = payload["c"].get<int>();
    }
    if (payload.contains("threshold")) {
      if (!payload["threshold"].is_number() || payload["threshold"].get<double>() < 0.0)
        throw InvalidArgument("set-config: 'threshold' must be a non-negative number");
      req.threshold = payload["threshold"].get<double>();
    }
    msg.request = req;
  } else {
    throw InvalidArgument("unknown message type '" + type + "'");
  }
  return msg;
}

nlohmann::json handle_client_message(RealtimeLoop& loop, const ClientMessage& msg) {
  nlohmann::json ack = {{"ack", msg.seq}};
  std::visit(
      [&](const auto& req) {
        using T = std::decay_t<decltype(req)>;
        if constexpr (std::is_same_v<T, ObstacleCommand>) {
          const CommandAck a = loop.apply_obstacle_command(req);
          ack["command_id"] = req.command_id;
          ack["duplicate"] = a.duplicate;
        } else if constexpr (std::is_same_v<T, PauseRequest>) {
          loop.pause();
        } else if constexpr (std::is_same_v<T, ResumeRequest>) {
          loop.resume();
        } else {
          loop.set_smoothing(req.c, req.threshold);
          ack["c"] = loop.smoothing().waypoints;
          ack["threshold"] = loop.smoothing().clearance_threshold;
        }
      },
      msg.request);
  return ack;
}

}  // namespace rtsmooth
