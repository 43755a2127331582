#include "obstacle_walk/env_io.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "obstacle_walk/error.hpp"

namespace obstacle_walk {

namespace {

constexpr std::string_view kMagic = "OBSWALK-ENV";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json site_json(const Site& s, int d) {
  auto out = nlohmann::json::array();
  for (int i = 0; i < d; ++i) out.push_back(s[i]);
  return out;
}

Site site_from_json(const nlohmann::json& j, int d) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) throw FormatError("site has wrong arity");
  Site s;
  for (int i = 0; i < d; ++i) s[i] = j[static_cast<std::size_t>(i)].get<std::int32_t>();
  return s;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string serialize_environment(const EnvironmentField& env) {
  const Box& box = env.box();
  const int d = box.dim();
  std::vector<std::uint8_t> payload((box.volume() + 7) / 8, 0);
  const auto words = env.closed().words();
  for (std::size_t b = 0; b < payload.size(); ++b) {
    payload[b] = static_cast<std::uint8_t>(words[b / 8] >> (8 * (b % 8)));
  }
  nlohmann::json header;
  header["format_version"] = kEnvFormatVersion;
  header["d"] = d;
  auto lo = nlohmann::json::array();
  auto hi = nlohmann::json::array();
  for (int i = 0; i < d; ++i) {
    lo.push_back(box.lo(i));
    hi.push_back(box.hi(i));
  }
  header["box"] = {{"lo", lo}, {"hi", hi}};
  header["p_open"] = env.p_open();
  header["seed"] = env.seed();
  header["generator_tag"] = generator_name(env.tag());
  if (!env.planted().empty()) {
    auto planted = nlohmann::json::array();
    for (const auto& ball : env.planted()) {
      planted.push_back({{"center", site_json(ball.center, d)}, {"radius", ball.radius}});
    }
    header["planted_region"] = planted;
  }
  header["payload_bytes"] = payload.size();
  header["checksum"] = hex64(fnv1a64(payload));

  std::string out(kMagic);
  out += '\n';
  out += header.dump();
  out += '\n';
  out.append(payload.begin(), payload.end());
  return out;
}

EnvironmentField deserialize_environment(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic || bytes.size() <= kMagic.size() ||
      bytes[kMagic.size()] != '\n') {
    throw FormatError("not an environment file (bad magic)");
  }
  bytes.remove_prefix(kMagic.size() + 1);
  const auto eol = bytes.find('\n');
  if (eol == std::string_view::npos) throw FormatError("truncated environment header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, eol));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed environment header: ") + e.what());
  }
  bytes.remove_prefix(eol + 1);

  try {
    const int version = header.at("format_version").get<int>();
    if (version != kEnvFormatVersion) {
      throw FormatError("unsupported environment format version " + std::to_string(version));
    }
    const int d = header.at("d").get<int>();
    if (d < 1 || d > kMaxDim) throw FormatError("dimension out of range");
    const auto lo = header.at("box").at("lo").get<std::vector<std::int32_t>>();
    const auto hi = header.at("box").at("hi").get<std::vector<std::int32_t>>();
    if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d) {
      throw FormatError("box bounds have wrong arity");
    }
    const Box box(d, lo, hi);
    const auto payload_bytes = header.at("payload_bytes").get<std::size_t>();
    if (payload_bytes != (box.volume() + 7) / 8 || bytes.size() != payload_bytes) {
      throw FormatError("payload length does not match the box");
    }
    const std::span<const std::uint8_t> payload(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                                bytes.size());
    if (hex64(fnv1a64(payload)) != header.at("checksum").get<std::string>()) {
      throw FormatError("environment checksum mismatch");
    }
    BoxMask closed(box);
    auto words = closed.words();
    for (std::size_t b = 0; b < payload.size(); ++b) {
      words[b / 8] |= static_cast<std::uint64_t>(payload[b]) << (8 * (b % 8));
    }
    const std::size_t tail = box.volume() % 64;
    if (tail != 0 && (words.back() >> tail) != 0) throw FormatError("payload padding bits set");

    std::vector<PlantedBall> planted;
    if (header.contains("planted_region")) {
      for (const auto& ball : header.at("planted_region")) {
        planted.push_back({site_from_json(ball.at("center"), d), ball.at("radius").get<double>()});
      }
    }
    EnvironmentField env(box, std::move(closed), header.at("p_open").get<double>(),
                         header.at("seed").get<std::uint64_t>(),
                         parse_generator(header.at("generator_tag").get<std::string>()),
                         std::move(planted));
    for (const auto& ball : env.planted()) {
      for (const auto& s : euclidean_ball(ball.center, ball.radius, d)) {
        if (env.is_closed(s)) throw FormatError("planted region intersects the obstacle set");
      }
    }
    return env;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid environment header: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid environment header: ") + e.what());
  }
}

void save_environment(const EnvironmentField& env, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  const auto bytes = serialize_environment(env);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidArgument("failed writing '" + path + "'");
}

EnvironmentField load_environment(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_environment(bytes);
}

}  // namespace obstacle_walk
