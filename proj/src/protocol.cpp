#include "covis/protocol.hpp"

#include <json.hpp>

#include "covis/error.hpp"

namespace covis::protocol {

using nlohmann::json;

namespace {

json parse_object(const std::string& line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocolError, std::string("unparseable line: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kProtocolError, "line is not a JSON object");
  return doc;
}

std::vector<Point2> parse_points(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_array()) {
    throw Error(ErrorCode::kProtocolError, std::string("missing array '") + key + "'");
  }
  std::vector<Point2> out;
  out.reserve(it->size());
  for (const json& p : *it) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw Error(ErrorCode::kProtocolError, std::string("bad point in '") + key + "'");
    }
    out.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return out;
}

}  // namespace

std::string encode_handshake(const std::string& name) {
  return json{{"ready", true}, {"name", name}}.dump();
}

std::string parse_handshake(const std::string& line) {
  const json doc = parse_object(line);
  auto ready = doc.find("ready");
  if (ready == doc.end() || !ready->is_boolean() || !ready->get<bool>()) {
    throw Error(ErrorCode::kProtocolError, "worker did not announce readiness");
  }
  auto name = doc.find("name");
  return name != doc.end() && name->is_string() ? name->get<std::string>() : std::string();
}

std::string encode_request(const Request& request) {
  return json{{"id", request.id},
              {"op", "match"},
              {"image1", request.image1},
              {"image2", request.image2},
              {"longest_dim", request.longest_dim}}
      .dump();
}

Request parse_request(const std::string& line, std::int64_t* id_out) {
  if (id_out) *id_out = -1;
  const json doc = parse_object(line);
  Request r;
  auto id = doc.find("id");
  if (id == doc.end() || !id->is_number_integer()) {
    throw Error(ErrorCode::kProtocolError, "request has no integer id");
  }
  r.id = id->get<std::int64_t>();
  if (id_out) *id_out = r.id;
  auto op = doc.find("op");
  if (op == doc.end() || *op != "match") {
    throw Error(ErrorCode::kProtocolError, "unsupported op");
  }
  for (auto [key, field] : {std::pair{"image1", &r.image1}, std::pair{"image2", &r.image2}}) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) {
      throw Error(ErrorCode::kProtocolError, std::string("missing '") + key + "'");
    }
    *field = it->get<std::string>();
  }
  auto dim = doc.find("longest_dim");
  if (dim == doc.end() || !dim->is_number_integer() || dim->get<int>() < 1) {
    throw Error(ErrorCode::kProtocolError, "missing or invalid 'longest_dim'");
  }
  r.longest_dim = dim->get<int>();
  return r;
}

std::string encode_response(std::int64_t id, const RawMatches& matches) {
  json kp1 = json::array();
  json kp2 = json::array();
  for (const auto& [a, b] : matches.pairs) {
    kp1.push_back({a.x(), a.y()});
    kp2.push_back({b.x(), b.y()});
  }
  return json{{"id", id}, {"kp1", kp1}, {"kp2", kp2}, {"conf", matches.confidences}}.dump();
}

std::string encode_error(std::int64_t id, const std::string& message) {
  return json{{"id", id}, {"error", message}}.dump();
}

RawMatches parse_response(const std::string& line, std::int64_t expected_id) {
  const json doc = parse_object(line);
  auto id = doc.find("id");
  if (id == doc.end() || !id->is_number_integer() || id->get<std::int64_t>() != expected_id) {
    throw Error(ErrorCode::kProtocolError,
                "response id does not match request " + std::to_string(expected_id));
  }
  if (auto err = doc.find("error"); err != doc.end()) {
    throw Error(ErrorCode::kMatcherUnavailable,
                "worker error: " + (err->is_string() ? err->get<std::string>() : err->dump()));
  }
  const std::vector<Point2> kp1 = parse_points(doc, "kp1");
  const std::vector<Point2> kp2 = parse_points(doc, "kp2");
  auto conf = doc.find("conf");
  if (conf == doc.end() || !conf->is_array()) {
    throw Error(ErrorCode::kProtocolError, "missing array 'conf'");
  }
  if (kp1.size() != kp2.size() || kp1.size() != conf->size()) {
    throw Error(ErrorCode::kProtocolError, "kp1, kp2 and conf differ in length");
  }
  RawMatches out;
  out.pairs.reserve(kp1.size());
  for (std::size_t i = 0; i < kp1.size(); ++i) {
    if (!(*conf)[i].is_number()) throw Error(ErrorCode::kProtocolError, "non-numeric confidence");
    out.pairs.emplace_back(kp1[i], kp2[i]);
    out.confidences.push_back((*conf)[i].get<double>());
  }
  return out;
}

}  // namespace covis::protocol
