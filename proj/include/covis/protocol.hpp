#pragma once

// Line-delimited JSON wire protocol spoken with out-of-process matchers.
//
//   worker -> host  {"ready": true, "name": "<matcher>"}            (once)
//   host -> worker  {"id": 7, "op": "match", "image1": "<path>",
//                    "image2": "<path>", "longest_dim": 840}
//   worker -> host  {"id": 7, "kp1": [[x,y],...], "kp2": [[x,y],...],
//                    "conf": [...]}
//                or {"id": 7, "error": "<message>"}
//
// Response coordinates live in the resized frame of each image (longest side
// = longest_dim, aspect preserved), corner-anchored.

#include <cstdint>
#include <string>

#include "covis/matchers.hpp"

namespace covis::protocol {

struct Request {
  std::int64_t id = 0;
  std::string image1;
  std::string image2;
  int longest_dim = 0;
};

std::string encode_handshake(const std::string& name);
// Returns the announced matcher name; throws kProtocolError.
std::string parse_handshake(const std::string& line);

std::string encode_request(const Request& request);
// Throws kProtocolError; `id_out` receives the id when it could be read, else -1.
Request parse_request(const std::string& line, std::int64_t* id_out = nullptr);

std::string encode_response(std::int64_t id, const RawMatches& matches);
std::string encode_error(std::int64_t id, const std::string& message);

// Throws kProtocolError on malformed lines or id mismatch and
// kMatcherUnavailable when the worker answered with an error object.
RawMatches parse_response(const std::string& line, std::int64_t expected_id);

}  // namespace covis::protocol
