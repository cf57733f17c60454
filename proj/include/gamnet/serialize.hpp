#pragma once

#include <string>

#include <json.hpp>

#include "gamnet/combinators.hpp"

namespace gamnet {

using Json = nlohmann::json;

struct FormatError : Error {
  using Error::Error;
};

Json to_json(const Interface& a);
Interface interface_from_json(const Json& j);

// Code as nested arrays: ["seq", instr, next], ["ifzero", r, zero, succ], ["spark", port], ["end"].
Json to_json(const Code& c);
Code code_from_json(const Json& j);

Json to_json(const Engine& e);
Engine engine_from_json(const Json& j);

Json to_json(const Net& s);
Net net_from_json(const Json& j);

Json to_json(const GameInterface& a);
GameInterface arena_from_json(const Json& j);

// The compiled IR: the net with its dom/cod arenas and the source type.
Json ir_to_json(const GamNet& g, const std::string& type);
GamNet ir_from_json(const Json& j, std::string* type = nullptr);

Data parse_data(const std::string& s);
// One event per line: "O|P port d0 d1 d2"; blank lines and '#' comments are skipped.
// A single line of events separated by "::" is accepted as well.
Trace parse_trace(const std::string& text);
std::string trace_lines(const Trace& t);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace gamnet
