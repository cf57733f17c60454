#include "gamnet/serialize.hpp"

#include <fstream>
#include <sstream>

namespace gamnet {

namespace {

template <class... Ts>
struct overload : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overload(Ts...) -> overload<Ts...>;

Json reg(Reg r) { return r == kNull ? Json(nullptr) : Json(r); }
Reg reg_of(const Json& j) { return j.is_null() ? kNull : j.get<int>(); }

const char* op_name(ins::Op op) {
  switch (op) {
    case ins::Op::Add: return "add";
    case ins::Op::Sub: return "sub";
    case ins::Op::Mul: return "mul";
  }
  return "?";
}

ins::Op op_of(const std::string& s) {
  if (s == "add") return ins::Op::Add;
  if (s == "sub") return ins::Op::Sub;
  if (s == "mul") return ins::Op::Mul;
  throw FormatError("unknown arithmetic op " + s);
}

Json instr_json(const Instr& i) {
  return std::visit(overload{
                        [](const ins::New& x) { return Json{"new", reg(x.dst), reg(x.j), reg(x.k)}; },
                        [](const ins::Get& x) { return Json{"get", reg(x.dst1), reg(x.dst2), reg(x.src)}; },
                        [](const ins::Update& x) { return Json{"update", reg(x.i), reg(x.j)}; },
                        [](const ins::Free& x) { return Json{"free", reg(x.i)}; },
                        [](const ins::Flip& x) { return Json{"flip", reg(x.i), reg(x.j)}; },
                        [](const ins::Set& x) { return Json{"set", reg(x.dst), x.lit ? Json(*x.lit) : Json(nullptr)}; },
                        [](const ins::Arith& x) {
                          return Json{"arith", op_name(x.op), reg(x.dst), reg(x.lhs), reg(x.rhs)};
                        },
                        [](const ins::Fork& x) { return Json{"fork", to_string(x.port)}; },
                    },
                    i);
}

Instr instr_of(const Json& j) {
  const std::string k = j.at(0).get<std::string>();
  if (k == "new") return ins::New{reg_of(j.at(1)), reg_of(j.at(2)), reg_of(j.at(3))};
  if (k == "get") return ins::Get{reg_of(j.at(1)), reg_of(j.at(2)), reg_of(j.at(3))};
  if (k == "update") return ins::Update{reg_of(j.at(1)), reg_of(j.at(2))};
  if (k == "free") return ins::Free{reg_of(j.at(1))};
  if (k == "flip") return ins::Flip{reg_of(j.at(1)), reg_of(j.at(2))};
  if (k == "set") {
    std::optional<std::int64_t> lit;
    if (!j.at(2).is_null()) lit = j.at(2).get<std::int64_t>();
    return ins::Set{reg_of(j.at(1)), lit};
  }
  if (k == "arith") return ins::Arith{op_of(j.at(1).get<std::string>()), reg_of(j.at(2)), reg_of(j.at(3)), reg_of(j.at(4))};
  if (k == "fork") return ins::Fork{parse_port(j.at(1).get<std::string>())};
  throw FormatError("unknown instruction " + k);
}

Polarity polarity_of(const std::string& s) {
  if (s == "O") return Polarity::O;
  if (s == "P") return Polarity::P;
  throw FormatError("bad polarity " + s);
}

template <class F>
auto guarded(const char* what, F f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  } catch (const PreconditionError& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

Json ports_json(const std::set<PortName>& s) {
  Json a = Json::array();
  for (auto p : s) a.push_back(to_string(p));
  return a;
}

std::set<PortName> ports_of(const Json& j) {
  std::set<PortName> s;
  for (auto& x : j) s.insert(parse_port(x.get<std::string>()));
  return s;
}

}  // namespace

Json to_json(const Interface& a) {
  Json out = Json::array();
  for (auto [x, l] : a.ports()) out.push_back(Json{to_string(x), std::string(1, polarity_char(l))});
  return out;
}

Interface interface_from_json(const Json& j) {
  return guarded("interface", [&] {
    Interface a;
    for (auto& p : j) a.add(polarity_of(p.at(1).get<std::string>()), parse_port(p.at(0).get<std::string>()));
    return a;
  });
}

Json to_json(const Code& c) {
  return std::visit(overload{
                        [](const SeqNode& s) { return Json{"seq", instr_json(s.instr), to_json(s.next)}; },
                        [](const IfZeroNode& z) { return Json{"ifzero", reg(z.reg), to_json(z.zero), to_json(z.succ)}; },
                        [](const SparkNode& s) { return Json{"spark", to_string(s.port)}; },
                        [](const EndNode&) { return Json{"end"}; },
                    },
                    c->node);
}

Code code_from_json(const Json& j) {
  return guarded("code", [&]() -> Code {
    const std::string k = j.at(0).get<std::string>();
    if (k == "seq") return seq(instr_of(j.at(1)), code_from_json(j.at(2)));
    if (k == "ifzero") return ifzero(reg_of(j.at(1)), code_from_json(j.at(2)), code_from_json(j.at(3)));
    if (k == "spark") return spark(parse_port(j.at(1).get<std::string>()));
    if (k == "end") return end_code();
    throw FormatError("unknown code node " + k);
  });
}

Json to_json(const Engine& e) {
  Json ports = Json::object();
  for (auto& [p, c] : e.port_map) ports[to_string(p)] = to_json(c);
  return Json{{"iface", to_json(e.iface)}, {"ports", ports}, {"placement", e.placement}};
}

Engine engine_from_json(const Json& j) {
  return guarded("engine", [&] {
    Engine e;
    e.iface = interface_from_json(j.at("iface"));
    for (auto& [p, c] : j.at("ports").items()) e.port_map[parse_port(p)] = code_from_json(c);
    e.placement = j.value("placement", "");
    return e;
  });
}

Json to_json(const Net& s) {
  Json engines = Json::array();
  for (auto& e : s.engines) engines.push_back(to_json(e));
  Json chi = Json::object();
  for (auto [a, b] : s.chi) chi[to_string(a)] = to_string(b);
  return Json{{"engines", engines}, {"chi", chi}, {"external", to_json(s.external)}};
}

Net net_from_json(const Json& j) {
  return guarded("net", [&] {
    Net s;
    for (auto& e : j.at("engines")) s.engines.push_back(engine_from_json(e));
    for (auto& [a, b] : j.at("chi").items()) s.chi[parse_port(a)] = parse_port(b.get<std::string>());
    s.external = interface_from_json(j.at("external"));
    auto r = validate_net(s);
    if (!r.ok()) throw FormatError("net: " + r.problems.front());
    return s;
  });
}

Json to_json(const GameInterface& a) {
  Json en = Json::array();
  for (auto [x, y] : a.enabling) en.push_back(Json{to_string(x), to_string(y)});
  Json order = Json::array();
  for (auto p : a.order) order.push_back(to_string(p));
  return Json{{"ports", to_json(a.base)},
              {"questions", ports_json(a.questions)},
              {"initial", ports_json(a.initials)},
              {"enabling", en},
              {"order", order}};
}

GameInterface arena_from_json(const Json& j) {
  return guarded("arena", [&] {
    GameInterface a;
    a.base = interface_from_json(j.at("ports"));
    a.questions = ports_of(j.at("questions"));
    a.initials = ports_of(j.at("initial"));
    for (auto& e : j.at("enabling"))
      a.enabling.insert({parse_port(e.at(0).get<std::string>()), parse_port(e.at(1).get<std::string>())});
    if (j.contains("order"))
      for (auto& p : j.at("order")) a.order.push_back(parse_port(p.get<std::string>()));
    auto r = validate_arena(a);
    if (!r.ok()) throw FormatError("arena: " + r.problems.front());
    return a;
  });
}

Json ir_to_json(const GamNet& g, const std::string& type) {
  return Json{{"format", "gamnet-ir"}, {"version", 1},      {"type", type},
              {"net", to_json(g.net)}, {"dom", to_json(g.dom)}, {"cod", to_json(g.cod)}};
}

GamNet ir_from_json(const Json& j, std::string* type) {
  return guarded("ir", [&] {
    if (j.value("format", "") != "gamnet-ir") throw FormatError("not a gamnet IR file");
    if (type) *type = j.value("type", "");
    return GamNet{net_from_json(j.at("net")), arena_from_json(j.at("dom")), arena_from_json(j.at("cod"))};
  });
}

Data parse_data(const std::string& s) {
  if (s == "_") return Data{};
  if (s.size() > 1 && (s[0] == 'p' || s.rfind("0x", 0) == 0)) {
    try {
      return ptr(parse_pointer(s));
    } catch (const PreconditionError& e) {
      throw FormatError(e.what());
    }
  }
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used, 10);
    if (used != s.size()) throw FormatError("bad datum '" + s + "'");
    return num(v);
  } catch (const std::logic_error&) {
    throw FormatError("bad datum '" + s + "'");
  }
}

namespace {

TraceEvent parse_event(const std::string& text) {
  std::istringstream in(text);
  std::string pol, port;
  if (!(in >> pol >> port)) throw FormatError("bad trace event '" + text + "'");
  TraceEvent e{polarity_of(pol), Message{}};
  try {
    e.msg.port = parse_port(port);
  } catch (const PreconditionError& err) {
    throw FormatError(err.what());
  }
  for (auto& d : e.msg.payload) {
    std::string w;
    if (!(in >> w)) throw FormatError("trace event needs three payload slots: '" + text + "'");
    d = parse_data(w);
  }
  std::string extra;
  if (in >> extra) throw FormatError("trailing text in trace event '" + text + "'");
  return e;
}

}  // namespace

Trace parse_trace(const std::string& text) {
  Trace t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.find("ε") != std::string::npos) continue;
    std::size_t start = 0;
    for (;;) {
      auto sep = line.find("::", start);
      t.push_back(parse_event(line.substr(start, sep == std::string::npos ? std::string::npos : sep - start)));
      if (sep == std::string::npos) break;
      start = sep + 2;
    }
  }
  return t;
}

std::string trace_lines(const Trace& t) {
  std::string out;
  for (auto& e : t) {
    out += polarity_char(e.pol);
    out += ' ' + to_string(e.msg.port);
    for (auto& d : e.msg.payload) out += ' ' + to_string(d);
    out += '\n';
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

}  // namespace gamnet
