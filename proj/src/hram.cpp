#include "gamnet/hram.hpp"

#include <sstream>

namespace gamnet {

std::string to_string(const Data& d) {
  if (is_empty(d)) return "_";
  if (is_pointer(d)) return to_string(std::get<PointerName>(d));
  return std::to_string(std::get<std::int64_t>(d));
}

Code end_code() {
  static const Code e = std::make_shared<CodeNode>(CodeNode{EndNode{}});
  return e;
}
Code spark(PortName a) { return std::make_shared<CodeNode>(CodeNode{SparkNode{a}}); }
Code ifzero(Reg r, Code zero, Code succ) {
  return std::make_shared<CodeNode>(CodeNode{IfZeroNode{r, std::move(zero), std::move(succ)}});
}
Code seq(const Instr& i, Code next) { return std::make_shared<CodeNode>(CodeNode{SeqNode{i, std::move(next)}}); }
Code seq(const std::vector<Instr>& prefix, Code tail) {
  for (auto it = prefix.rbegin(); it != prefix.rend(); ++it) tail = seq(*it, tail);
  return tail;
}

namespace {

template <class... F>
struct overload : F... {
  using F::operator()...;
};
template <class... F>
overload(F...) -> overload<F...>;

bool instr_equal(const Instr& a, const Instr& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      overload{
          [&](const ins::New& x) { auto& y = std::get<ins::New>(b); return x.dst == y.dst && x.j == y.j && x.k == y.k; },
          [&](const ins::Get& x) { auto& y = std::get<ins::Get>(b); return x.dst1 == y.dst1 && x.dst2 == y.dst2 && x.src == y.src; },
          [&](const ins::Update& x) { auto& y = std::get<ins::Update>(b); return x.i == y.i && x.j == y.j; },
          [&](const ins::Free& x) { return x.i == std::get<ins::Free>(b).i; },
          [&](const ins::Flip& x) { auto& y = std::get<ins::Flip>(b); return x.i == y.i && x.j == y.j; },
          [&](const ins::Set& x) { auto& y = std::get<ins::Set>(b); return x.dst == y.dst && x.lit == y.lit; },
          [&](const ins::Arith& x) { auto& y = std::get<ins::Arith>(b); return x.op == y.op && x.dst == y.dst && x.lhs == y.lhs && x.rhs == y.rhs; },
          [&](const ins::Fork& x) { return x.port == std::get<ins::Fork>(b).port; },
      },
      a);
}

void collect_sparks(const Code& c, std::vector<PortName>& out) {
  std::visit(overload{
                 [&](const SeqNode& s) {
                   if (auto* f = std::get_if<ins::Fork>(&s.instr)) out.push_back(f->port);
                   collect_sparks(s.next, out);
                 },
                 [&](const IfZeroNode& z) {
                   collect_sparks(z.zero, out);
                   collect_sparks(z.succ, out);
                 },
                 [&](const SparkNode& s) { out.push_back(s.port); },
                 [&](const EndNode&) {},
             },
             c->node);
}

std::string reg_str(Reg r) { return r == kNull ? "_" : std::to_string(r); }

std::string instr_str(const Instr& i) {
  return std::visit(
      overload{
          [](const ins::New& x) { return reg_str(x.dst) + " <- new " + reg_str(x.j) + "," + reg_str(x.k); },
          [](const ins::Get& x) { return reg_str(x.dst1) + "," + reg_str(x.dst2) + " <- get " + reg_str(x.src); },
          [](const ins::Update& x) { return "update " + reg_str(x.i) + "," + reg_str(x.j); },
          [](const ins::Free& x) { return "free " + reg_str(x.i); },
          [](const ins::Flip& x) { return "flip " + reg_str(x.i) + "," + reg_str(x.j); },
          [](const ins::Set& x) { return reg_str(x.dst) + " <- set " + (x.lit ? std::to_string(*x.lit) : std::string("_")); },
          [](const ins::Arith& x) {
            const char* n = x.op == ins::Op::Add ? "add" : x.op == ins::Op::Sub ? "sub" : "mul";
            return reg_str(x.dst) + " <- " + n + " " + reg_str(x.lhs) + "," + reg_str(x.rhs);
          },
          [](const ins::Fork& x) { return "fork " + to_string(x.port); },
      },
      i);
}

}  // namespace

bool code_equal(const Code& a, const Code& b) {
  if (a == b) return true;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(overload{
                        [&](const SeqNode& s) {
                          auto& t = std::get<SeqNode>(b->node);
                          return instr_equal(s.instr, t.instr) && code_equal(s.next, t.next);
                        },
                        [&](const IfZeroNode& z) {
                          auto& y = std::get<IfZeroNode>(b->node);
                          return z.reg == y.reg && code_equal(z.zero, y.zero) && code_equal(z.succ, y.succ);
                        },
                        [&](const SparkNode& s) { return s.port == std::get<SparkNode>(b->node).port; },
                        [&](const EndNode&) { return true; },
                    },
                    a->node);
}

std::vector<PortName> sparked_ports(const Code& c) {
  std::vector<PortName> out;
  collect_sparks(c, out);
  return out;
}

Code rename_code(const Code& c, const Permutation& pi) {
  return std::visit(overload{
                        [&](const SeqNode& s) -> Code {
                          Instr i = s.instr;
                          if (auto* f = std::get_if<ins::Fork>(&i)) f->port = pi(f->port);
                          return seq(i, rename_code(s.next, pi));
                        },
                        [&](const IfZeroNode& z) -> Code {
                          return ifzero(z.reg, rename_code(z.zero, pi), rename_code(z.succ, pi));
                        },
                        [&](const SparkNode& s) -> Code { return spark(pi(s.port)); },
                        [&](const EndNode&) -> Code { return end_code(); },
                    },
                    c->node);
}

std::string to_string(const Code& c) {
  return std::visit(overload{
                        [](const SeqNode& s) { return instr_str(s.instr) + "; " + to_string(s.next); },
                        [](const IfZeroNode& z) {
                          return "ifzero " + reg_str(z.reg) + " (" + to_string(z.zero) + ") (" + to_string(z.succ) + ")";
                        },
                        [](const SparkNode& s) { return "spark " + to_string(s.port); },
                        [](const EndNode&) { return std::string("end"); },
                    },
                    c->node);
}

std::string to_string(const Message& m) {
  std::string s = "(" + to_string(m.port);
  for (auto& d : m.payload) s += ", " + to_string(d);
  return s + ")";
}

ValidationReport validate_engine(const Engine& e) {
  ValidationReport r;
  for (auto a : e.iface.with(Polarity::O))
    if (!e.port_map.count(a)) r.problems.push_back("no code for O-port " + to_string(a));
  for (auto& [a, c] : e.port_map) {
    if (!e.iface.is_o(a)) r.problems.push_back("code bound to non-O-port " + to_string(a));
    if (!c) {
      r.problems.push_back("null code at " + to_string(a));
      continue;
    }
    for (auto b : sparked_ports(c))
      if (!e.iface.is_p(b)) r.problems.push_back("code at " + to_string(a) + " sparks non-P-port " + to_string(b));
  }
  return r;
}

Engine rename_engine(const Engine& e, const Permutation& pi) {
  Engine out;
  out.iface = rename(pi, e.iface);
  out.placement = e.placement;
  for (auto& [a, c] : e.port_map) out.port_map[pi(a)] = rename_code(c, pi);
  return out;
}

Regs regs_of(const std::array<Data, kMsgSlots>& payload) {
  Regs r{};
  for (int i = 0; i < kMsgSlots; ++i) r[i] = payload[i];
  return r;
}

std::array<Data, kMsgSlots> msg_of(const Regs& regs) {
  std::array<Data, kMsgSlots> m{};
  for (int i = 0; i < kMsgSlots; ++i) m[i] = regs[i];
  return m;
}

namespace {

Data read(const Regs& r, Reg i) { return i == kNull ? Data{} : r[i]; }
void write(Regs& r, Reg i, Data d) {
  if (i != kNull) r[i] = std::move(d);
}

struct FaultSignal {
  FaultKind kind;
  std::string detail;
};

std::map<PointerName, std::pair<Data, Data>>::iterator live_cell(EngineConfig& k, const Regs& r, Reg i,
                                                                 const char* op) {
  Data d = read(r, i);
  if (!is_pointer(d)) throw FaultSignal{FaultKind::DanglingAccess, std::string(op) + " on non-pointer register"};
  auto it = k.heap.find(std::get<PointerName>(d));
  if (it == k.heap.end())
    throw FaultSignal{FaultKind::DanglingAccess, std::string(op) + " on dangling " + to_string(d)};
  return it;
}

}  // namespace

bool touches_heap(const Thread& th) {
  auto* s = std::get_if<SeqNode>(&th.code->node);
  if (!s) return false;
  return std::holds_alternative<ins::Get>(s->instr) || std::holds_alternative<ins::Update>(s->instr) ||
         std::holds_alternative<ins::Free>(s->instr);
}

ThreadStep step_thread(EngineConfig& k, std::size_t t, const Engine& e, const Chi& chi, const FreshPointer& fresh) {
  ThreadStep res;
  Thread& th = k.threads[t];
  auto kill = [&](ThreadStep::Kind kind) {
    k.threads.erase(k.threads.begin() + static_cast<std::ptrdiff_t>(t));
    res.kind = kind;
    return res;
  };
  auto target_of = [&](PortName a) {
    auto it = chi.find(a);
    return it == chi.end() ? a : it->second;
  };
  try {
    const CodeNode& node = *th.code;
    if (auto* s = std::get_if<SeqNode>(&node.node)) {
      Regs& r = th.regs;
      std::visit(overload{
                     [&](const ins::New& x) {
                       PointerName p = fresh();
                       while (k.heap.count(p)) p = fresh();
                       k.heap.emplace(p, std::make_pair(read(r, x.j), read(r, x.k)));
                       write(r, x.dst, ptr(p));
                     },
                     [&](const ins::Get& x) {
                       auto it = live_cell(k, r, x.src, "get");
                       auto cell = it->second;
                       write(r, x.dst1, cell.first);
                       write(r, x.dst2, cell.second);
                     },
                     [&](const ins::Update& x) {
                       auto it = live_cell(k, r, x.i, "update");
                       auto old = it->second;
                       it->second.second = read(r, x.j);
                       write(r, x.i, old.first);
                       write(r, x.j, old.second);
                     },
                     [&](const ins::Free& x) {
                       auto it = live_cell(k, r, x.i, "free");
                       k.heap.erase(it);
                       write(r, x.i, Data{});
                     },
                     [&](const ins::Flip& x) {
                       Data a = read(r, x.i), b = read(r, x.j);
                       write(r, x.i, b);
                       write(r, x.j, a);
                     },
                     [&](const ins::Set& x) { write(r, x.dst, x.lit ? num(*x.lit) : Data{}); },
                     [&](const ins::Arith& x) {
                       Data a = read(r, x.lhs), b = read(r, x.rhs);
                       if (!is_int(a) || !is_int(b)) throw FaultSignal{FaultKind::TypeFault, "arithmetic on non-integer"};
                       auto u = static_cast<std::uint64_t>(std::get<std::int64_t>(a));
                       auto v = static_cast<std::uint64_t>(std::get<std::int64_t>(b));
                       std::uint64_t w = x.op == ins::Op::Add ? u + v : x.op == ins::Op::Sub ? u - v : u * v;
                       write(r, x.dst, num(static_cast<std::int64_t>(w)));
                     },
                     [&](const ins::Fork& x) {
                       Message m{target_of(x.port), msg_of(r)};
                       if (e.iface.is_o(m.port)) {
                         Thread spawned{e.port_map.at(m.port), regs_of(m.payload)};
                         th.code = s->next;
                         k.threads.push_back(std::move(spawned));
                         return;
                       }
                       res.out = m;
                     },
                 },
                 s->instr);
      // th may dangle after a local fork spawn reallocated the vector
      if (!std::holds_alternative<ins::Fork>(s->instr) || res.out) k.threads[t].code = s->next;
      return res;
    }
    if (auto* z = std::get_if<IfZeroNode>(&node.node)) {
      Data d = read(th.regs, z->reg);
      if (!is_int(d)) throw FaultSignal{FaultKind::TypeFault, "ifzero on non-integer " + to_string(d)};
      write(th.regs, z->reg, Data{});
      th.code = std::get<std::int64_t>(d) == 0 ? z->zero : z->succ;
      return res;
    }
    if (auto* sp = std::get_if<SparkNode>(&node.node)) {
      PortName b = target_of(sp->port);
      auto payload = msg_of(th.regs);
      if (e.iface.is_o(b)) {
        th.code = e.port_map.at(b);
        th.regs = regs_of(payload);
        return res;
      }
      res.out = Message{b, payload};
      return kill(ThreadStep::Emitted);
    }
    return kill(ThreadStep::Ended);
  } catch (const FaultSignal& f) {
    k.faults.push_back(Fault{f.kind, f.detail});
    return kill(ThreadStep::Faulted);
  }
}

std::vector<std::pair<Label, EngineConfig>> engine_step(const EngineConfig& k, const Engine& e, const Chi& chi,
                                                        const FreshPointer& fresh) {
  std::vector<std::pair<Label, EngineConfig>> out;
  for (std::size_t t = 0; t < k.threads.size(); ++t) {
    EngineConfig next = k;
    ThreadStep st = step_thread(next, t, e, chi, fresh);
    Label l;
    if (st.out) l = Label{LabelKind::Output, *st.out};
    out.emplace_back(l, std::move(next));
  }
  return out;
}

void receive_in_place(EngineConfig& k, const Engine& e, const Message& m) {
  if (!e.iface.is_o(m.port)) throw PreconditionError("receive on non-O-port " + to_string(m.port));
  k.threads.push_back(Thread{e.port_map.at(m.port), regs_of(m.payload)});
}

EngineConfig engine_receive(const EngineConfig& k, const Engine& e, const Message& m) {
  EngineConfig out = k;
  receive_in_place(out, e, m);
  return out;
}

EngineConfig initial_engine(const Engine&) { return {}; }

namespace macro {
std::vector<Instr> cci() { return {ins::Flip{0, 1}, ins::New{1, 0, 3}}; }
std::vector<Instr> ccq() { return {ins::New{1, 1, 3}, ins::Get{0, 3, 0}}; }
std::vector<Instr> cca() { return {ins::Flip{0, 1}, ins::Get{0, 3, 1}, ins::Free{1}}; }
std::vector<Instr> exi() { return {ins::Get{0, 3, 0}, ins::New{1, 1, 0}}; }
std::vector<Instr> exq() { return {ins::Get{kNull, 0, 0}, ins::New{1, 1, 3}}; }
}  // namespace macro

}  // namespace gamnet
