#include "latfuse/wfsa.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <deque>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "latfuse/errors.h"

namespace latfuse {

namespace {

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Wfsa::Wfsa(int32_t num_states, int32_t start, std::vector<Arc> arcs,
           std::vector<std::pair<int32_t, double>> finals)
    : num_states_(num_states),
      start_(start),
      arcs_(std::move(arcs)),
      finals_(std::move(finals)) {
  if (num_states_ <= 0) throw Error("automaton needs at least one state");
  if (start_ < 0 || start_ >= num_states_) throw Error("invalid start state");
  for (const Arc& a : arcs_) {
    if (a.src < 0 || a.src >= num_states_ || a.dst < 0 || a.dst >= num_states_) {
      throw Error("arc endpoint out of range");
    }
  }
  final_weight_.assign(num_states_, kLogZero);
  for (const auto& [s, w] : finals_) {
    if (s < 0 || s >= num_states_) throw Error("final state out of range");
    final_weight_[s] = w;
  }

  // Group arc indices by source state (counting sort keeps insertion order).
  adj_offsets_.assign(num_states_ + 1, 0);
  for (const Arc& a : arcs_) ++adj_offsets_[a.src + 1];
  for (int32_t s = 0; s < num_states_; ++s) adj_offsets_[s + 1] += adj_offsets_[s];
  adj_arcs_.resize(arcs_.size());
  {
    std::vector<int32_t> cursor(adj_offsets_.begin(), adj_offsets_.end() - 1);
    for (int32_t i = 0; i < static_cast<int32_t>(arcs_.size()); ++i) {
      adj_arcs_[cursor[arcs_[i].src]++] = i;
    }
  }

  // Kahn's algorithm over non-self-loop arcs.
  std::vector<int32_t> indeg(num_states_, 0);
  for (const Arc& a : arcs_) {
    if (a.src != a.dst) ++indeg[a.dst];
  }
  std::deque<int32_t> ready;
  for (int32_t s = 0; s < num_states_; ++s) {
    if (indeg[s] == 0) ready.push_back(s);
  }
  topo_.reserve(num_states_);
  while (!ready.empty()) {
    int32_t s = ready.front();
    ready.pop_front();
    topo_.push_back(s);
    for (int32_t ai : ArcIndicesFrom(s)) {
      const Arc& a = arcs_[ai];
      if (a.src == a.dst) continue;
      if (--indeg[a.dst] == 0) ready.push_back(a.dst);
    }
  }
  acyclic_ = static_cast<int32_t>(topo_.size()) == num_states_;
  if (!acyclic_) topo_.clear();
}

std::span<const int32_t> Wfsa::ArcIndicesFrom(int32_t state) const {
  return {adj_arcs_.data() + adj_offsets_[state],
          adj_arcs_.data() + adj_offsets_[state + 1]};
}

const std::vector<int32_t>& Wfsa::TopoOrder() const {
  if (!acyclic_) throw Error("automaton is cyclic beyond self-loops");
  return topo_;
}

Wfsa AddEpsilonSelfLoops(const Wfsa& a) {
  std::vector<Arc> arcs = a.Arcs();
  arcs.reserve(arcs.size() + a.NumStates());
  for (int32_t s = 0; s < a.NumStates(); ++s) {
    arcs.push_back(Arc{s, s, kEpsilon, 0.0});
  }
  return Wfsa(a.NumStates(), a.Start(), std::move(arcs), a.Finals());
}

double ForwardScore(const Wfsa& a, Semiring semiring) {
  const auto& topo = a.TopoOrder();
  std::vector<double> alpha(a.NumStates(), kLogZero);
  alpha[a.Start()] = kLogOne;
  for (int32_t s : topo) {
    if (alpha[s] == kLogZero) continue;
    for (int32_t ai : a.ArcIndicesFrom(s)) {
      const Arc& arc = a.Arcs()[ai];
      if (arc.src == arc.dst) continue;
      alpha[arc.dst] = SemiringPlus(semiring, alpha[arc.dst], alpha[s] + arc.weight);
    }
  }
  double total = kLogZero;
  for (const auto& [s, w] : a.Finals()) {
    if (alpha[s] == kLogZero) continue;
    total = SemiringPlus(semiring, total, alpha[s] + w);
  }
  return total;
}

double CountAcceptingPaths(const Wfsa& a) {
  const auto& topo = a.TopoOrder();
  std::vector<double> count(a.NumStates(), 0.0);
  count[a.Start()] = 1.0;
  for (int32_t s : topo) {
    if (count[s] == 0.0) continue;
    for (int32_t ai : a.ArcIndicesFrom(s)) {
      const Arc& arc = a.Arcs()[ai];
      if (arc.src == arc.dst) continue;
      count[arc.dst] += count[s];
    }
  }
  double total = 0.0;
  for (const auto& [s, w] : a.Finals()) total += count[s];
  return total;
}

namespace {

void EnumerateFrom(const Wfsa& a, int32_t state, std::vector<TokenId>* labels,
                   double weight, std::size_t limit,
                   std::vector<PathScore>* out) {
  double fw = a.FinalWeight(state);
  if (fw != kLogZero) {
    if (out->size() >= limit) {
      throw Error("path enumeration exceeded limit of " + std::to_string(limit));
    }
    out->push_back(PathScore{*labels, weight + fw});
  }
  // Lexicographic order over label sequences: ending (above) sorts before
  // any extension; arcs explored by ascending label, then destination.
  std::vector<int32_t> order(a.ArcIndicesFrom(state).begin(),
                             a.ArcIndicesFrom(state).end());
  std::stable_sort(order.begin(), order.end(), [&](int32_t x, int32_t y) {
    const Arc& ax = a.Arcs()[x];
    const Arc& ay = a.Arcs()[y];
    if (ax.label != ay.label) return ax.label < ay.label;
    return ax.dst < ay.dst;
  });
  for (int32_t ai : order) {
    const Arc& arc = a.Arcs()[ai];
    if (arc.src == arc.dst) continue;
    bool real_label = arc.label != kEpsilon;
    if (real_label) labels->push_back(arc.label);
    EnumerateFrom(a, arc.dst, labels, weight + arc.weight, limit, out);
    if (real_label) labels->pop_back();
  }
}

}  // namespace

std::vector<PathScore> EnumeratePaths(const Wfsa& a, std::size_t limit) {
  if (!a.IsAcyclic()) throw Error("cannot enumerate paths of a cyclic automaton");
  std::vector<PathScore> out;
  std::vector<TokenId> labels;
  EnumerateFrom(a, a.Start(), &labels, kLogOne, limit, &out);
  return out;
}

Wfsa IntersectWithLm(const Wfsa& q, const SymbolTable& q_syms,
                     const NGramModel& lm, const IntersectOptions& opts) {
  if (!q.IsAcyclic()) throw Error("intersection requires an acyclic acceptor");
  for (const Arc& a : q.Arcs()) {
    if (a.label == kEpsilon) {
      throw Error("intersection requires an epsilon-free acceptor");
    }
  }

  // Translate q labels into LM tokens once; q labels are preserved on the
  // output arcs so the accepted language is exactly q's.
  std::vector<TokenId> lm_token(q_syms.Size(), kNoSymbol);
  std::vector<bool> mapped(q_syms.Size(), false);
  auto lm_token_for = [&](TokenId q_label) {
    if (!mapped[q_label]) {
      lm_token[q_label] = lm.MapWord(q_syms.Name(q_label), opts.oov);
      mapped[q_label] = true;
    }
    return lm_token[q_label];
  };

  struct PairHash {
    std::size_t operator()(const std::pair<int32_t, LmStateId>& p) const {
      return std::hash<int64_t>()((static_cast<int64_t>(p.first) << 32) ^
                                  static_cast<uint32_t>(p.second));
    }
  };
  std::unordered_map<std::pair<int32_t, LmStateId>, int32_t, PairHash> ids;
  std::vector<std::pair<int32_t, LmStateId>> states;
  auto state_id = [&](int32_t qs, LmStateId ls) {
    auto [it, inserted] = ids.emplace(std::make_pair(qs, ls),
                                      static_cast<int32_t>(states.size()));
    if (inserted) states.emplace_back(qs, ls);
    return it->second;
  };

  std::vector<Arc> arcs;
  std::vector<std::pair<int32_t, double>> finals;
  LmStateId lm_start = lm.StartState(opts.bos);
  int32_t start = state_id(q.Start(), lm_start);
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto [qs, ls] = states[i];
    double qf = q.FinalWeight(qs);
    if (qf != kLogZero) {
      double w = qf;
      if (opts.eos && lm.HasUnigram(lm.EosId())) {
        w += lm.CondLogProb(lm.StateContext(ls), lm.EosId());
      }
      finals.emplace_back(static_cast<int32_t>(i), w);
    }
    for (int32_t ai : q.ArcIndicesFrom(qs)) {
      const Arc& qa = q.Arcs()[ai];
      auto [next_ls, ln_prob] = lm.Advance(ls, lm_token_for(qa.label));
      int32_t dst = state_id(qa.dst, next_ls);
      arcs.push_back(Arc{static_cast<int32_t>(i), dst, qa.label,
                         qa.weight + ln_prob});
    }
  }
  return Wfsa(static_cast<int32_t>(states.size()), start, std::move(arcs),
              std::move(finals));
}

Wfsa LmToWfsaExplicit(const NGramModel& lm, bool bos, bool eos) {
  // One state per listed LM context. Word arcs follow listed successors;
  // each context gets one epsilon backoff arc to its shortened context,
  // exactly the paper's device. Next states come from Advance so they match
  // the lazy composition's context rule.
  std::vector<Arc> arcs;
  std::vector<std::pair<int32_t, double>> finals;
  const int32_t n = static_cast<int32_t>(lm.NumStates());
  const bool has_eos_entry = lm.HasUnigram(lm.EosId());
  for (const auto& [seq, entry] : lm.Entries()) {
    std::vector<TokenId> ctx(seq.begin(), seq.end() - 1);
    LmStateId s = lm.ContextState(ctx);
    if (lm.StateContext(s).size() != ctx.size()) continue;  // not a state
    TokenId w = seq.back();
    if (w == lm.EosId()) continue;  // sentence end lives in final weights
    auto [next, ln_prob] = lm.Advance(s, w);
    arcs.push_back(Arc{s, next, w, ln_prob});
  }
  for (LmStateId s = 0; s < n; ++s) {
    auto ctx = lm.StateContext(s);
    if (!ctx.empty()) {
      std::span<const TokenId> tail(ctx.data() + 1, ctx.size() - 1);
      arcs.push_back(Arc{s, lm.ContextState(tail), kEpsilon, lm.StateBackoff(s)});
    }
    if (!eos || !has_eos_entry) {
      finals.emplace_back(s, 0.0);
    } else {
      std::vector<TokenId> with_eos(ctx.begin(), ctx.end());
      with_eos.push_back(lm.EosId());
      auto it = lm.Entries().find(with_eos);
      if (it != lm.Entries().end()) finals.emplace_back(s, it->second.LnProb());
    }
  }
  return Wfsa(n, lm.StartState(bos), std::move(arcs), std::move(finals));
}

Wfsa MapLabelsToLm(const Wfsa& q, const SymbolTable& q_syms,
                   const NGramModel& lm, OovPolicy policy) {
  std::vector<Arc> arcs = q.Arcs();
  for (Arc& a : arcs) {
    if (a.label == kEpsilon) continue;
    a.label = lm.MapWord(q_syms.Name(a.label), policy);
  }
  return Wfsa(q.NumStates(), q.Start(), std::move(arcs), q.Finals());
}

Wfsa IntersectEpsilon(const Wfsa& q, const Wfsa& g) {
  struct PairHash {
    std::size_t operator()(const std::pair<int32_t, int32_t>& p) const {
      return std::hash<int64_t>()((static_cast<int64_t>(p.first) << 32) ^
                                  static_cast<uint32_t>(p.second));
    }
  };
  std::unordered_map<std::pair<int32_t, int32_t>, int32_t, PairHash> ids;
  std::vector<std::pair<int32_t, int32_t>> states;
  auto state_id = [&](int32_t qs, int32_t gs) {
    auto [it, inserted] = ids.emplace(std::make_pair(qs, gs),
                                      static_cast<int32_t>(states.size()));
    if (inserted) states.emplace_back(qs, gs);
    return it->second;
  };

  std::vector<Arc> arcs;
  std::vector<std::pair<int32_t, double>> finals;
  int32_t start = state_id(q.Start(), g.Start());
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto [qs, gs] = states[i];
    double qf = q.FinalWeight(qs);
    double gf = g.FinalWeight(gs);
    if (qf != kLogZero && gf != kLogZero) {
      finals.emplace_back(static_cast<int32_t>(i), qf + gf);
    }
    for (int32_t qi : q.ArcIndicesFrom(qs)) {
      const Arc& qa = q.Arcs()[qi];
      for (int32_t gi : g.ArcIndicesFrom(gs)) {
        const Arc& ga = g.Arcs()[gi];
        if (qa.label == kEpsilon && ga.label == kEpsilon) {
          // q stays (self-loop), g explores backoff.
          if (qa.src != qa.dst || ga.src == ga.dst) continue;
          int32_t dst = state_id(qs, ga.dst);
          arcs.push_back(Arc{static_cast<int32_t>(i), dst, kEpsilon,
                             qa.weight + ga.weight});
        } else if (qa.label != kEpsilon && qa.label == ga.label) {
          int32_t dst = state_id(qa.dst, ga.dst);
          arcs.push_back(Arc{static_cast<int32_t>(i), dst, qa.label,
                             qa.weight + ga.weight});
        }
      }
    }
  }
  return Wfsa(static_cast<int32_t>(states.size()), start, std::move(arcs),
              std::move(finals));
}

void WriteWfsaText(const Wfsa& a, const SymbolTable& syms, std::ostream& out) {
  for (const Arc& arc : a.Arcs()) {
    out << arc.src << '\t' << arc.dst << '\t' << syms.Name(arc.label) << '\t'
        << FormatDouble(arc.weight) << '\n';
  }
  for (const auto& [s, w] : a.Finals()) {
    out << s << '\t' << FormatDouble(w) << '\n';
  }
}

Wfsa ParseWfsaText(std::istream& in, SymbolTable* syms) {
  std::vector<Arc> arcs;
  std::vector<std::pair<int32_t, double>> finals;
  int32_t max_state = -1;
  int32_t start = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t tab = line.find('\t', pos);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(pos));
        break;
      }
      fields.push_back(line.substr(pos, tab - pos));
      pos = tab + 1;
    }
    auto parse_int = [&](const std::string& s) {
      try {
        return std::stoi(s);
      } catch (const std::exception&) {
        throw ParseError("bad state id '" + s + "'", lineno);
      }
    };
    auto parse_weight = [&](const std::string& s) {
      const char* b = s.c_str();
      char* e = nullptr;
      double v = std::strtod(b, &e);
      if (e != b + s.size() || e == b) {
        throw ParseError("bad weight '" + s + "'", lineno);
      }
      return v;
    };
    if (fields.size() == 4) {
      Arc a;
      a.src = parse_int(fields[0]);
      a.dst = parse_int(fields[1]);
      a.label = syms->Intern(fields[2]);
      a.weight = parse_weight(fields[3]);
      if (start < 0) start = a.src;
      max_state = std::max({max_state, a.src, a.dst});
      arcs.push_back(a);
    } else if (fields.size() == 2) {
      int32_t s = parse_int(fields[0]);
      finals.emplace_back(s, parse_weight(fields[1]));
      if (start < 0) start = s;
      max_state = std::max(max_state, s);
    } else {
      throw ParseError("expected 2 or 4 tab-separated fields, got " +
                       std::to_string(fields.size()), lineno);
    }
  }
  if (max_state < 0) throw ParseError("empty automaton dump", lineno);
  return Wfsa(max_state + 1, start, std::move(arcs), std::move(finals));
}

}  // namespace latfuse
