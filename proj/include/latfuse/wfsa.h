#ifndef LATFUSE_WFSA_H_
#define LATFUSE_WFSA_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "latfuse/ngram.h"
#include "latfuse/semiring.h"
#include "latfuse/token.h"

namespace latfuse {

struct Arc {
  int32_t src;
  int32_t dst;
  TokenId label;  // kEpsilon for epsilon arcs
  double weight;  // natural log

  friend bool operator==(const Arc&, const Arc&) = default;
};

// Weighted finite-state acceptor. Immutable after construction; a
// topological order (self-loops excluded) is computed once up front and
// reused by every scoring pass.
class Wfsa {
 public:
  Wfsa(int32_t num_states, int32_t start, std::vector<Arc> arcs,
       std::vector<std::pair<int32_t, double>> finals);

  int32_t NumStates() const { return num_states_; }
  int32_t Start() const { return start_; }
  const std::vector<Arc>& Arcs() const { return arcs_; }
  const std::vector<std::pair<int32_t, double>>& Finals() const { return finals_; }

  // kLogZero when the state is not final.
  double FinalWeight(int32_t state) const { return final_weight_[state]; }

  // Arc indices leaving a state, in insertion order.
  std::span<const int32_t> ArcIndicesFrom(int32_t state) const;

  // True when the automaton has no cycle other than self-loops.
  bool IsAcyclic() const { return acyclic_; }

  // States in topological order, self-loops ignored. Throws Error if cyclic.
  const std::vector<int32_t>& TopoOrder() const;

 private:
  int32_t num_states_;
  int32_t start_;
  std::vector<Arc> arcs_;
  std::vector<std::pair<int32_t, double>> finals_;
  std::vector<double> final_weight_;
  std::vector<int32_t> adj_arcs_;     // arc indices grouped by src
  std::vector<int32_t> adj_offsets_;  // per-state ranges into adj_arcs_
  std::vector<int32_t> topo_;
  bool acyclic_ = false;
};

struct PathScore {
  std::vector<TokenId> labels;  // epsilon-free label sequence
  double weight;                // arc-weight fold plus final weight
};

// Copy with one zero-weight epsilon self-loop added to every state.
Wfsa AddEpsilonSelfLoops(const Wfsa& a);

// Semiring-plus over all accepting paths of their semiring-times weights,
// in one pass over the cached topological order. kLogZero when no accepting
// path exists. Self-loops do not participate. Throws Error on cyclic input.
double ForwardScore(const Wfsa& a, Semiring semiring);

// Number of accepting paths (diagnostic; exact while representable).
double CountAcceptingPaths(const Wfsa& a);

// All accepted paths in lexicographic label order. Epsilon labels are not
// emitted into label sequences; epsilon self-loops are skipped entirely.
// Throws Error when more than `limit` paths exist.
std::vector<PathScore> EnumeratePaths(const Wfsa& a, std::size_t limit);

struct IntersectOptions {
  bool bos = false;
  bool eos = false;
  OovPolicy oov = OovPolicy::kUnk;
};

// Lazy composition of an acyclic, epsilon-free acceptor with the LM: states
// are reachable (q state, LM context) pairs and every arc weight adds the
// exact backoff-resolved conditional probability of its word. The accepted
// language equals q's, with q's own label ids preserved. Backoff is resolved
// inside the LM query, so no word sequence is duplicated or dropped.
Wfsa IntersectWithLm(const Wfsa& q, const SymbolTable& q_syms,
                     const NGramModel& lm, const IntersectOptions& opts);

// The paper-style explicit construction: materializes the LM as an acceptor
// over its own token ids with epsilon backoff arcs. Intended to be paired
// with AddEpsilonSelfLoops + IntersectEpsilon; can double-count word
// sequences reachable both directly and through backoff.
Wfsa LmToWfsaExplicit(const NGramModel& lm, bool bos, bool eos);

// Relabels q's arcs from q_syms into the LM's token space (<unk> mapping
// per policy). Epsilon labels pass through.
Wfsa MapLabelsToLm(const Wfsa& q, const SymbolTable& q_syms,
                   const NGramModel& lm, OovPolicy policy);

// Product automaton where epsilon self-loops in q synchronize with epsilon
// arcs in g (the paper's backoff-exploration device).
Wfsa IntersectEpsilon(const Wfsa& q, const Wfsa& g);

// Text dump, one arc per line "src<TAB>dst<TAB>label<TAB>weight", final
// states as "state<TAB>weight". The start state is the src of the first
// arc line (or the first final state if there are no arcs).
void WriteWfsaText(const Wfsa& a, const SymbolTable& syms, std::ostream& out);

// Parses the text dump format, interning labels into *syms.
Wfsa ParseWfsaText(std::istream& in, SymbolTable* syms);

}  // namespace latfuse

#endif  // LATFUSE_WFSA_H_
