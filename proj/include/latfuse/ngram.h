#ifndef LATFUSE_NGRAM_H_
#define LATFUSE_NGRAM_H_

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "latfuse/token.h"

namespace latfuse {

// What to do with a word the LM has never seen.
enum class OovPolicy { kUnk, kHardError };

// Opaque id of an LM context (a token sequence of length 0..order-1).
// State 0 is always the empty context.
using LmStateId = int32_t;

// One ARPA entry as authored: log10 values are kept verbatim so that
// serialization round-trips bit-exactly; all queries use natural logs.
struct ArpaEntry {
  double log10_prob = 0.0;
  double log10_backoff = 0.0;
  bool has_backoff = false;

  double LnProb() const { return log10_prob * M_LN10; }
  double LnBackoff() const { return has_backoff ? log10_backoff * M_LN10 : 0.0; }
};

struct SmoothingConfig {
  enum Kind { kWittenBell, kAddK };
  Kind kind = kWittenBell;
  double k = 0.5;  // add-k constant, ignored for Witten-Bell
};

// Word-level backoff N-gram LM. Immutable after construction; all queries
// are read-only and safe to share across threads.
class NGramModel {
 public:
  int Order() const { return order_; }
  const SymbolTable& Symbols() const { return symbols_; }

  // Reserved symbols are always interned (ids 1..3); presence in the model
  // itself is a separate question, see HasUnigram.
  TokenId BosId() const { return bos_; }
  TokenId EosId() const { return eos_; }
  TokenId UnkId() const { return unk_; }

  bool HasUnigram(TokenId token) const;

  // Natural-log P(token | context) by exact backoff recursion: if the full
  // (context, token) N-gram is listed return its probability, otherwise
  // backoff(context) + P(token | shortened context). The context may be any
  // length; only the most recent order-1 tokens matter. A token without a
  // unigram entry is scored as <unk>; if <unk> is absent too, throws OovError.
  double CondLogProb(std::span<const TokenId> context, TokenId token) const;

  // Transition function of the LM automaton: same probability as
  // CondLogProb on the state's context, next state is the longest suffix of
  // (context + token) that is a listed context.
  std::pair<LmStateId, double> Advance(LmStateId state, TokenId token) const;

  LmStateId StartState(bool with_bos) const;

  // Longest listed suffix of the given context.
  LmStateId ContextState(std::span<const TokenId> context) const;

  std::span<const TokenId> StateContext(LmStateId state) const;
  std::size_t NumStates() const { return states_.size(); }

  // Natural-log backoff weight of a state's context (0.0 if none listed).
  double StateBackoff(LmStateId state) const;

  // Interns nothing: returns the token for a word string, substituting <unk>
  // for unknown words under kUnk. Throws OovError for unknown words under
  // kHardError, or when <unk> itself is missing from the model.
  TokenId MapWord(std::string_view word, OovPolicy policy) const;

  // Raw entries keyed by token-id sequences, ordered (deterministic).
  const std::map<std::vector<TokenId>, ArpaEntry>& Entries() const {
    return entries_;
  }

  void WriteArpa(std::ostream& out) const;

  // Checks ARPA well-formedness: prefix closure, non-positive finite
  // probabilities, finite backoffs, per-context mass <= 1 + 1e-6.
  // Throws Error on violation.
  void Validate() const;

  // Structural equality on string-keyed entries (robust to interning order).
  friend bool operator==(const NGramModel& a, const NGramModel& b);

 private:
  friend NGramModel ParseArpa(std::istream& in);
  friend NGramModel TrainToyLm(const std::vector<std::string>& corpus_lines,
                               int order, const SmoothingConfig& smoothing);

  struct Successor {
    double ln_prob;
    LmStateId next;
  };
  struct LmState {
    std::vector<TokenId> context;
    double ln_backoff = 0.0;       // weight applied when falling back
    LmStateId backoff_state = 0;   // longest listed suffix of context minus
                                   // its oldest token
    std::vector<std::pair<TokenId, Successor>> succs;  // sorted by token
  };

  NGramModel() = default;
  void Compile();  // builds the state machine from entries_
  const Successor* FindSuccessor(const LmState& s, TokenId token) const;
  TokenId EffectiveToken(TokenId token) const;  // <unk> substitution

  SymbolTable symbols_;
  int order_ = 0;
  TokenId bos_ = kNoSymbol, eos_ = kNoSymbol, unk_ = kNoSymbol;
  std::map<std::vector<TokenId>, ArpaEntry> entries_;
  std::vector<LmState> states_;

  struct VecHash {
    std::size_t operator()(const std::vector<TokenId>& v) const {
      std::size_t h = 14695981039346656037ull;
      for (TokenId t : v) {
        h ^= static_cast<std::size_t>(t) + 0x9e3779b97f4a7c15ull;
        h *= 1099511628211ull;
      }
      return h;
    }
  };
  std::unordered_map<std::vector<TokenId>, LmStateId, VecHash> state_of_;
};

// Parses ARPA text (log10 probabilities, \data\ / \N-grams: / \end\
// sections). Throws ParseError with a line number on malformed input.
NGramModel ParseArpa(std::istream& in);

// Trains a small backoff model from whitespace-segmented lines. Sentences
// are padded with <s> and </s>; leftover unigram mass goes to <unk>.
// Deterministic given inputs. Throws Error on an empty corpus.
NGramModel TrainToyLm(const std::vector<std::string>& corpus_lines, int order,
                      const SmoothingConfig& smoothing);

}  // namespace latfuse

#endif  // LATFUSE_NGRAM_H_
