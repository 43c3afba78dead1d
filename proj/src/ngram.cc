#include "latfuse/ngram.h"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "latfuse/errors.h"
#include "latfuse/utf8.h"

namespace latfuse {

namespace {

// Shortest decimal form that parses back to the same double.
std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> SplitWhitespace(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

bool ParseDoubleField(const std::string& s, double* out) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  if (end != begin + s.size() || end == begin || errno == ERANGE) return false;
  *out = v;
  return true;
}

std::vector<TokenId> Concat(const std::vector<TokenId>& ctx, TokenId w) {
  std::vector<TokenId> out = ctx;
  out.push_back(w);
  return out;
}

}  // namespace

void NGramModel::Compile() {
  states_.clear();
  state_of_.clear();

  // State 0 is the empty context; other states are listed contexts
  // (entries of length <= order-1), interned shortest-first so that a
  // context's suffixes always exist before it is processed.
  states_.push_back(LmState{});
  state_of_.emplace(std::vector<TokenId>{}, 0);
  for (int len = 1; len < order_; ++len) {
    for (const auto& [seq, entry] : entries_) {
      if (static_cast<int>(seq.size()) != len) continue;
      LmStateId id = static_cast<LmStateId>(states_.size());
      LmState st;
      st.context = seq;
      st.ln_backoff = entry.LnBackoff();
      states_.push_back(std::move(st));
      state_of_.emplace(seq, id);
    }
  }
  for (auto& st : states_) {
    if (st.context.empty()) continue;
    std::span<const TokenId> tail(st.context.data() + 1, st.context.size() - 1);
    st.backoff_state = ContextState(tail);
  }
  // Successor arcs: every listed (context, token) pair, with the next state
  // precomputed as the longest listed suffix of (context + token).
  for (const auto& [seq, entry] : entries_) {
    auto ctx_it = state_of_.find(
        std::vector<TokenId>(seq.begin(), seq.end() - 1));
    if (ctx_it == state_of_.end()) {
      throw Error("entry context missing for a listed N-gram");
    }
    LmState& st = states_[ctx_it->second];
    std::vector<TokenId> ext = seq;
    if (static_cast<int>(ext.size()) > order_ - 1) {
      ext.erase(ext.begin(), ext.end() - (order_ - 1));
    }
    Successor succ{entry.LnProb(), ContextState(ext)};
    st.succs.emplace_back(seq.back(), succ);
  }
  for (auto& st : states_) {
    std::sort(st.succs.begin(), st.succs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
}

const NGramModel::Successor* NGramModel::FindSuccessor(const LmState& s,
                                                       TokenId token) const {
  auto it = std::lower_bound(
      s.succs.begin(), s.succs.end(), token,
      [](const auto& p, TokenId t) { return p.first < t; });
  if (it != s.succs.end() && it->first == token) return &it->second;
  return nullptr;
}

bool NGramModel::HasUnigram(TokenId token) const {
  return FindSuccessor(states_[0], token) != nullptr;
}

TokenId NGramModel::EffectiveToken(TokenId token) const {
  if (HasUnigram(token)) return token;
  if (unk_ != kNoSymbol && HasUnigram(unk_)) return unk_;
  std::string name = token >= 0 && token < static_cast<TokenId>(symbols_.Size())
                         ? symbols_.Name(token)
                         : "#" + std::to_string(token);
  throw OovError("token '" + name + "' has no unigram entry and the model has no <unk>");
}

LmStateId NGramModel::ContextState(std::span<const TokenId> context) const {
  std::size_t max_len =
      std::min<std::size_t>(context.size(), order_ > 0 ? order_ - 1 : 0);
  for (std::size_t len = max_len; len > 0; --len) {
    std::vector<TokenId> suffix(context.end() - len, context.end());
    auto it = state_of_.find(suffix);
    if (it != state_of_.end()) return it->second;
  }
  return 0;
}

double NGramModel::CondLogProb(std::span<const TokenId> context,
                               TokenId token) const {
  return Advance(ContextState(context), token).second;
}

std::pair<LmStateId, double> NGramModel::Advance(LmStateId state,
                                                 TokenId token) const {
  TokenId tok = EffectiveToken(token);
  LmStateId s = state;
  double acc = 0.0;
  for (;;) {
    const Successor* succ = FindSuccessor(states_[s], tok);
    if (succ != nullptr) return {succ->next, acc + succ->ln_prob};
    // tok has a unigram, so the walk always resolves before leaving state 0.
    acc += states_[s].ln_backoff;
    s = states_[s].backoff_state;
  }
}

LmStateId NGramModel::StartState(bool with_bos) const {
  if (with_bos && bos_ != kNoSymbol) {
    auto it = state_of_.find(std::vector<TokenId>{bos_});
    if (it != state_of_.end()) return it->second;
  }
  return 0;
}

std::span<const TokenId> NGramModel::StateContext(LmStateId state) const {
  return states_.at(state).context;
}

double NGramModel::StateBackoff(LmStateId state) const {
  return states_.at(state).ln_backoff;
}

TokenId NGramModel::MapWord(std::string_view word, OovPolicy policy) const {
  TokenId id = symbols_.Find(word);
  if (id != kNoSymbol && HasUnigram(id)) return id;
  if (policy == OovPolicy::kHardError) {
    throw OovError("word '" + std::string(word) + "' is not in the LM vocabulary");
  }
  if (unk_ != kNoSymbol && HasUnigram(unk_)) return unk_;
  throw OovError("word '" + std::string(word) +
                 "' is not in the LM vocabulary and the model has no <unk>");
}

void NGramModel::WriteArpa(std::ostream& out) const {
  std::vector<std::size_t> counts(order_ + 1, 0);
  for (const auto& [seq, entry] : entries_) ++counts[seq.size()];
  out << "\\data\\\n";
  for (int k = 1; k <= order_; ++k) {
    out << "ngram " << k << "=" << counts[k] << "\n";
  }
  for (int k = 1; k <= order_; ++k) {
    out << "\n\\" << k << "-grams:\n";
    for (const auto& [seq, entry] : entries_) {
      if (static_cast<int>(seq.size()) != k) continue;
      out << FormatDouble(entry.log10_prob);
      for (std::size_t i = 0; i < seq.size(); ++i) {
        out << (i == 0 ? '\t' : ' ') << symbols_.Name(seq[i]);
      }
      if (entry.has_backoff) out << '\t' << FormatDouble(entry.log10_backoff);
      out << "\n";
    }
  }
  out << "\n\\end\\\n";
}

void NGramModel::Validate() const {
  if (order_ < 1) throw Error("model order must be >= 1");
  std::map<std::vector<TokenId>, double> mass;  // context -> sum of probs
  for (const auto& [seq, entry] : entries_) {
    if (seq.empty() || static_cast<int>(seq.size()) > order_) {
      throw Error("entry length out of range");
    }
    if (!(entry.log10_prob <= 0.0)) {
      throw Error("entry log-probability must be <= 0");
    }
    if (!std::isfinite(entry.log10_prob) || !std::isfinite(entry.log10_backoff)) {
      throw Error("entry probability and backoff must be finite");
    }
    if (entry.has_backoff && static_cast<int>(seq.size()) == order_) {
      throw Error("highest-order entry cannot carry a backoff weight");
    }
    if (seq.size() > 1) {
      std::vector<TokenId> prefix(seq.begin(), seq.end() - 1);
      if (entries_.find(prefix) == entries_.end()) {
        throw Error("entry prefix missing: ARPA well-formedness violated");
      }
    }
    std::vector<TokenId> ctx(seq.begin(), seq.end() - 1);
    mass[ctx] += std::exp(entry.LnProb());
  }
  for (const auto& [ctx, total] : mass) {
    if (total > 1.0 + 1e-6) {
      std::string names;
      for (TokenId t : ctx) names += symbols_.Name(t) + " ";
      throw Error("successor mass exceeds 1 for context [" + names + "]: " +
                  std::to_string(total));
    }
  }
}

bool operator==(const NGramModel& a, const NGramModel& b) {
  if (a.order_ != b.order_) return false;
  if (a.entries_.size() != b.entries_.size()) return false;
  auto keyed = [](const NGramModel& m) {
    std::map<std::vector<std::string>, ArpaEntry> out;
    for (const auto& [seq, entry] : m.entries_) {
      std::vector<std::string> key;
      key.reserve(seq.size());
      for (TokenId t : seq) key.push_back(m.symbols_.Name(t));
      out.emplace(std::move(key), entry);
    }
    return out;
  };
  auto ka = keyed(a), kb = keyed(b);
  auto ita = ka.begin();
  auto itb = kb.begin();
  for (; ita != ka.end() && itb != kb.end(); ++ita, ++itb) {
    if (ita->first != itb->first) return false;
    if (ita->second.log10_prob != itb->second.log10_prob) return false;
    if (ita->second.has_backoff != itb->second.has_backoff) return false;
    if (ita->second.has_backoff &&
        ita->second.log10_backoff != itb->second.log10_backoff) {
      return false;
    }
  }
  return ita == ka.end() && itb == kb.end();
}

NGramModel ParseArpa(std::istream& in) {
  NGramModel model;
  model.bos_ = model.symbols_.Intern(kBosSymbol);
  model.eos_ = model.symbols_.Intern(kEosSymbol);
  model.unk_ = model.symbols_.Intern(kUnkSymbol);

  std::string line;
  std::size_t lineno = 0;
  bool first_content_line = true;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (first_content_line) {
      if (HasUtf8Bom(line)) {
        throw ParseError("UTF-8 BOM not allowed in ARPA input", lineno);
      }
      first_content_line = false;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  auto is_blank = [](const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
      return std::isspace(c);
    });
  };

  // Header.
  for (;;) {
    if (!next_line()) throw ParseError("missing \\data\\ header", lineno);
    if (is_blank(line)) continue;
    if (line == "\\data\\") break;
    throw ParseError("expected \\data\\ header, got '" + line + "'", lineno);
  }
  std::map<int, std::size_t> declared;
  for (;;) {
    if (!next_line()) throw ParseError("unexpected end of file in \\data\\ section", lineno);
    if (is_blank(line)) {
      if (!declared.empty()) break;
      continue;
    }
    if (line.rfind("ngram ", 0) == 0) {
      std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw ParseError("malformed ngram count declaration", lineno);
      }
      int k = 0;
      std::size_t count = 0;
      try {
        k = std::stoi(line.substr(6, eq - 6));
        count = std::stoul(line.substr(eq + 1));
      } catch (const std::exception&) {
        throw ParseError("malformed ngram count declaration", lineno);
      }
      if (k < 1 || declared.count(k)) {
        throw ParseError("bad or duplicate ngram order in header", lineno);
      }
      declared[k] = count;
      continue;
    }
    if (line[0] == '\\') break;  // section header follows without blank line
    throw ParseError("unexpected line in \\data\\ section: '" + line + "'", lineno);
  }
  if (declared.empty()) throw ParseError("no ngram counts declared", lineno);
  model.order_ = declared.rbegin()->first;
  for (int k = 1; k <= model.order_; ++k) {
    if (!declared.count(k)) {
      throw ParseError("missing ngram count declaration for order " +
                       std::to_string(k), lineno);
    }
  }

  // Sections. The loop may already be positioned on a section header.
  std::map<int, std::size_t> seen_counts;
  std::map<std::vector<TokenId>, std::size_t> entry_line;
  bool at_header = !is_blank(line) && line[0] == '\\' && line != "\\end\\";
  bool done = !is_blank(line) && line == "\\end\\";
  while (!done) {
    if (!at_header) {
      if (!next_line()) throw ParseError("missing \\end\\ marker", lineno);
      if (is_blank(line)) continue;
    }
    at_header = false;
    if (line == "\\end\\") break;
    int k = 0;
    {
      std::size_t dash = line.find("-grams:");
      if (line.empty() || line[0] != '\\' || dash == std::string::npos) {
        throw ParseError("expected N-grams section header, got '" + line + "'", lineno);
      }
      try {
        k = std::stoi(line.substr(1, dash - 1));
      } catch (const std::exception&) {
        throw ParseError("malformed section header '" + line + "'", lineno);
      }
      if (k < 1 || k > model.order_ || !declared.count(k)) {
        throw ParseError("section order not declared in header", lineno);
      }
      if (seen_counts.count(k)) {
        throw ParseError("duplicate section for order " + std::to_string(k), lineno);
      }
    }
    std::size_t n_entries = 0;
    for (;;) {
      if (!next_line()) throw ParseError("missing \\end\\ marker", lineno);
      if (is_blank(line)) continue;
      if (line[0] == '\\') {
        at_header = true;
        if (line == "\\end\\") done = true;
        break;
      }
      auto fields = SplitWhitespace(line);
      if (fields.size() != static_cast<std::size_t>(k) + 1 &&
          fields.size() != static_cast<std::size_t>(k) + 2) {
        throw ParseError("expected " + std::to_string(k + 1) + " or " +
                         std::to_string(k + 2) + " fields, got " +
                         std::to_string(fields.size()), lineno);
      }
      ArpaEntry entry;
      if (!ParseDoubleField(fields[0], &entry.log10_prob)) {
        throw ParseError("non-numeric log-probability '" + fields[0] + "'", lineno);
      }
      if (fields.size() == static_cast<std::size_t>(k) + 2) {
        if (k == model.order_) {
          throw ParseError("backoff weight on a highest-order entry", lineno);
        }
        if (!ParseDoubleField(fields.back(), &entry.log10_backoff)) {
          throw ParseError("non-numeric backoff weight '" + fields.back() + "'", lineno);
        }
        entry.has_backoff = true;
      }
      std::vector<TokenId> seq;
      seq.reserve(k);
      for (int i = 1; i <= k; ++i) {
        if (fields[i] == kEpsSymbol) {
          throw ParseError("<eps> cannot appear in an N-gram entry", lineno);
        }
        seq.push_back(model.symbols_.Intern(fields[i]));
      }
      if (!model.entries_.emplace(seq, entry).second) {
        throw ParseError("duplicate N-gram entry", lineno);
      }
      entry_line.emplace(std::move(seq), lineno);
      ++n_entries;
    }
    seen_counts[k] = n_entries;
    if (n_entries != declared[k]) {
      throw ParseError("ngram " + std::to_string(k) + " count mismatch: declared " +
                       std::to_string(declared[k]) + ", found " +
                       std::to_string(n_entries), lineno);
    }
    if (done) break;
  }
  for (const auto& [k, count] : declared) {
    if (!seen_counts.count(k)) {
      if (count == 0) continue;
      throw ParseError("ngram " + std::to_string(k) + " count mismatch: declared " +
                       std::to_string(count) + ", found 0", lineno);
    }
  }

  // Prefix closure reported against the offending entry's own line.
  for (const auto& [seq, entry] : model.entries_) {
    if (seq.size() < 2) continue;
    std::vector<TokenId> prefix(seq.begin(), seq.end() - 1);
    if (model.entries_.find(prefix) == model.entries_.end()) {
      std::string names;
      for (TokenId t : seq) names += model.symbols_.Name(t) + " ";
      throw ParseError("N-gram [" + names + "] has no listed prefix",
                       entry_line.at(seq));
    }
  }
  try {
    model.Validate();
  } catch (const Error& e) {
    throw ParseError(e.what(), lineno);
  }
  model.Compile();
  return model;
}

namespace {

// Conditional probability over partially built count tables: linear-domain
// probabilities for orders < k are already final when order k is processed.
double PartialCondProb(
    const std::map<std::vector<TokenId>, double>& probs,
    const std::map<std::vector<TokenId>, double>& backoffs,
    std::vector<TokenId> ngram) {
  for (;;) {
    auto it = probs.find(ngram);
    if (it != probs.end()) return it->second;
    if (ngram.size() == 1) return 0.0;  // unseen unigram carries no mass
    std::vector<TokenId> ctx(ngram.begin(), ngram.end() - 1);
    double bow = 1.0;
    auto bit = backoffs.find(ctx);
    if (bit != backoffs.end()) bow = bit->second;
    ngram.erase(ngram.begin());
    auto rest = PartialCondProb(probs, backoffs, std::move(ngram));
    return bow * rest;
  }
}

}  // namespace

NGramModel TrainToyLm(const std::vector<std::string>& corpus_lines, int order,
                      const SmoothingConfig& smoothing) {
  if (order < 1) throw Error("order must be >= 1");
  NGramModel model;
  model.bos_ = model.symbols_.Intern(kBosSymbol);
  model.eos_ = model.symbols_.Intern(kEosSymbol);
  model.unk_ = model.symbols_.Intern(kUnkSymbol);
  model.order_ = order;

  // Count all k-gram windows over <s> w1..wn </s>, except the bare <s>
  // unigram: <s> is never predicted, it only anchors contexts.
  std::map<std::vector<TokenId>, int64_t> counts;
  bool any = false;
  for (const auto& raw : corpus_lines) {
    auto words = SplitWhitespace(raw);
    if (words.empty()) continue;
    any = true;
    std::vector<TokenId> padded;
    padded.reserve(words.size() + 2);
    padded.push_back(model.bos_);
    for (const auto& w : words) {
      if (w == kEpsSymbol) throw Error("<eps> cannot appear in a corpus");
      padded.push_back(model.symbols_.Intern(w));
    }
    padded.push_back(model.eos_);
    for (int k = 1; k <= order; ++k) {
      for (std::size_t i = 0; i + k <= padded.size(); ++i) {
        if (k == 1 && i == 0) continue;
        counts[std::vector<TokenId>(padded.begin() + i, padded.begin() + i + k)]++;
      }
    }
  }
  if (!any) throw Error("empty corpus");

  // Linear-domain probabilities and backoff weights, filled order by order.
  std::map<std::vector<TokenId>, double> probs;
  std::map<std::vector<TokenId>, double> backoffs;

  // Group counted k-grams by context.
  auto group_by_context = [&](int k) {
    std::map<std::vector<TokenId>, std::vector<std::pair<TokenId, int64_t>>> groups;
    for (const auto& [seq, c] : counts) {
      if (static_cast<int>(seq.size()) != k) continue;
      std::vector<TokenId> ctx(seq.begin(), seq.end() - 1);
      groups[ctx].emplace_back(seq.back(), c);
    }
    return groups;
  };

  const bool witten_bell = smoothing.kind == SmoothingConfig::kWittenBell;
  const double addk = smoothing.k;
  double unigram_types = 0.0;

  // Unigrams.
  {
    auto groups = group_by_context(1);
    const auto& succ = groups[std::vector<TokenId>{}];
    int64_t total = 0;
    for (const auto& [w, c] : succ) total += c;
    double types = static_cast<double>(succ.size());
    // Successor vocabulary for add-k: every observed symbol plus <unk>.
    double vocab_size = types + 1.0;
    for (const auto& [w, c] : succ) {
      double p = witten_bell
                     ? static_cast<double>(c) / (total + types)
                     : (static_cast<double>(c) + addk) / (total + addk * vocab_size);
      probs[{w}] = p;
    }
    double unk_mass = witten_bell ? types / (total + types)
                                  : addk / (total + addk * vocab_size);
    if (unk_mass > 0.0) probs[{model.unk_}] = unk_mass;
    unigram_types = static_cast<double>(probs.size());
  }

  // Higher orders.
  for (int k = 2; k <= order; ++k) {
    auto groups = group_by_context(k);
    for (const auto& [ctx, succ] : groups) {
      int64_t total = 0;
      for (const auto& [w, c] : succ) total += c;
      double types = static_cast<double>(succ.size());
      double vocab_size = unigram_types;
      double listed_mass = 0.0;
      double lower_mass = 0.0;
      for (const auto& [w, c] : succ) {
        double p;
        if (witten_bell) {
          p = static_cast<double>(c) / (total + types);
        } else {
          p = (static_cast<double>(c) + addk) / (total + addk * vocab_size);
        }
        if (p <= 0.0) continue;
        probs[Concat(ctx, w)] = p;
        listed_mass += p;
        std::vector<TokenId> lower(ctx.begin() + 1, ctx.end());
        lower.push_back(w);
        lower_mass += PartialCondProb(probs, backoffs, std::move(lower));
      }
      double num = 1.0 - listed_mass;
      double den = 1.0 - lower_mass;
      double bow = (num > 1e-12 && den > 1e-12) ? num / den : 1.0;
      backoffs[ctx] = bow;
    }
  }

  // Assemble entries: probabilities quantized through log10 so that
  // serialize-then-parse reproduces the model exactly.
  for (const auto& [seq, p] : probs) {
    ArpaEntry e;
    e.log10_prob = std::log10(p);
    model.entries_[seq] = e;
  }
  for (const auto& [ctx, bow] : backoffs) {
    auto it = model.entries_.find(ctx);
    if (it == model.entries_.end()) {
      // Context seen only as a prefix (e.g. <s> of an order-2 model).
      ArpaEntry e;
      e.log10_prob = -99.0;
      it = model.entries_.emplace(ctx, e).first;
    }
    it->second.has_backoff = true;
    it->second.log10_backoff = std::log10(bow);
  }

  model.Validate();
  model.Compile();
  return model;
}

}  // namespace latfuse
