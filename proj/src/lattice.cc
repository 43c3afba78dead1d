#include "latfuse/lattice.h"

#include <algorithm>
#include <fstream>
#include <istream>

#include "latfuse/errors.h"
#include "latfuse/utf8.h"

namespace latfuse {

Vocabulary Vocabulary::FromWords(const std::vector<std::string>& words) {
  Vocabulary v;
  for (const auto& w : words) {
    if (w.empty()) continue;
    if (v.symbols_.Contains(w)) continue;
    auto chars = Utf8Chars(w);
    v.symbols_.Intern(w);
    ++v.size_;
    v.max_word_len_ = std::max(v.max_word_len_, static_cast<int>(chars.size()));
    if (chars.size() == 1) v.char_cover_.insert(w);
  }
  if (v.size_ == 0) throw Error("empty vocabulary");
  return v;
}

Vocabulary Vocabulary::FromStream(std::istream& in) {
  std::vector<std::string> words;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      if (HasUtf8Bom(line)) throw ParseError("UTF-8 BOM not allowed in vocabulary input", 1);
      first = false;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // Trim surrounding whitespace.
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t");
    words.push_back(line.substr(b, e - b + 1));
  }
  return FromWords(words);
}

Vocabulary Vocabulary::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary file: " + path);
  return FromStream(in);
}

bool Vocabulary::CoversTokens(const std::vector<std::string>& tokens) const {
  for (const auto& tok : tokens) {
    for (const auto& c : Utf8Chars(tok)) {
      if (!CoversChar(c)) return false;
    }
  }
  return true;
}

namespace {

// Arc set of Algorithm 1 over chars[0..m), word length major. Only arcs
// ending past `from_state` are produced, which makes the same routine serve
// both batch build (from_state = 0) and single-character extension.
void CollectArcs(const std::vector<std::string>& chars, const Vocabulary& v,
                 int from_state, std::vector<Arc>* arcs) {
  const int m = static_cast<int>(chars.size());
  const int l = v.MaxWordLen();
  std::string word;
  for (int r = 1; r <= l; ++r) {
    for (int s = 1; s + r - 1 <= m; ++s) {
      if (s + r - 1 <= from_state) continue;
      word.clear();
      for (int i = s - 1; i < s + r - 1; ++i) word += chars[i];
      TokenId id = v.WordId(word);
      if (id == kNoSymbol) continue;
      arcs->push_back(Arc{s - 1, s + r - 1, id, 0.0});
    }
  }
}

std::shared_ptr<const Wfsa> MakeFsa(int m, std::vector<Arc> arcs) {
  return std::make_shared<Wfsa>(m + 1, 0, std::move(arcs),
                                std::vector<std::pair<int32_t, double>>{{m, 0.0}});
}

// On an unreachable end state, names the first character past the furthest
// reachable prefix position: no vocabulary word bridges it.
void CheckCoverage(const std::vector<std::string>& chars, const Wfsa& fsa) {
  const int m = static_cast<int>(chars.size());
  std::vector<char> reach(m + 1, 0);
  reach[0] = 1;
  for (int32_t s = 0; s <= m; ++s) {
    if (!reach[s]) continue;
    for (int32_t ai : fsa.ArcIndicesFrom(s)) reach[fsa.Arcs()[ai].dst] = 1;
  }
  if (reach[m]) return;
  int furthest = 0;
  for (int s = 0; s <= m; ++s) {
    if (reach[s]) furthest = s;
  }
  throw CoverageError(chars[furthest], static_cast<std::size_t>(furthest) + 1);
}

}  // namespace

SegmentationLattice BuildLattice(std::string_view utf8_chars,
                                 std::shared_ptr<const Vocabulary> vocab,
                                 const BuildOptions& opts) {
  if (vocab == nullptr) throw Error("vocabulary is required");
  auto chars = Utf8Chars(utf8_chars);
  if (chars.empty()) throw Error("cannot build a lattice over an empty sequence");
  std::vector<Arc> arcs;
  CollectArcs(chars, *vocab, 0, &arcs);
  auto fsa = MakeFsa(static_cast<int>(chars.size()), std::move(arcs));
  if (opts.require_coverage) CheckCoverage(chars, *fsa);
  return SegmentationLattice(std::move(chars), std::move(vocab), std::move(fsa));
}

SegmentationLattice ExtendLattice(const SegmentationLattice& lat,
                                  std::string_view utf8_char) {
  auto appended = Utf8Chars(utf8_char);
  if (appended.size() != 1) {
    throw Error("ExtendLattice takes exactly one character, got '" +
                std::string(utf8_char) + "'");
  }
  std::vector<std::string> chars = lat.Chars();
  chars.push_back(std::move(appended.front()));
  const int m = static_cast<int>(chars.size());
  std::vector<Arc> arcs = lat.Fsa().Arcs();
  CollectArcs(chars, lat.Vocab(), m - 1, &arcs);
  return SegmentationLattice(std::move(chars), lat.VocabPtr(),
                             MakeFsa(m, std::move(arcs)));
}

}  // namespace latfuse
