#ifndef LATFUSE_LATTICE_H_
#define LATFUSE_LATTICE_H_

#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "latfuse/token.h"
#include "latfuse/wfsa.h"

namespace latfuse {

// Word list for segmentation. Positions and word lengths count Unicode
// scalar values. Immutable once built.
class Vocabulary {
 public:
  static Vocabulary FromWords(const std::vector<std::string>& words);
  // One word per line, '#' starts a comment, duplicates collapse.
  static Vocabulary FromStream(std::istream& in);
  static Vocabulary FromFile(const std::string& path);

  const SymbolTable& Symbols() const { return symbols_; }
  int MaxWordLen() const { return max_word_len_; }
  std::size_t Size() const { return size_; }

  bool Contains(std::string_view word) const {
    return symbols_.Find(word) != kNoSymbol;
  }
  TokenId WordId(std::string_view word) const { return symbols_.Find(word); }

  bool CoversChar(std::string_view utf8_char) const {
    return char_cover_.count(std::string(utf8_char)) != 0;
  }
  const std::unordered_set<std::string>& CharCover() const { return char_cover_; }

  // Decoder compatibility: every character of every given token is a
  // single-character word, so segmentation can always fall back to
  // characters and the lattice end state stays reachable.
  bool CoversTokens(const std::vector<std::string>& tokens) const;

 private:
  SymbolTable symbols_;
  std::unordered_set<std::string> char_cover_;
  int max_word_len_ = 0;
  std::size_t size_ = 0;
};

struct BuildOptions {
  // When set, an unreachable end state raises CoverageError naming the
  // blocking character. Scoring paths disable this and surface -inf instead.
  bool require_coverage = true;
};

// Positional acceptor over one character sequence: state i is "after i
// characters", every segmentation into vocabulary words is exactly one
// accepting path, all arc weights are 0. Values are immutable; extending
// shares nothing mutable with the parent, so beam branches are independent.
class SegmentationLattice {
 public:
  const Wfsa& Fsa() const { return *fsa_; }
  const std::vector<std::string>& Chars() const { return chars_; }
  const Vocabulary& Vocab() const { return *vocab_; }
  const std::shared_ptr<const Vocabulary>& VocabPtr() const { return vocab_; }

 private:
  friend SegmentationLattice BuildLattice(std::string_view,
                                          std::shared_ptr<const Vocabulary>,
                                          const BuildOptions&);
  friend SegmentationLattice ExtendLattice(const SegmentationLattice&,
                                           std::string_view);
  SegmentationLattice(std::vector<std::string> chars,
                      std::shared_ptr<const Vocabulary> vocab,
                      std::shared_ptr<const Wfsa> fsa)
      : chars_(std::move(chars)), vocab_(std::move(vocab)), fsa_(std::move(fsa)) {}

  std::vector<std::string> chars_;
  std::shared_ptr<const Vocabulary> vocab_;
  std::shared_ptr<const Wfsa> fsa_;
};

// Builds the lattice over all segmentations: an arc (s-1, s+r-1) labeled
// with the interned word C_s..C_{s+r-1} for every vocabulary word found in
// the sequence, r up to the vocabulary's maximum word length. Deterministic
// arc order (word length major, start position minor).
SegmentationLattice BuildLattice(std::string_view utf8_chars,
                                 std::shared_ptr<const Vocabulary> vocab,
                                 const BuildOptions& opts = {});

// Appends one character: structurally equal (same arc set) to rebuilding
// from scratch, adding only arcs that end at the new state. The parent
// remains valid and unmodified. An uncovered character is not an error
// here; it surfaces as an unreachable frontier at scoring time.
SegmentationLattice ExtendLattice(const SegmentationLattice& lat,
                                  std::string_view utf8_char);

}  // namespace latfuse

#endif  // LATFUSE_LATTICE_H_
