#ifndef LATFUSE_TOKEN_H_
#define LATFUSE_TOKEN_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace latfuse {

using TokenId = int32_t;

inline constexpr TokenId kEpsilon = 0;    // reserved, never a real symbol
inline constexpr TokenId kNoSymbol = -1;

inline constexpr const char* kEpsSymbol = "<eps>";
inline constexpr const char* kBosSymbol = "<s>";
inline constexpr const char* kEosSymbol = "</s>";
inline constexpr const char* kUnkSymbol = "<unk>";

// Interns UTF-8 strings to dense non-negative ids. Id 0 is always <eps>.
class SymbolTable {
 public:
  SymbolTable() { Intern(kEpsSymbol); }

  TokenId Intern(std::string_view s) {
    auto it = ids_.find(std::string(s));
    if (it != ids_.end()) return it->second;
    TokenId id = static_cast<TokenId>(names_.size());
    names_.emplace_back(s);
    ids_.emplace(names_.back(), id);
    return id;
  }

  TokenId Find(std::string_view s) const {
    auto it = ids_.find(std::string(s));
    return it == ids_.end() ? kNoSymbol : it->second;
  }

  bool Contains(std::string_view s) const { return Find(s) != kNoSymbol; }

  const std::string& Name(TokenId id) const { return names_.at(id); }

  // Number of symbols including <eps>.
  std::size_t Size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace latfuse

#endif  // LATFUSE_TOKEN_H_
