#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace crg {

using Tokens = std::vector<std::string>;

/// Identifies the tokenization rules; bump when they change.
inline constexpr std::string_view kTokenizerVersion = "crg-tok-1";

struct TokenizedReport {
  std::string sample_id;
  Tokens tokens;

  bool operator==(const TokenizedReport&) const = default;
};

/// Lowercases ASCII, splits on whitespace and punctuation. A '.' between two
/// digits stays inside the token ("5.5"). Bytes >= 0x80 are word characters.
Tokens tokenize(std::string_view text);

TokenizedReport tokenize(std::string sample_id, std::string_view text);

/// Porter (1980) suffix-stripping stemmer for lowercase ASCII words. Words of
/// two letters or fewer, and words with non-letters, are returned unchanged.
std::string porter_stem(std::string_view word);

/// Splits on '.', ';' and newlines. A '.' between two digits does not split.
std::vector<std::string> split_sentences(std::string_view text);

}  // namespace crg
