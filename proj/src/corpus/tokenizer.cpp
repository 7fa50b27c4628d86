#include "mlego/corpus/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

namespace mlego::corpus {

TokenizerConfig TokenizerConfig::from_json(const nlohmann::json& j) {
  TokenizerConfig c;
  c.min_df = j.value("min_df", c.min_df);
  c.stopwords = j.value("stopwords", c.stopwords);
  c.min_length = j.value("min_length", c.min_length);
  return c;
}

nlohmann::json TokenizerConfig::to_json() const {
  return {{"min_df", min_df}, {"stopwords", stopwords}, {"min_length", min_length}};
}

namespace {

// Latin-1 supplement (U+00C0..U+00FF) folded to ASCII; 0 means separator.
constexpr std::array<char, 64> kLatin1Fold = {
    'a', 'a', 'a', 'a', 'a', 'a', 'a', 'c', 'e', 'e', 'e', 'e', 'i', 'i', 'i', 'i',
    'd', 'n', 'o', 'o', 'o', 'o', 'o', 0,   'o', 'u', 'u', 'u', 'u', 'y', 0,   's',
    'a', 'a', 'a', 'a', 'a', 'a', 'a', 'c', 'e', 'e', 'e', 'e', 'i', 'i', 'i', 'i',
    'd', 'n', 'o', 'o', 'o', 'o', 'o', 0,   'o', 'u', 'u', 'u', 'u', 'y', 0,   'y',
};

const std::unordered_set<std::string_view>& stopword_set() {
  static const std::unordered_set<std::string_view> words = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
      "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
      "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
      "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
      "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself",
      "just", "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on",
      "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same",
      "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
      "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
      "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
      "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
      "yourselves", "s", "t", "d", "ll", "m", "o", "re", "ve", "y", "don", "didn", "doesn",
      "isn", "wasn", "weren", "won", "br"};
  return words;
}

}  // namespace

bool is_stopword(std::string_view word) noexcept { return stopword_set().count(word) > 0; }

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= std::max<std::size_t>(cfg.min_length, 1) &&
        !(cfg.stopwords && is_stopword(cur)))
      out.push_back(cur);
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    char folded = 0;
    if (c < 0x80) {
      if (c >= 'A' && c <= 'Z')
        folded = static_cast<char>(c - 'A' + 'a');
      else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))
        folded = static_cast<char>(c);
    } else if ((c == 0xC3) && i + 1 < text.size()) {
      const auto c2 = static_cast<unsigned char>(text[i + 1]);
      if (c2 >= 0x80 && c2 <= 0xBF) folded = kLatin1Fold[c2 - 0x80];
      ++i;
    } else {
      // Skip the rest of any other multi-byte sequence.
      while (i + 1 < text.size() && (static_cast<unsigned char>(text[i + 1]) & 0xC0) == 0x80) ++i;
    }
    if (folded != 0)
      cur.push_back(folded);
    else
      flush();
  }
  flush();
  return out;
}

}  // namespace mlego::corpus
