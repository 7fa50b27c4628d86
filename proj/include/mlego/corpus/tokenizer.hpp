#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mlego::corpus {

struct TokenizerConfig {
  std::size_t min_df = 1;      // drop terms appearing in fewer documents
  bool stopwords = true;       // apply the built-in English stopword list
  std::size_t min_length = 1;  // drop shorter tokens

  static TokenizerConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// ASCII-fold, lowercase and split on anything that is not [a-z0-9].
/// Stopwords and min_df are vocabulary-level and applied by the caller.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg);

bool is_stopword(std::string_view word) noexcept;

}  // namespace mlego::corpus
