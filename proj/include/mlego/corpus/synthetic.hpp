#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "mlego/corpus/dataset.hpp"

namespace mlego::corpus {

/// Documents drawn from the LDA generative process, tagged with an id, a
/// timestamp, a geo point and a category. Topic mixtures drift with the
/// document's position so different regions have different topic mass.
struct SyntheticConfig {
  std::size_t num_docs = 1000;
  std::size_t num_topics = 10;
  std::size_t vocab_size = 500;
  std::size_t mean_doc_length = 60;
  double alpha = 0.1;
  double beta = 0.05;
  std::vector<std::string> categories{"north", "south", "east", "west"};
  std::int64_t time_start = 1262304000;  // 2010-01-01
  std::int64_t time_step = 3600;
  std::uint64_t seed = 1;
};

// Pronounceable filler words so the sample data reads like text.
std::string synthetic_word(std::size_t index);

Schema synthetic_schema();

Dataset generate_dataset(const SyntheticConfig& cfg, const std::string& name = "synthetic");

// Same documents as generate_dataset, written as CSV matching synthetic_schema().
void write_synthetic_csv(const SyntheticConfig& cfg, std::ostream& out);

}  // namespace mlego::corpus
