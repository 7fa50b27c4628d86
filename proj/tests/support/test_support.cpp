#include "test_support.hpp"

#include <atomic>
#include <random>

#include "mlego/common/hash.hpp"

namespace mlego::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

corpus::Dataset id_dataset(std::size_t n, std::size_t vocab) {
  auto schema = corpus::Schema::from_json({
      {"text", "text"},
      {"attributes", {{{"name", "time"}, {"kind", "int"}}, {{"name", "kind"}, {"kind", "category"}}}},
  });
  corpus::TokenizerConfig tok;
  tok.stopwords = false;
  corpus::DatasetBuilder b("ids", schema, tok);
  static const char* kinds[] = {"a", "b", "c"};
  for (std::size_t i = 0; i < n; ++i) {
    corpus::DatasetBuilder::Row row;
    row.doc_id = static_cast<std::int64_t>(i);
    row.words = {"w" + std::to_string(i % vocab), "w" + std::to_string((i * 7 + 3) % vocab)};
    row.ordered["time"] = static_cast<double>(i);
    row.categories["kind"] = kinds[i % 3];
    b.add(std::move(row));
  }
  return b.build();
}

corpus::OwnedCorpus owned(std::vector<std::vector<corpus::TokenId>> docs, std::size_t V) {
  corpus::OwnedCorpus c;
  c.docs = std::move(docs);
  c.vocab_size = V;
  Fnv1a h;
  h.update("owned:" + std::to_string(V));
  c.vocab_hash = h.digest();
  return c;
}

}  // namespace mlego::testing
