#include "mlego/corpus/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_set>

#include "mlego/common/error.hpp"
#include "mlego/common/hash.hpp"

namespace mlego::corpus {

namespace fs = std::filesystem;

Vocabulary::Vocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
  Fnv1a h;
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!index_.emplace(terms_[i], static_cast<TokenId>(i)).second)
      throw InvalidArgument("duplicate vocabulary term '" + terms_[i] + "'");
    h.update(terms_[i]);
    h.update("\n");
  }
  hash_ = h.digest();
}

TokenId Vocabulary::find(std::string_view term) const {
  auto it = index_.find(std::string(term));
  return it == index_.end() ? static_cast<TokenId>(terms_.size()) : it->second;
}

std::size_t CorpusSlice::total_tokens() const noexcept {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.size();
  return n;
}

CorpusSlice OwnedCorpus::slice() const {
  CorpusSlice s{{}, vocab_size, vocab_hash};
  s.docs.reserve(docs.size());
  for (const auto& d : docs) s.docs.emplace_back(d);
  return s;
}

CorpusSlice OwnedCorpus::slice(std::span<const std::size_t> which) const {
  CorpusSlice s{{}, vocab_size, vocab_hash};
  s.docs.reserve(which.size());
  for (std::size_t i : which) s.docs.emplace_back(docs.at(i));
  return s;
}

std::span<const TokenId> Dataset::tokens(DocIndex doc) const {
  if (doc >= num_docs()) throw InvalidArgument("document index out of range");
  return {tokens_.data() + offsets_[doc], static_cast<std::size_t>(offsets_[doc + 1] - offsets_[doc])};
}

double Dataset::ordered_value(std::string_view dim, DocIndex doc) const {
  if (dim == "id") return static_cast<double>(doc_ids_.at(doc));
  auto it = ordered_.find(dim);
  if (it == ordered_.end()) throw InvalidArgument("unknown ordered attribute '" + std::string(dim) + "'");
  return it->second.at(doc);
}

const std::string& Dataset::category_value(std::string_view attr, DocIndex doc) const {
  auto it = categorical_.find(attr);
  if (it == categorical_.end())
    throw InvalidArgument("unknown categorical attribute '" + std::string(attr) + "'");
  return it->second.dictionary.at(static_cast<std::size_t>(it->second.codes.at(doc)));
}

void Dataset::check_region(const Region& region) const {
  for (const auto& [name, _] : region.ranges)
    if (name != "id" && ordered_.find(name) == ordered_.end())
      throw InvalidArgument("unknown ordered attribute '" + name + "'");
  for (const auto& [name, _] : region.categories)
    if (categorical_.find(name) == categorical_.end())
      throw InvalidArgument("unknown categorical attribute '" + name + "'");
}

bool Dataset::matches(const Region& region, DocIndex doc) const {
  for (const auto& [name, iv] : region.ranges)
    if (!iv.contains(ordered_value(name, doc))) return false;
  for (const auto& [name, set] : region.categories)
    if (set.count(category_value(name, doc)) == 0) return false;
  return true;
}

std::pair<const DocIndex*, const DocIndex*> Dataset::candidate_range(
    const Region& region, std::vector<DocIndex>& scratch) const {
  const DocIndex* best_lo = nullptr;
  const DocIndex* best_hi = nullptr;
  std::size_t best = num_docs() + 1;

  for (const auto& [name, iv] : region.ranges) {
    const auto& order = sorted_.find(name)->second;
    auto value = [&](DocIndex d) { return ordered_value(name, d); };
    auto lo = std::partition_point(order.begin(), order.end(),
                                   [&](DocIndex d) { return value(d) < iv.lo; });
    auto hi = std::partition_point(lo, order.end(), [&](DocIndex d) { return value(d) < iv.hi; });
    const auto n = static_cast<std::size_t>(hi - lo);
    if (n < best) {
      best = n;
      best_lo = order.data() + (lo - order.begin());
      best_hi = order.data() + (hi - order.begin());
    }
  }
  if (best_lo == nullptr && !region.categories.empty()) {
    const auto& [name, set] = *region.categories.begin();
    const auto& col = categorical_.find(name)->second;
    for (const auto& v : set) {
      auto it = col.lookup.find(v);
      if (it == col.lookup.end()) continue;
      const auto& bucket = col.buckets[static_cast<std::size_t>(it->second)];
      scratch.insert(scratch.end(), bucket.begin(), bucket.end());
    }
    return {scratch.data(), scratch.data() + scratch.size()};
  }
  if (best_lo == nullptr) {
    scratch.resize(num_docs());
    std::iota(scratch.begin(), scratch.end(), DocIndex{0});
    return {scratch.data(), scratch.data() + scratch.size()};
  }
  return {best_lo, best_hi};
}

std::size_t Dataset::count_docs(const Region& region) const {
  check_region(region);
  if (region.is_unconstrained()) return num_docs();
  std::vector<DocIndex> scratch;
  auto [lo, hi] = candidate_range(region, scratch);
  std::size_t n = 0;
  for (auto p = lo; p != hi; ++p) n += matches(region, *p) ? 1 : 0;
  return n;
}

std::vector<DocIndex> Dataset::select_docs(const Region& region) const {
  check_region(region);
  std::vector<DocIndex> scratch;
  auto [lo, hi] = candidate_range(region, scratch);
  std::vector<DocIndex> out;
  for (auto p = lo; p != hi; ++p)
    if (matches(region, *p)) out.push_back(*p);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<DocIndex> Dataset::select_docs(std::span<const Region> union_of) const {
  std::vector<DocIndex> out;
  for (const auto& r : union_of) {
    auto part = select_docs(r);
    out.insert(out.end(), part.begin(), part.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CorpusSlice Dataset::slice(std::span<const DocIndex> docs) const {
  CorpusSlice s{{}, vocab_.size(), vocab_.hash()};
  s.docs.reserve(docs.size());
  for (DocIndex d : docs) s.docs.push_back(tokens(d));
  return s;
}

CorpusSlice Dataset::slice_all() const {
  std::vector<DocIndex> all(num_docs());
  std::iota(all.begin(), all.end(), DocIndex{0});
  return slice(all);
}

CategoryDomains Dataset::category_domains() const {
  CategoryDomains out;
  for (const auto& [name, col] : categorical_)
    out[name] = CategorySet(col.dictionary.begin(), col.dictionary.end());
  return out;
}

std::map<std::string, Interval> Dataset::ordered_extents() const {
  std::map<std::string, Interval> out;
  if (num_docs() == 0) return out;
  for (const auto& [name, order] : sorted_) {
    out[name] = Interval{ordered_value(name, order.front()), ordered_value(name, order.back())};
  }
  return out;
}

void Dataset::build_index() {
  sorted_.clear();
  auto sort_dim = [&](const std::string& dim) {
    std::vector<DocIndex> order(num_docs());
    std::iota(order.begin(), order.end(), DocIndex{0});
    std::stable_sort(order.begin(), order.end(), [&](DocIndex a, DocIndex b) {
      return ordered_value(dim, a) < ordered_value(dim, b);
    });
    sorted_[dim] = std::move(order);
  };
  sort_dim("id");
  for (const auto& [dim, _] : ordered_) sort_dim(dim);
  for (auto& [_, col] : categorical_) {
    col.lookup.clear();
    for (std::size_t i = 0; i < col.dictionary.size(); ++i)
      col.lookup[col.dictionary[i]] = static_cast<std::int32_t>(i);
    col.buckets.assign(col.dictionary.size(), {});
    for (std::size_t d = 0; d < col.codes.size(); ++d)
      col.buckets[static_cast<std::size_t>(col.codes[d])].push_back(static_cast<DocIndex>(d));
  }
}

nlohmann::json Dataset::manifest() const {
  nlohmann::json extents = nlohmann::json::object();
  for (const auto& [dim, iv] : ordered_extents()) extents[dim] = {{"min", iv.lo}, {"max", iv.hi}};
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [name, col] : categorical_) {
    auto values = col.dictionary;
    std::sort(values.begin(), values.end());
    cats[name] = values;
  }
  return {
      {"format", "mlego-dataset-1"},
      {"name", name_},
      {"num_docs", num_docs()},
      {"num_tokens", num_tokens()},
      {"vocab_size", vocab_.size()},
      {"vocab_hash", to_hex(vocab_.hash())},
      {"skipped_rows", skipped_rows_},
      {"schema", schema_.to_json()},
      {"tokenizer", tokenizer_.to_json()},
      {"ordered_dimensions", schema_.ordered_dimensions()},
      {"extents", extents},
      {"categories", cats},
  };
}

namespace {

constexpr char kTokenMagic[8] = {'M', 'L', 'G', 'T', 'O', 'K', '0', '1'};

template <class T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void write_vec(std::ofstream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw CorruptData("truncated token store");
  return v;
}

template <class T>
void read_vec(std::ifstream& in, std::vector<T>& v, std::size_t n) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw CorruptData("truncated token store");
}

}  // namespace

void Dataset::save(const fs::path& dir) const {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "manifest.json");
    out << manifest().dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "vocab.txt");
    for (const auto& t : vocab_.terms()) out << t << "\n";
  }
  {
    std::ofstream out(dir / "tokens.bin", std::ios::binary);
    out.write(kTokenMagic, sizeof kTokenMagic);
    write_pod<std::uint64_t>(out, num_docs());
    write_pod<std::uint64_t>(out, tokens_.size());
    write_vec(out, offsets_);
    write_vec(out, tokens_);
    write_vec(out, doc_ids_);
    if (!out) throw Error("failed writing " + (dir / "tokens.bin").string());
  }
  {
    nlohmann::json attrs{{"ordered", nlohmann::json::object()}, {"categorical", nlohmann::json::object()}};
    for (const auto& [dim, values] : ordered_) attrs["ordered"][dim] = values;
    for (const auto& [name, col] : categorical_)
      attrs["categorical"][name] = {{"dictionary", col.dictionary}, {"codes", col.codes}};
    std::ofstream out(dir / "attributes.json");
    out << attrs.dump() << "\n";
  }
}

Dataset Dataset::load(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) throw NotFound("no dataset at " + dir.string());
  Dataset ds;
  nlohmann::json manifest;
  {
    std::ifstream in(dir / "manifest.json");
    manifest = nlohmann::json::parse(in);
  }
  ds.name_ = manifest.at("name").get<std::string>();
  ds.schema_ = Schema::from_json(manifest.at("schema"));
  ds.tokenizer_ = TokenizerConfig::from_json(manifest.at("tokenizer"));
  ds.skipped_rows_ = manifest.value("skipped_rows", std::size_t{0});
  {
    std::ifstream in(dir / "vocab.txt");
    std::vector<std::string> terms;
    for (std::string line; std::getline(in, line);) terms.push_back(line);
    ds.vocab_ = Vocabulary(std::move(terms));
  }
  if (to_hex(ds.vocab_.hash()) != manifest.at("vocab_hash").get<std::string>())
    throw CorruptData("vocab.txt does not match manifest vocab_hash");
  {
    std::ifstream in(dir / "tokens.bin", std::ios::binary);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kTokenMagic, sizeof magic) != 0)
      throw CorruptData("bad token store magic");
    const auto docs = read_pod<std::uint64_t>(in);
    const auto toks = read_pod<std::uint64_t>(in);
    read_vec(in, ds.offsets_, docs + 1);
    read_vec(in, ds.tokens_, toks);
    read_vec(in, ds.doc_ids_, docs);
  }
  {
    std::ifstream in(dir / "attributes.json");
    const auto attrs = nlohmann::json::parse(in);
    for (const auto& [dim, values] : attrs.at("ordered").items())
      ds.ordered_[dim] = values.get<std::vector<double>>();
    for (const auto& [name, col] : attrs.at("categorical").items()) {
      CategoricalColumn c;
      c.dictionary = col.at("dictionary").get<std::vector<std::string>>();
      c.codes = col.at("codes").get<std::vector<std::int32_t>>();
      ds.categorical_[name] = std::move(c);
    }
  }
  ds.build_index();
  return ds;
}

DatasetBuilder::DatasetBuilder(std::string name, Schema schema, TokenizerConfig tokenizer)
    : name_(std::move(name)), schema_(std::move(schema)), tokenizer_(tokenizer) {}

void DatasetBuilder::add(Row row) { rows_.push_back(std::move(row)); }

Dataset DatasetBuilder::build() {
  // Document frequency over the whole dataset.
  std::map<std::string, std::size_t> df;
  for (const auto& row : rows_) {
    std::unordered_set<std::string_view> seen(row.words.begin(), row.words.end());
    for (auto w : seen) ++df[std::string(w)];
  }
  std::vector<std::string> terms;
  for (const auto& [w, n] : df)
    if (n >= std::max<std::size_t>(tokenizer_.min_df, 1)) terms.push_back(w);
  if (terms.empty()) throw Error("ingest produced an empty vocabulary");

  Dataset ds;
  ds.name_ = name_;
  ds.schema_ = schema_;
  ds.tokenizer_ = tokenizer_;
  ds.vocab_ = Vocabulary(std::move(terms));
  ds.skipped_rows_ = skipped_;

  std::set<std::int64_t> ids;
  for (const auto& dim : schema_.ordered_dimensions())
    if (dim != "id") ds.ordered_[dim].reserve(rows_.size());
  for (const auto& name : schema_.categorical_attributes()) ds.categorical_[name];

  for (const auto& row : rows_) {
    if (!ids.insert(row.doc_id).second)
      throw InvalidArgument("duplicate doc_id " + std::to_string(row.doc_id));
    ds.doc_ids_.push_back(row.doc_id);
    for (const auto& w : row.words) {
      const TokenId id = ds.vocab_.find(w);
      if (id < ds.vocab_.size()) ds.tokens_.push_back(id);
    }
    ds.offsets_.push_back(ds.tokens_.size());
    for (auto& [dim, column] : ds.ordered_) column.push_back(row.ordered.at(dim));
    for (auto& [name, col] : ds.categorical_) {
      const auto& v = row.categories.at(name);
      auto [it, inserted] = col.lookup.emplace(v, static_cast<std::int32_t>(col.dictionary.size()));
      if (inserted) col.dictionary.push_back(v);
      col.codes.push_back(it->second);
    }
  }
  ds.build_index();
  rows_.clear();
  return ds;
}

}  // namespace mlego::corpus
