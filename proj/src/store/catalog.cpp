#include "mlego/store/catalog.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "mlego/common/error.hpp"
#include "mlego/common/hash.hpp"
#include "mlego/store/payload_io.hpp"

namespace mlego::store {

namespace fs = std::filesystem;

namespace {

std::string dir_name(ModelId id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "m%06llu", static_cast<unsigned long long>(id));
  return buf;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

nlohmann::json ModelRecord::to_json() const {
  return {
      {"model_id", id},
      {"dataset", dataset},
      {"region", region.to_json()},
      {"N", num_docs},
      {"word_count", word_count},
      {"algo", lda::to_string(algo)},
      {"cfg", cfg.to_json()},
      {"vocab_hash", to_hex(vocab_hash)},
      {"K", K},
      {"V", V},
      {"merges", merges},
      {"train_seconds", train_seconds},
      {"created_at", created_at},
      {"payload_digest", to_hex(payload_digest)},
  };
}

ModelRecord ModelRecord::from_json(const nlohmann::json& j) {
  ModelRecord r;
  r.id = j.at("model_id").get<ModelId>();
  r.dataset = j.value("dataset", std::string());
  r.region = corpus::Region::from_json(j.at("region"));
  r.num_docs = j.at("N").get<std::size_t>();
  r.word_count = j.at("word_count").get<std::size_t>();
  r.algo = lda::parse_algo(j.at("algo").get<std::string>());
  r.cfg = lda::LdaConfig::from_json(j.at("cfg"));
  r.vocab_hash = from_hex(j.at("vocab_hash").get<std::string>());
  r.K = j.at("K").get<std::size_t>();
  r.V = j.at("V").get<std::size_t>();
  r.merges = j.value("merges", std::size_t{0});
  r.train_seconds = j.value("train_seconds", 0.0);
  r.created_at = j.value("created_at", std::string());
  r.payload_digest = from_hex(j.value("payload_digest", std::string("0000000000000000")));
  return r;
}

bool CandidateFilter::accepts(const ModelRecord& r) const noexcept {
  return r.algo == algo && r.K == K && r.cfg.alpha == alpha && r.cfg.eta == eta && r.vocab_hash == vocab_hash;
}

const ModelRecord* CatalogSnapshot::find(ModelId id) const {
  auto it = std::lower_bound(records_.begin(), records_.end(), id,
                             [](const ModelRecord& r, ModelId v) { return r.id < v; });
  return it != records_.end() && it->id == id ? &*it : nullptr;
}

std::vector<const ModelRecord*> CatalogSnapshot::overlapping(const corpus::Region& query) const {
  std::vector<const ModelRecord*> out;
  for (auto i : index_.overlapping(query))
    if (corpus::intersects(records_[i].region, query)) out.push_back(&records_[i]);
  return out;
}

std::vector<const ModelRecord*> CatalogSnapshot::overlapping_scan(const corpus::Region& query) const {
  std::vector<const ModelRecord*> out;
  for (const auto& r : records_)
    if (corpus::intersects(r.region, query)) out.push_back(&r);
  return out;
}

CatalogSnapshot::Split CatalogSnapshot::candidates(const corpus::Region& query, const CandidateFilter& filter) const {
  Split s;
  for (const auto* r : overlapping(query)) {
    if (!filter.accepts(*r)) continue;
    (corpus::contains(query, r->region) ? s.contained : s.partial).push_back(r);
  }
  return s;
}

lda::Payload CatalogSnapshot::payload(ModelId id) const {
  const auto* rec = find(id);
  if (!rec) throw NotFound("no model " + std::to_string(id));
  if (memory_) {
    auto it = memory_->find(id);
    if (it != memory_->end()) return it->second;
  }
  lda::Payload p;
  p.algo = rec->algo;
  p.params = read_payload(root_ / dir_name(id) / "payload.bin");
  p.num_docs = rec->num_docs;
  p.word_count = rec->word_count;
  p.vocab_hash = rec->vocab_hash;
  if (p.K() != rec->K || p.V() != rec->V) throw CorruptData("payload shape disagrees with model.json");
  return p;
}

Catalog::Catalog(fs::path root) : root_(std::move(root)) {
  std::vector<ModelRecord> records;
  if (!root_.empty()) {
    fs::create_directories(root_);
    for (const auto& entry : fs::directory_iterator(root_)) {
      const auto name = entry.path().filename().string();
      if (name.rfind(".tmp-", 0) == 0) {
        // Leftover from an interrupted write; never published.
        fs::remove_all(entry.path());
        continue;
      }
      if (!entry.is_directory() || !fs::exists(entry.path() / "model.json")) continue;
      std::ifstream in(entry.path() / "model.json");
      records.push_back(ModelRecord::from_json(nlohmann::json::parse(in)));
    }
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    if (!records.empty()) next_id_ = records.back().id + 1;
  }
  publish(std::move(records), root_.empty() ? std::make_shared<const std::map<ModelId, lda::Payload>>() : nullptr);
}

ModelId Catalog::materialize(const lda::Payload& payload, const corpus::Region& region, const MaterializeMeta& meta) {
  region.validate();
  if (payload.params.empty()) throw InvalidArgument("empty payload");
  std::lock_guard lock(write_mu_);
  ModelRecord rec;
  rec.id = next_id_;
  rec.dataset = meta.dataset;
  rec.region = region;
  rec.num_docs = payload.num_docs;
  rec.word_count = payload.word_count;
  rec.algo = payload.algo;
  rec.cfg = meta.cfg;
  rec.vocab_hash = payload.vocab_hash;
  rec.K = payload.K();
  rec.V = payload.V();
  rec.merges = meta.merges;
  rec.train_seconds = meta.train_seconds;
  rec.created_at = utc_now();
  rec.payload_digest = payload.digest();

  auto current = snapshot();
  std::shared_ptr<const std::map<ModelId, lda::Payload>> memory = current->memory_;
  if (root_.empty()) {
    auto next = std::make_shared<std::map<ModelId, lda::Payload>>(*current->memory_);
    next->emplace(rec.id, payload);
    memory = std::move(next);
  } else {
    const fs::path tmp = root_ / (".tmp-" + dir_name(rec.id));
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    write_payload(tmp / "payload.bin", payload.params);
    {
      std::ofstream out(tmp / "model.json");
      out << rec.to_json().dump(2) << "\n";
      if (!out) throw Error("failed writing model manifest");
    }
    fs::rename(tmp, root_ / dir_name(rec.id));
  }
  ++next_id_;
  auto records = current->records_;
  records.push_back(std::move(rec));
  const ModelId id = records.back().id;
  publish(std::move(records), std::move(memory));
  return id;
}

void Catalog::publish(std::vector<ModelRecord> records, std::shared_ptr<const std::map<ModelId, lda::Payload>> memory) {
  auto snap = std::make_shared<CatalogSnapshot>();
  std::vector<corpus::Region> regions;
  regions.reserve(records.size());
  for (const auto& r : records) regions.push_back(r.region);
  snap->index_ = RegionIndex(regions);
  snap->records_ = std::move(records);
  snap->root_ = root_;
  snap->memory_ = std::move(memory);
  std::lock_guard lock(snap_mu_);
  snap_ = std::move(snap);
}

std::shared_ptr<const CatalogSnapshot> Catalog::snapshot() const {
  std::lock_guard lock(snap_mu_);
  return snap_;
}

}  // namespace mlego::store
