#include "mlego/corpus/synthetic.hpp"

#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "mlego/common/rng.hpp"

namespace mlego::corpus {

namespace {

struct RawDoc {
  std::int64_t id;
  std::int64_t time;
  double lon;
  double lat;
  std::string category;
  std::vector<std::size_t> words;
};

std::size_t draw(const std::vector<double>& cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::vector<double> dirichlet(std::mt19937_64& eng, std::size_t n, double a) {
  std::gamma_distribution<double> g(a, 1.0);
  std::vector<double> out(n);
  double s = 0;
  for (auto& x : out) s += (x = g(eng) + 1e-300);
  for (auto& x : out) x /= s;
  return out;
}

template <class F>
void generate(const SyntheticConfig& cfg, F&& sink) {
  std::mt19937_64 eng(cfg.seed);
  const std::size_t K = cfg.num_topics;
  std::vector<std::vector<double>> topic_cdf(K);
  for (auto& cdf : topic_cdf) {
    auto p = dirichlet(eng, cfg.vocab_size, cfg.beta);
    std::partial_sum(p.begin(), p.end(), std::back_inserter(cdf));
  }
  std::poisson_distribution<std::size_t> len(static_cast<double>(cfg.mean_doc_length));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t d = 0; d < cfg.num_docs; ++d) {
    RawDoc doc;
    doc.id = static_cast<std::int64_t>(d);
    doc.time = cfg.time_start + static_cast<std::int64_t>(d) * cfg.time_step;
    doc.lon = -180.0 + 360.0 * unit(eng);
    doc.lat = -90.0 + 180.0 * unit(eng);
    doc.category = cfg.categories[static_cast<std::size_t>(unit(eng) * cfg.categories.size()) %
                                  cfg.categories.size()];

    // Mixture: sparse Dirichlet draw tilted towards a topic picked by id
    // position and a second by longitude.
    auto theta = dirichlet(eng, K, cfg.alpha);
    const auto t1 = (d * K) / std::max<std::size_t>(cfg.num_docs, 1);
    const auto t2 = static_cast<std::size_t>((doc.lon + 180.0) / 360.0 * K) % K;
    theta[t1] += 0.5;
    theta[t2] += 0.3;
    std::vector<double> theta_cdf;
    std::partial_sum(theta.begin(), theta.end(), std::back_inserter(theta_cdf));

    const std::size_t n = std::max<std::size_t>(len(eng), 4);
    doc.words.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto z = draw(theta_cdf, unit(eng));
      doc.words.push_back(draw(topic_cdf[z], unit(eng)));
    }
    sink(doc);
  }
}

}  // namespace

std::string synthetic_word(std::size_t index) {
  static constexpr const char* kOnset[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  static constexpr const char* kVowel[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  constexpr std::size_t no = std::size(kOnset), nv = std::size(kVowel);
  std::string w;
  std::size_t x = index;
  // Two syllables minimum keeps clear of the stopword list.
  for (int syll = 0; syll < 2 || x > 0; ++syll) {
    w += kOnset[x % no];
    x /= no;
    w += kVowel[x % nv];
    x /= nv;
  }
  return w;
}

Schema synthetic_schema() {
  return Schema::from_json({
      {"text", "text"},
      {"id", "doc_id"},
      {"attributes",
       {{{"name", "time"}, {"kind", "timestamp"}},
        {{"name", "geo"}, {"kind", "geo"}, {"columns", {"lon", "lat"}}},
        {{"name", "region"}, {"kind", "category"}}}},
  });
}

Dataset generate_dataset(const SyntheticConfig& cfg, const std::string& name) {
  TokenizerConfig tok;
  tok.stopwords = false;
  DatasetBuilder builder(name, synthetic_schema(), tok);
  std::vector<std::string> words(cfg.vocab_size);
  for (std::size_t v = 0; v < cfg.vocab_size; ++v) words[v] = synthetic_word(v);
  generate(cfg, [&](const RawDoc& doc) {
    DatasetBuilder::Row row;
    row.doc_id = doc.id;
    for (auto w : doc.words) row.words.push_back(words[w]);
    row.ordered["time"] = static_cast<double>(doc.time);
    row.ordered["geo.lon"] = doc.lon;
    row.ordered["geo.lat"] = doc.lat;
    row.categories["region"] = doc.category;
    builder.add(std::move(row));
  });
  return builder.build();
}

void write_synthetic_csv(const SyntheticConfig& cfg, std::ostream& out) {
  out << "doc_id,time,lon,lat,region,text\n";
  std::vector<std::string> words(cfg.vocab_size);
  for (std::size_t v = 0; v < cfg.vocab_size; ++v) words[v] = synthetic_word(v);
  out << std::setprecision(10);
  generate(cfg, [&](const RawDoc& doc) {
    out << doc.id << ',' << doc.time << ',' << doc.lon << ',' << doc.lat << ',' << doc.category << ",\"";
    for (std::size_t i = 0; i < doc.words.size(); ++i) out << (i ? " " : "") << words[doc.words[i]];
    out << "\"\n";
  });
}

}  // namespace mlego::corpus
