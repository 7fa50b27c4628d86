#include "mlego/service/requests.hpp"

#include <cstdio>

#include "mlego/common/error.hpp"

namespace mlego::service {

namespace {

double read_alpha(const nlohmann::json& j) {
  if (!j.contains("alpha")) return 0.5;
  if (!j.at("alpha").is_number()) throw InvalidArgument("alpha must be a number");
  const double a = j.at("alpha").get<double>();
  if (!(a >= 0 && a <= 1)) throw InvalidArgument("alpha must lie in [0, 1]");
  return a;
}

planner::QueryOptions read_options(const nlohmann::json& j, const ServiceConfig& d) {
  planner::QueryOptions o;
  o.cfg = j.contains("lda") ? lda::LdaConfig::from_json(j.at("lda"), d.lda) : d.lda;
  o.cfg.validate();
  o.algo = j.contains("algo") ? lda::parse_algo(j.at("algo").get<std::string>()) : d.algo;
  o.method = j.contains("method") ? planner::parse_method(j.at("method").get<std::string>()) : d.method;
  o.cost = d.cost;
  o.decay = d.decay;
  o.materialize = j.value("materialize_result", false);
  return o;
}

std::string read_dataset(const nlohmann::json& j) {
  if (!j.contains("dataset") || !j.at("dataset").is_string()) throw InvalidArgument("'dataset' is required");
  return j.at("dataset").get<std::string>();
}

corpus::Region read_predicate(const nlohmann::json& j) {
  auto r = corpus::Region::from_json(j.contains("predicate") ? j.at("predicate") : nlohmann::json::object());
  r.validate();
  return r;
}

}  // namespace

QueryRequest QueryRequest::from_json(const nlohmann::json& j, const ServiceConfig& defaults) {
  if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
  try {
    QueryRequest q;
    q.dataset = read_dataset(j);
    q.predicate = read_predicate(j);
    q.alpha = read_alpha(j);
    q.options = read_options(j, defaults);
    q.options.alpha = q.alpha;
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(e.what());
  }
}

BatchRequest BatchRequest::from_json(const nlohmann::json& j, const ServiceConfig& defaults) {
  if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
  try {
    BatchRequest b;
    b.dataset = read_dataset(j);
    if (!j.contains("queries") || !j.at("queries").is_array()) throw InvalidArgument("'queries' must be an array");
    for (const auto& q : j.at("queries")) {
      if (!q.is_object()) throw InvalidArgument("each query must be an object");
      b.queries.push_back({read_predicate(q), read_alpha(q)});
    }
    b.options = read_options(j, defaults);
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(e.what());
  }
}

nlohmann::json answer_json(const corpus::Dataset& ds, const planner::QueryResult& r, std::size_t top_words) {
  nlohmann::json topics = nlohmann::json::array();
  const auto tops = lda::top_words(r.model, top_words);
  for (std::size_t k = 0; k < tops.size(); ++k) {
    nlohmann::json words = nlohmann::json::array();
    for (const auto& [v, w] : tops[k])
      words.push_back({{"word", ds.vocab().term(static_cast<corpus::TokenId>(v))}, {"weight", w}});
    topics.push_back({{"topic", k}, {"words", words}});
  }
  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(r.payload.digest()));
  return {{"K", r.model.K()},
          {"V", r.model.V()},
          {"topics", topics},
          {"plan",
           {{"models", r.reused},
            {"x", r.plan.x},
            {"sc", r.plan.sc},
            {"l_p", r.plan.l_p},
            {"c_norm", r.plan.c_norm},
            {"N_covered", r.plan.N_covered},
            {"N_uncovered", r.plan.N_uncovered}}},
          {"trained_documents", r.uncovered.docs.size()},
          {"materialized", r.materialized ? nlohmann::json(*r.materialized) : nlohmann::json(nullptr)},
          {"payload_digest", digest},
          {"timings_ms",
           {{"search", r.search_seconds * 1e3}, {"train", r.train_seconds * 1e3}, {"merge", r.merge_seconds * 1e3}}}};
}

}  // namespace mlego::service
