#include "mlego/service/config.hpp"

#include <cstdlib>
#include <fstream>

#include "mlego/common/error.hpp"

namespace mlego::service {

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j) { return from_json(j, ServiceConfig{}); }

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j, ServiceConfig c) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  try {
    if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
    if (j.contains("host")) c.host = j.at("host").get<std::string>();
    if (j.contains("port")) c.port = j.at("port").get<int>();
    if (j.contains("max_parallel_jobs")) c.max_parallel_jobs = j.at("max_parallel_jobs").get<std::size_t>();
    if (j.contains("lda")) c.lda = lda::LdaConfig::from_json(j.at("lda"), c.lda);
    if (j.contains("algo")) c.algo = lda::parse_algo(j.at("algo").get<std::string>());
    if (j.contains("cost")) c.cost = planner::CostModel::from_json(j.at("cost"), c.cost);
    if (j.contains("method")) c.method = planner::parse_method(j.at("method").get<std::string>());
    if (j.contains("decay")) c.decay = j.at("decay").get<double>();
    if (j.contains("top_words")) c.top_words = j.at("top_words").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad config: ") + e.what());
  }
  if (c.port < 0 || c.port > 65535) throw InvalidArgument("port out of range");
  if (c.max_parallel_jobs == 0) throw InvalidArgument("max_parallel_jobs must be at least 1");
  if (!(c.decay > 0 && c.decay <= 1)) throw InvalidArgument("decay must lie in (0, 1]");
  c.lda.validate();
  c.cost.validate();
  return c;
}

nlohmann::json ServiceConfig::to_json() const {
  return {{"data_dir", data_dir.string()},
          {"host", host},
          {"port", port},
          {"max_parallel_jobs", max_parallel_jobs},
          {"lda", lda.to_json()},
          {"algo", lda::to_string(algo)},
          {"cost", cost.to_json()},
          {"method", planner::to_string(method)},
          {"decay", decay},
          {"top_words", top_words}};
}

ServiceConfig ServiceConfig::load(const std::optional<std::filesystem::path>& path) {
  std::optional<std::filesystem::path> p = path;
  if (!p) {
    if (const char* env = std::getenv("MLEGO_CONFIG"); env && *env) p = env;
    else if (std::filesystem::exists("mlego.json")) p = "mlego.json";
  }
  if (!p) return {};
  std::ifstream in(*p);
  if (!in) throw NotFound("cannot open config " + p->string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config " + p->string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace mlego::service
