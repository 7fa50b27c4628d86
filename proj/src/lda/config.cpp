#include "mlego/lda/config.hpp"

#include <cmath>
#include <string>

#include "mlego/common/error.hpp"

namespace mlego::lda {

std::string_view to_string(Algo a) noexcept { return a == Algo::Vb ? "vb" : "cgs"; }

Algo parse_algo(std::string_view s) {
  if (s == "vb") return Algo::Vb;
  if (s == "cgs") return Algo::Cgs;
  throw InvalidArgument("unknown algorithm '" + std::string(s) + "' (expected vb or cgs)");
}

void LdaConfig::validate() const {
  if (K < 1) throw InvalidArgument("K must be at least 1");
  if (!(alpha > 0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be positive");
  if (!(eta > 0) || !std::isfinite(eta)) throw InvalidArgument("eta must be positive");
  if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (!(vb_tol >= 0)) throw InvalidArgument("vb_tol must be non-negative");
}

LdaConfig LdaConfig::from_json(const nlohmann::json& j) { return from_json(j, LdaConfig{}); }

LdaConfig LdaConfig::from_json(const nlohmann::json& j, LdaConfig c) {
  if (j.is_null()) return c;
  if (!j.is_object()) throw InvalidArgument("lda config must be an object");
  c.K = j.value("K", c.K);
  c.alpha = j.value("alpha", c.alpha);
  c.eta = j.value("eta", c.eta);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.seed = j.value("seed", c.seed);
  c.vb_tol = j.value("vb_tol", c.vb_tol);
  if (j.contains("cgs_init")) {
    const auto s = j["cgs_init"].get<std::string>();
    if (s == "token") c.cgs_init = CgsInit::Token;
    else if (s == "word") c.cgs_init = CgsInit::Word;
    else throw InvalidArgument("cgs_init must be token or word");
  }
  c.validate();
  return c;
}

nlohmann::json LdaConfig::to_json() const {
  return {{"K", K},       {"alpha", alpha},   {"eta", eta},
          {"max_iters", max_iters}, {"seed", seed}, {"vb_tol", vb_tol},
          {"cgs_init", cgs_init == CgsInit::Token ? "token" : "word"}};
}

}  // namespace mlego::lda
