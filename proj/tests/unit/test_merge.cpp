#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <random>

#include "mlego/common/error.hpp"
#include "mlego/common/timer.hpp"
#include "mlego/merge/merge.hpp"

using namespace mlego;
using namespace mlego::merge;
using lda::Algo;

namespace {

Payload random_payload(Algo algo, std::size_t K, std::size_t V, std::size_t N, unsigned seed, double eta) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  Payload p;
  p.algo = algo;
  p.params = Matrix(K, V);
  for (auto& x : p.params.values()) x = algo == Algo::Vb ? eta + u(g) : std::floor(u(g) * 3);
  p.num_docs = N;
  double tokens = 0;
  for (double x : p.params.values()) tokens += algo == Algo::Vb ? x - eta : x;
  p.word_count = static_cast<std::size_t>(tokens);
  p.vocab_hash = 77;
  return p;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("merge") {

TEST_CASE("vb merge equals the summation oracle") {
  const double eta = 0.01;
  std::vector<Payload> ps{random_payload(Algo::Vb, 3, 7, 100, 1, eta), random_payload(Algo::Vb, 3, 7, 40, 2, eta),
                          random_payload(Algo::Vb, 3, 7, 250, 3, eta)};
  auto out = merge_vb(ps, eta);
  CHECK(out.num_docs == 390);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t v = 0; v < 7; ++v) {
      double expect = eta;
      for (const auto& p : ps) expect += (double(p.num_docs) / 250.0) * (p.params(k, v) - eta);
      CHECK(std::abs(out.params(k, v) - expect) <= 1e-12);
    }
}

TEST_CASE("vb merge identities") {
  const double eta = 0.05;
  auto one = random_payload(Algo::Vb, 2, 5, 10, 4, eta);
  std::vector<Payload> single{one};
  CHECK(bit_equal(merge_vb(single, eta).params, one.params));

  Payload flat = one;
  flat.params = Matrix(2, 5, eta);
  std::vector<Payload> flats{flat, flat, flat};
  const auto merged = merge_vb(flats, eta);
  for (double x : merged.params.values()) CHECK(x == eta);
}

TEST_CASE("two equal-size vb models add their evidence") {
  const double eta = 0.01;
  auto a = random_payload(Algo::Vb, 2, 2, 50, 5, eta), b = random_payload(Algo::Vb, 2, 2, 50, 6, eta);
  std::vector<Payload> ps{a, b};
  auto out = merge_vb(ps, eta);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(std::abs(out.params.data()[i] - (eta + (a.params.data()[i] - eta) + (b.params.data()[i] - eta))) <= 1e-12);
}

TEST_CASE("merges are independent of input order") {
  const double eta = 0.01;
  std::vector<Payload> vb, cgs;
  for (unsigned i = 0; i < 5; ++i) {
    vb.push_back(random_payload(Algo::Vb, 4, 9, 10 + 7 * i, 10 + i, eta));
    cgs.push_back(random_payload(Algo::Cgs, 4, 9, 10 + 7 * (i % 3), 20 + i, eta));
  }
  const auto vb_ref = merge_vb(vb, eta).params;
  const auto cgs_ref = merge_cgs(cgs, eta, 1.0).payload.params;
  const auto cgs_decay_ref = merge_cgs(cgs, eta, 0.7).payload.params;
  std::mt19937 g(1);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(vb.begin(), vb.end(), g);
    std::shuffle(cgs.begin(), cgs.end(), g);
    CHECK(bit_equal(merge_vb(vb, eta).params, vb_ref));
    CHECK(bit_equal(merge_cgs(cgs, eta, 1.0).payload.params, cgs_ref));
    CHECK(bit_equal(merge_cgs(cgs, eta, 0.7).payload.params, cgs_decay_ref));
  }
}

TEST_CASE("cgs merge with decay on a 2x2 example") {
  Payload small, large;
  small.algo = large.algo = Algo::Cgs;
  small.params = Matrix(2, 2);
  large.params = Matrix(2, 2);
  const double s[4] = {4, 2, 0, 6}, l[4] = {1, 3, 5, 7};
  std::copy(s, s + 4, small.params.data());
  std::copy(l, l + 4, large.params.data());
  small.num_docs = 10;
  large.num_docs = 30;
  // Listed largest-first; the smaller model is t=1 and gets decay^(2-1).
  std::vector<Payload> ps{large, small};
  auto r = merge_cgs(ps, 0.1, 0.5);
  CHECK(r.payload.params(0, 0) == 0.5 * 4 + 1);
  CHECK(r.payload.params(0, 1) == 0.5 * 2 + 3);
  CHECK(r.payload.params(1, 0) == 0.5 * 0 + 5);
  CHECK(r.payload.params(1, 1) == 0.5 * 6 + 7);
  // phi row 0: (N_kv + b0) / (N_k + V b0)
  CHECK(r.model.phi(0, 0) == doctest::Approx((2 + 1 + 0.1) / (7 + 0.2)).epsilon(1e-15));
  CHECK(r.model.merges == 1);
}

TEST_CASE("cgs merge without decay conserves counts") {
  std::vector<Payload> ps;
  double total = 0;
  for (unsigned i = 0; i < 6; ++i) {
    ps.push_back(random_payload(Algo::Cgs, 5, 30, 20 + i, 40 + i, 0.01));
    for (double x : ps.back().params.values()) total += x;
  }
  auto r = merge_cgs(ps, 0.01, 1.0);
  double merged = 0;
  for (double x : r.payload.params.values()) merged += x;
  CHECK(std::abs(merged - total) <= 1e-6);
  for (std::size_t k = 0; k < 5; ++k) {
    double s = 0;
    for (double x : r.model.phi.row(k)) s += x;
    CHECK(std::abs(s - 1) <= 1e-9);
  }
  std::vector<Payload> one{ps[0]};
  CHECK(bit_equal(merge_cgs(one, 0.01, 1.0).payload.params, ps[0].params));
}

TEST_CASE("merge rejects incompatible inputs") {
  auto a = random_payload(Algo::Vb, 2, 3, 5, 1, 0.01);
  auto b = random_payload(Algo::Vb, 2, 4, 5, 2, 0.01);
  std::vector<Payload> dims{a, b};
  CHECK_THROWS_AS(merge_vb(dims, 0.01), InvalidArgument);
  b = a;
  b.vocab_hash = 1;
  std::vector<Payload> vocab{a, b};
  CHECK_THROWS_AS(merge_vb(vocab, 0.01), InvalidArgument);
  CHECK_THROWS_AS(merge_vb({}, 0.01), InvalidArgument);
  auto c = random_payload(Algo::Cgs, 2, 3, 5, 3, 0.01);
  std::vector<Payload> cs{c};
  CHECK_THROWS_AS(merge_cgs(cs, 0.01, 0.0), InvalidArgument);
  CHECK_THROWS_AS(merge_cgs(cs, 0.01, 1.5), InvalidArgument);
  std::vector<Payload> mixed{a, c};
  CHECK_THROWS_AS(merge_models(mixed, 0.01, 1.0), InvalidArgument);
}

TEST_CASE("merge_count") {
  CHECK(merge_count(1, false) == 0);
  CHECK(merge_count(1, true) == 1);
  CHECK(merge_count(3, false) == 2);
  CHECK(merge_count(0, true) == 0);
  CHECK(merge_count(0, false) == 0);
}

TEST_CASE("merge time grows linearly in the number of models") {
  std::vector<Payload> ps;
  for (unsigned i = 0; i < 16; ++i) ps.push_back(random_payload(Algo::Vb, 50, 2000, 100 + i, i, 0.01));
  auto best_time = [&](std::size_t m) {
    double best = 1e9;
    for (int rep = 0; rep < 7; ++rep) {
      Stopwatch sw;
      auto out = merge_vb(std::span<const Payload>(ps.data(), m), 0.01);
      best = std::min(best, sw.seconds());
      CHECK(out.params.rows() == 50);
    }
    return best;
  };
  const double t8 = best_time(8), t16 = best_time(16);
  CHECK(t16 / t8 < 2.5);
}

}
