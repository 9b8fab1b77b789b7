#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "gevbev/edl.hpp"

using namespace gevbev;

namespace {

// Direct transcription of KL[Dir(a) || Dir(1)] with boost special functions.
double kl_oracle(const std::vector<double>& a) {
  const double s = std::accumulate(a.begin(), a.end(), 0.0);
  double v = boost::math::lgamma(s) - boost::math::lgamma(static_cast<double>(a.size()));
  for (double ai : a) {
    v -= boost::math::lgamma(ai);
    v += (ai - 1.0) * (boost::math::digamma(ai) - boost::math::digamma(s));
  }
  return v;
}

// Row loss written out from the expectation definitions.
LossBreakdown loss_oracle(const EdlBatch& b) {
  LossBreakdown l;
  l.lambda_t = std::min(1.0, b.epoch / b.a_max);
  for (std::size_t i = 0; i < b.n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < b.k; ++k) s += b.alpha[i * b.k + k];
    std::vector<double> at(b.k);
    for (std::size_t k = 0; k < b.k; ++k) {
      const double a = b.alpha[i * b.k + k], y = b.y[i * b.k + k], p = a / s;
      l.sq_term += (y - p) * (y - p);
      l.var_term += p * (1.0 - p) / (s + 1.0);
      at[k] = y + (1.0 - y) * a;
    }
    l.kl_term += kl_oracle(at);
  }
  l.total = l.sq_term + l.var_term + l.lambda_t * l.kl_term;
  return l;
}

EdlBatch random_batch(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::uniform_real_distribution<double> a(1.0, 50.0), ep(0.0, 20.0);
  EdlBatch b;
  b.n = n;
  b.k = k;
  b.epoch = ep(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = rng() % k;
    for (std::size_t c = 0; c < k; ++c) {
      b.alpha.push_back(a(rng));
      b.y.push_back(c == cls ? 1.0 : 0.0);
    }
  }
  return b;
}

}  // namespace

TEST_CASE("KL to the flat Dirichlet") {
  CHECK(std::abs(dirichlet_kl_to_uniform(std::vector<double>{1.0, 1.0})) <= 1e-12);
  CHECK(std::abs(dirichlet_kl_to_uniform(std::vector<double>{1.0, 1.0, 1.0, 1.0})) <= 1e-12);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> a(0.05, 80.0);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> v(2 + i % 4);
    for (double& x : v) x = a(rng);
    const double want = kl_oracle(v);
    CHECK(std::abs(dirichlet_kl_to_uniform(v) - want) <= 1e-9 * std::max(1.0, std::abs(want)));
  }
  CHECK_THROWS_AS(dirichlet_kl_to_uniform(std::vector<double>{1.0, 0.0}), std::domain_error);
}

TEST_CASE("KL gradient matches finite differences") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> a(0.5, 30.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v(2 + i % 3), g(v.size());
    for (double& x : v) x = a(rng);
    dirichlet_kl_to_uniform_grad(v, g);
    for (std::size_t j = 0; j < v.size(); ++j) {
      std::vector<double> p = v, m = v;
      p[j] += 1e-6;
      m[j] -= 1e-6;
      const double fd = (dirichlet_kl_to_uniform(p) - dirichlet_kl_to_uniform(m)) / 2e-6;
      CHECK(std::abs(g[j] - fd) <= 1e-6 * std::max({1.0, std::abs(g[j]), std::abs(fd)}));
    }
  }
}

TEST_CASE("annealing coefficient") {
  CHECK(annealing_coefficient(0.0, 10.0) == 0.0);
  CHECK(annealing_coefficient(5.0, 10.0) == 0.5);
  CHECK(annealing_coefficient(10.0, 10.0) == 1.0);
  CHECK(annealing_coefficient(250.0, 10.0) == 1.0);
}

TEST_CASE("loss matches the written-out oracle") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const EdlBatch b = random_batch(rng, 1 + i % 20, 2 + i % 3);
    const LossBreakdown got = edl_loss(b);
    const LossBreakdown want = loss_oracle(b);
    CHECK(got.sq_term == doctest::Approx(want.sq_term).epsilon(1e-12));
    CHECK(got.var_term == doctest::Approx(want.var_term).epsilon(1e-12));
    CHECK(got.kl_term == doctest::Approx(want.kl_term).epsilon(1e-10));
    CHECK(got.lambda_t == want.lambda_t);
    CHECK(got.total == doctest::Approx(want.total).epsilon(1e-10));
    const LossBreakdown mean = edl_loss(b, Reduction::mean);
    CHECK(mean.total == doctest::Approx(got.total / static_cast<double>(b.n)).epsilon(1e-12));
  }
}

TEST_CASE("hand-computed rows") {
  // Correct class with alpha (4, 2): p = (2/3, 1/3), S = 6. The KL sees alpha~ = (1, 2).
  EdlBatch b{1, 2, {4.0, 2.0}, {1.0, 0.0}, 10.0, 10.0};
  const LossBreakdown l = edl_loss(b);
  CHECK(l.sq_term == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  CHECK(l.var_term == doctest::Approx(2.0 * (2.0 / 9.0) / 7.0).epsilon(1e-14));
  // KL[Beta(1,2) || U] = ln 2 - 1/2.
  CHECK(l.kl_term == doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-12));

  // Zero evidence: the regularizer vanishes and p is uniform.
  EdlBatch flat{1, 2, {1.0, 1.0}, {0.0, 1.0}, 0.0, 10.0};
  const LossBreakdown f = edl_loss(flat);
  CHECK(f.sq_term == doctest::Approx(0.5));
  CHECK(f.var_term == doctest::Approx(0.5 / 3.0));
  CHECK(std::abs(f.kl_term) <= 1e-12);
}

TEST_CASE("gradient matches finite differences for K up to 4") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 30; ++i) {
    EdlBatch b = random_batch(rng, 1 + i % 8, 2 + i % 3);
    for (double& a : b.alpha) a = std::max(a, 1.0 + 1e-4);
    for (const Reduction red : {Reduction::sum, Reduction::mean}) {
      const std::vector<double> g = edl_grad(b, red);
      for (std::size_t j = 0; j < b.alpha.size(); ++j) {
        EdlBatch p = b, m = b;
        p.alpha[j] += 1e-5;
        m.alpha[j] -= 1e-5;
        const double fd = (edl_loss(p, red).total - edl_loss(m, red).total) / 2e-5;
        CHECK(std::abs(g[j] - fd) <= 1e-6 * std::max({1.0, std::abs(g[j]), std::abs(fd)}));
      }
    }
  }
}

TEST_CASE("edl_row agrees with the batch API") {
  std::mt19937_64 rng(8);
  const EdlBatch b = random_batch(rng, 1, 2);
  std::vector<double> g(2);
  const double lambda = annealing_coefficient(b.epoch, b.a_max);
  const RowLoss r = edl_row(b.alpha, b.y, lambda, g);
  const LossBreakdown l = edl_loss(b);
  CHECK(r.sq == l.sq_term);
  CHECK(r.var == l.var_term);
  CHECK(r.kl == l.kl_term);
  const std::vector<double> bg = edl_grad(b);
  CHECK(g[0] == bg[0]);
  CHECK(g[1] == bg[1]);
}

TEST_CASE("batch validation") {
  EdlBatch ok{1, 2, {2.0, 1.0}, {1.0, 0.0}, 0.0, 10.0};
  CHECK_NOTHROW(ok.validate());
  EdlBatch bad_alpha = ok;
  bad_alpha.alpha[1] = 0.5;
  CHECK_THROWS_AS(edl_loss(bad_alpha), std::invalid_argument);
  EdlBatch bad_label = ok;
  bad_label.y = {1.0, 1.0};
  CHECK_THROWS_AS(edl_loss(bad_label), std::invalid_argument);
  EdlBatch bad_size = ok;
  bad_size.alpha.push_back(1.0);
  CHECK_THROWS_AS(edl_grad(bad_size), std::invalid_argument);
  EdlBatch bad_k = ok;
  bad_k.k = 1;
  bad_k.alpha = {1.0};
  bad_k.y = {1.0};
  CHECK_THROWS_AS(edl_loss(bad_k), std::invalid_argument);
}
