#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "dsbr/adam.hpp"
#include "dsbr/retriever.hpp"
#include "dsbr/rng.hpp"
#include "dsbr/tensor.hpp"

using namespace dsbr;

namespace {

Tensor random_mat(std::size_t r, std::size_t c, Rng& rng, bool rg = false) {
  std::vector<double> v(r * c);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::of(r, c, std::move(v), rg);
}

ScoreNet random_net(int d, Rng& rng) {
  ScoreNet net = make_scorenet(d, rng);
  return net;
}

SessionBank make_bank(const Tensor& reps) {
  SessionBank bank;
  bank.reps = reps;
  bank.session_of_row.resize(reps.rows());
  std::iota(bank.session_of_row.begin(), bank.session_of_row.end(), 0);
  return bank;
}

double silu_ref(double z) { return z / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("zero score net scores zero everywhere") {
  ScoreNet net;
  net.dim = 3;
  net.hidden = 3;
  net.w_query = Tensor::zeros(3, 3);
  net.w_cand = Tensor::zeros(3, 3);
  net.b_hidden = Tensor::zeros(1, 3);
  net.w_out = Tensor::zeros(3, 1);
  net.b_out = Tensor::zeros(1, 1);
  Rng rng(41);
  Tensor q = random_mat(1, 3, rng);
  Tensor cands = random_mat(4, 3, rng);
  Tensor s = score_pairs(net, q, cands);
  for (double v : s.values()) CHECK(v == 0.0);
}

TEST_CASE("score matches a layer-by-layer hand evaluation") {
  Rng rng(42);
  int d = 3;
  ScoreNet net = random_net(d, rng);
  Tensor q = random_mat(1, d, rng);
  Tensor c = random_mat(1, d, rng);
  Tensor s = score_pairs(net, q, c);

  double expect = net.b_out.at(0, 0);
  for (int h = 0; h < net.hidden; ++h) {
    double z = net.b_hidden.at(0, static_cast<std::size_t>(h));
    for (int i = 0; i < d; ++i) {
      z += q.at(0, static_cast<std::size_t>(i)) *
           net.w_query.at(static_cast<std::size_t>(i), static_cast<std::size_t>(h));
      z += c.at(0, static_cast<std::size_t>(i)) *
           net.w_cand.at(static_cast<std::size_t>(i), static_cast<std::size_t>(h));
    }
    expect += silu_ref(z) * net.w_out.at(static_cast<std::size_t>(h), 0);
  }
  CHECK(s.item() == doctest::Approx(expect).epsilon(1e-12));

  // Concatenation order matters: swapping query and candidate changes the score.
  Tensor swapped = score_pairs(net, c, q);
  CHECK(std::fabs(swapped.item() - s.item()) > 1e-9);
}

TEST_CASE("cached bank projection reproduces the tape path bit for bit") {
  Rng rng(43);
  int d = 5;
  ScoreNet net = random_net(d, rng);
  Tensor reps = random_mat(20, d, rng);
  SessionBank bank = make_bank(reps);
  BankProjection bp = project_bank(net, bank);

  Tensor q = random_mat(1, d, rng);
  Tensor tape_scores = score_pairs(net, q, reps);

  std::vector<int> pool(20);
  std::iota(pool.begin(), pool.end(), 0);
  Retrieved r = retrieve_topk(q.row_ptr(0), net, bank, bp, pool, 20);
  // Both paths use identical kernels, so the scores agree exactly.
  for (std::size_t j = 0; j < r.rows.size(); ++j) {
    double tape = tape_scores.at(static_cast<std::size_t>(r.rows[j]), 0);
    CHECK(r.scores[j] == tape);
  }
}

TEST_CASE("top-k equals a full sort oracle with ties to the lower row") {
  Rng rng(44);
  int d = 4;
  for (int trial = 0; trial < 50; ++trial) {
    ScoreNet net = random_net(d, rng);
    std::size_t n = 5 + static_cast<std::size_t>(rng.below(20));
    Tensor reps = random_mat(n, d, rng);
    if (trial % 3 == 0 && n >= 4) {
      // Force exact score ties by duplicating rows.
      for (int c = 0; c < d; ++c) {
        reps.values()[2 * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] =
            reps.values()[static_cast<std::size_t>(c)];
        reps.values()[3 * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] =
            reps.values()[1 * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
      }
    }
    SessionBank bank = make_bank(reps);
    BankProjection bp = project_bank(net, bank);
    Tensor q = random_mat(1, d, rng);
    int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));

    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    Retrieved r = retrieve_topk(q.row_ptr(0), net, bank, bp, pool, k);

    Tensor all = score_pairs(net, q, reps);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      double sa = all.at(static_cast<std::size_t>(a), 0), sb = all.at(static_cast<std::size_t>(b), 0);
      if (sa != sb) return sa > sb;
      return a < b;
    });
    REQUIRE(static_cast<int>(r.rows.size()) == k);
    for (int j = 0; j < k; ++j) CHECK(r.rows[static_cast<std::size_t>(j)] == order[static_cast<std::size_t>(j)]);
  }
}

TEST_CASE("omega is the softmax of the raw scores") {
  Tensor equal = softmax_rows(Tensor::zeros(1, 5));
  for (std::size_t j = 0; j < 5; ++j)
    CHECK(equal.at(0, j) == doctest::Approx(0.2).epsilon(1e-12));

  Tensor two = softmax_rows(Tensor::of(1, 2, {std::log(2.0), 0.0}));
  CHECK(two.at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(two.at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Rng rng(45);
  Tensor raw = random_mat(1, 7, rng);
  Tensor om = softmax_rows(raw);
  double sum = 0.0;
  for (std::size_t j = 0; j < 7; ++j) {
    CHECK(om.at(0, j) > 0.0);
    sum += om.at(0, j);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("feedback loss is the omega weighted sum of constant losses") {
  Tensor om = Tensor::of(1, 2, {0.5, 0.5});
  CHECK(feedback_loss(om, {1.0, 3.0}).item() == doctest::Approx(2.0).epsilon(1e-12));

  Rng rng(46);
  Tensor raw = random_mat(1, 3, rng, true);
  std::vector<double> losses{0.7, 0.1, 2.3};
  Tensor omega = softmax_rows(raw);
  double expect = 0.0;
  for (std::size_t j = 0; j < 3; ++j) expect += omega.at(0, j) * losses[j];
  CHECK(feedback_loss(omega, losses).item() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("equal neighbor losses give zero gradient on raw scores") {
  Tensor raw = Tensor::of(1, 3, {0.3, -0.2, 1.1}, true);
  backward(feedback_loss(softmax_rows(raw), {0.8, 0.8, 0.8}));
  for (double g : raw.grad()) CHECK(std::fabs(g) < 1e-15);
}

TEST_CASE("feedback pushes scores toward low loss neighbors") {
  // With L_d = (0.1, 1.0) the gradient must favor neighbor 1:
  // dL_r/dsim_1 < dL_r/dsim_2, and one optimizer step widens sim_1 - sim_2.
  Tensor raw = Tensor::of(1, 2, {0.2, 0.4}, true);
  double gap_before = raw.values()[0] - raw.values()[1];
  backward(feedback_loss(softmax_rows(raw), {0.1, 1.0}));
  CHECK(raw.grad()[0] < raw.grad()[1]);

  std::vector<Param> params{{"raw", raw}};
  AdamOptimizer opt;
  opt.step(params, 0.01);
  double gap_after = raw.values()[0] - raw.values()[1];
  CHECK(gap_after > gap_before);
}

TEST_CASE("pool sampling excludes the query session and is deterministic") {
  Rng bank_rng(47);
  Tensor reps = random_mat(30, 3, bank_rng);
  SessionBank bank = make_bank(reps);
  bank.session_of_row[4] = 99;
  bank.session_of_row[17] = 99;

  Rng a(5), b(5);
  std::vector<int> pa = sample_pool(bank, 10, a, 99);
  std::vector<int> pb = sample_pool(bank, 10, b, 99);
  CHECK(pa == pb);
  CHECK(pa.size() == 10);
  std::set<int> seen(pa.begin(), pa.end());
  CHECK(seen.size() == pa.size());  // no replacement
  CHECK(seen.count(4) == 0);
  CHECK(seen.count(17) == 0);

  // Requesting more than the eligible set returns all of it, in row order.
  Rng c(6);
  std::vector<int> all = sample_pool(bank, 100, c, 99);
  CHECK(all.size() == 28);
  CHECK(std::is_sorted(all.begin(), all.end()));
}

TEST_CASE("retrieval argument validation") {
  Rng rng(48);
  ScoreNet net = random_net(3, rng);
  Tensor reps = random_mat(4, 3, rng);
  SessionBank bank = make_bank(reps);
  BankProjection bp = project_bank(net, bank);
  Tensor q = random_mat(1, 3, rng);
  std::vector<int> pool{0, 1};
  CHECK_THROWS_AS(retrieve_topk(q.row_ptr(0), net, bank, bp, pool, 3), std::invalid_argument);
  CHECK_THROWS_AS(retrieve_topk(q.row_ptr(0), net, bank, bp, pool, 0), std::invalid_argument);
  Rng r2(7);
  CHECK_THROWS_AS(sample_pool(bank, 0, r2), std::invalid_argument);
}
