#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "retrovec/retrofit.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace retrovec;
using namespace oracle;

namespace {

double cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += double(a[k]) * b[k];
    na += double(a[k]) * a[k];
    nb += double(b[k]) * b[k];
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace

TEST(AssembleProblem, UnionConstruction) {
  LabeledMatrix emb({"/c/en/a", "/c/en/b"}, 2, {3, 4, 0, 2});
  auto p = assemble_problem(emb, build_association({edge("/c/en/b", "/c/en/c")}));
  EXPECT_EQ(p.vocab(), (std::vector<std::string>{"/c/en/a", "/c/en/b", "/c/en/c"}));
  EXPECT_EQ(p.anchored(), (std::vector<std::uint8_t>{1, 1, 0}));
  EXPECT_EQ(p.w0_row(2)[0], 0.0f);
  EXPECT_EQ(p.w0_row(2)[1], 0.0f);
  EXPECT_FLOAT_EQ(p.w0_row(0)[0], 0.6f);
  EXPECT_FLOAT_EQ(p.w0_row(0)[1], 0.8f);
  EXPECT_EQ(p.association().get(0, 0), 1.0);
  EXPECT_EQ(p.association().entries().row_cols(0).size(), 1u);
  EXPECT_EQ(p.association().get(1, 2), 1.0);
  EXPECT_EQ(p.association().check_invariants(), "");
}

TEST(AssembleProblem, EmptyGraphAndErrors) {
  LabeledMatrix emb({"/c/en/a", "/c/en/b"}, 1, {1, 2});
  auto p = assemble_problem(emb, build_association({}));
  EXPECT_EQ(p.vocab(), emb.labels());
  EXPECT_EQ(p.association().entries().nonzeros(), 2u);
  try {
    assemble_problem(LabeledMatrix(3), build_association({}));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  EXPECT_THROW(RetrofitProblem(build_association({edge("/c/en/a", "/c/en/b")}), 1, {1, 1}, {1, 0}), Error);
}

TEST(RetrofitStep, Examples) {
  // In-vocabulary term with no edges stays put.
  LabeledMatrix emb({"/c/en/u"}, 2, {0.6f, 0.8f});
  auto p = assemble_problem(emb, build_association({}));
  auto w = retrofit_step(p, p.w0());
  EXPECT_TRUE(same_bits(w, p.w0()));

  // Out-of-vocabulary term with one neighbour copies it.
  LabeledMatrix emb2({"/c/en/i"}, 2, {0, 1});
  auto p2 = assemble_problem(emb2, build_association({edge("/c/en/j", "/c/en/i")}));
  auto w2 = retrofit_step(p2, p2.w0());
  EXPECT_EQ(w2[2], 0.0f);
  EXPECT_EQ(w2[3], 1.0f);

  // Two orthogonal neighbours at weight 0.5 each.
  LabeledMatrix emb3({"/c/en/u", "/c/en/v"}, 2, {1, 0, 0, 1});
  auto p3 = assemble_problem(emb3, build_association({edge("/c/en/z", "/c/en/u"), edge("/c/en/z", "/c/en/v")}));
  auto w3 = retrofit_step(p3, p3.w0());
  EXPECT_FLOAT_EQ(w3[4], static_cast<float>(1 / std::sqrt(2.0)));
  EXPECT_FLOAT_EQ(w3[5], static_cast<float>(1 / std::sqrt(2.0)));
}

TEST(Retrofit, EmptyGraphIsFixedPoint) {
  std::mt19937_64 rng(21);
  LabeledMatrix raw({"/c/en/a", "/c/en/b", "/c/en/c", "/c/en/z"}, 5, testutil::random_floats(rng, 20, -4, 4));
  auto p = assemble_problem(raw, build_association({}));
  auto expect = l2_normalize_rows(raw);
  for (int iters : {1, 10}) {
    auto out = retrofit(p, {.iterations = iters});
    EXPECT_EQ(out.labels(), raw.labels());
    EXPECT_TRUE(same_bits(out.data(), expect.data())) << iters;
  }
}

TEST(Retrofit, BilingualExpansion) {
  LabeledMatrix emb({"/c/en/cat", "/c/en/dog"}, 3, {0.2f, 0.9f, -0.1f, 0.7f, 0.1f, 0.4f});
  auto p = assemble_problem(emb, build_association({edge("/c/fr/chat", "/c/en/cat")}));
  auto out = retrofit(p);
  auto chat = *out.find("/c/fr/chat"), cat = *out.find("/c/en/cat");
  EXPECT_GE(cosine(out.row(chat), out.row(cat)), 1 - 1e-9);
}

TEST(Retrofit, PathGraphAgainstOracles) {
  auto p = path_problem();
  ASSERT_EQ(p.vocab(), (std::vector<std::string>{"/c/en/n0", "/c/en/n4", "/c/en/n1", "/c/en/n2", "/c/en/n3"}));
  auto ten = retrofit(p);
  auto naive10 = naive_retrofit(p, 10);
  for (std::size_t i = 0; i < naive10.size(); ++i) EXPECT_NEAR(ten.data()[i], naive10[i], 1e-6);

  // Snapshot after 10 steps, in path order n0..n4.
  const double snapshot[5][2] = {{0.9729851339, 0.2308677744},
                                 {0.8822241060, 0.4708297217},
                                 {0.7071067812, 0.7071067812},
                                 {0.4708297217, 0.8822241060},
                                 {0.2308677744, 0.9729851339}};
  const char* order[5] = {"/c/en/n0", "/c/en/n1", "/c/en/n2", "/c/en/n3", "/c/en/n4"};
  for (int i = 0; i < 5; ++i) {
    auto r = ten.row(*ten.find(order[i]));
    EXPECT_NEAR(r[0], snapshot[i][0], 1e-6) << order[i];
    EXPECT_NEAR(r[1], snapshot[i][1], 1e-6) << order[i];
  }

  // The converged rows are evenly spaced in angle, 15 degrees apart.
  auto long_run = retrofit(p, {.iterations = 1000});
  for (int i = 0; i < 5; ++i) {
    double angle = (i + 1) * std::numbers::pi / 12;
    auto r = long_run.row(*long_run.find(order[i]));
    EXPECT_NEAR(r[0], std::cos(angle), 1e-6) << order[i];
    EXPECT_NEAR(r[1], std::sin(angle), 1e-6) << order[i];
    auto s = ten.row(*ten.find(order[i]));
    EXPECT_LT(std::hypot(s[0] - r[0], s[1] - r[1]), 0.035);
  }
}

TEST(Retrofit, OscillationWithoutSelfLoops) {
  auto p = two_node_problem();
  std::vector<float> seed = {1, 0, 0, 1};
  std::vector<double> with, without;
  retrofit_from(p, seed, {.iterations = 10, .self_loops = true},
                [&, prev = seed](int, std::span<const float> w) mutable {
                  with.push_back(max_row_displacement(prev, w, 2));
                  prev.assign(w.begin(), w.end());
                });
  retrofit_from(p, seed, {.iterations = 10, .self_loops = false},
                [&, prev = seed](int, std::span<const float> w) mutable {
                  without.push_back(max_row_displacement(prev, w, 2));
                  prev.assign(w.begin(), w.end());
                });
  ASSERT_EQ(with.size(), 10u);
  ASSERT_EQ(without.size(), 10u);
  for (double d : without) EXPECT_GE(d, 0.5);
  EXPECT_NEAR(without[0], std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(with[0], std::sqrt(2 - std::sqrt(2.0)), 1e-6);
  for (std::size_t k = 1; k < with.size(); ++k) {
    EXPECT_LT(with[k], 0.1);
    EXPECT_LE(with[k], with[k - 1]);
  }

  auto naive = naive_retrofit(p, 3, false);
  std::vector<float> w = seed;
  for (int i = 0; i < 3; ++i) w = retrofit_step(p, w, {.self_loops = false});
  // The oracle starts from W0 = 0, which is itself a fixed point.
  for (double x : naive) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(w, (std::vector<float>{0, 1, 1, 0}));
}

TEST(Retrofit, InvalidIterations) {
  auto p = path_problem();
  EXPECT_THROW(retrofit(p, {.iterations = 0}), Error);
}

TEST(RetrofitProperty, MatchesNaiveOracle) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 10; ++t) {
    auto p = random_problem(rng, 30, 20, 6);
    for (bool loops : {true, false}) {
      auto out = retrofit(p, {.iterations = 10, .self_loops = loops});
      auto naive = naive_retrofit(p, 10, loops);
      for (std::size_t i = 0; i < naive.size(); ++i) ASSERT_NEAR(out.data()[i], naive[i], 2e-5) << t;
    }
  }
}

TEST(RetrofitProperty, RowsAreZeroOrUnit) {
  std::mt19937_64 rng(32);
  auto p = random_problem(rng, 60, 30, 8);
  auto out = retrofit(p);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double sum = 0;
    for (float x : out.row(i)) sum += double(x) * x;
    if (sum != 0) {
      EXPECT_NEAR(std::sqrt(sum), 1.0, 1e-6);
    }
  }
}

TEST(RetrofitProperty, IsolatedAnchorsStayFixed) {
  std::mt19937_64 rng(33);
  auto data = testutil::random_floats(rng, 3 * 4);
  LabeledMatrix emb({"/c/en/a", "/c/en/b", "/c/en/lonely"}, 4, data);
  auto p = assemble_problem(emb, build_association({edge("/c/en/a", "/c/en/b"), edge("/c/en/b", "/c/fr/b")}));
  auto lonely = *p.association().find("/c/en/lonely");
  retrofit(p, {.iterations = 10}, [&](int step, std::span<const float> w) {
    EXPECT_TRUE(same_bits(w.subspan(lonely * 4, 4), p.w0_row(lonely))) << step;
  });
}

TEST(RetrofitProperty, PermutationEquivariance) {
  std::mt19937_64 rng(34);
  for (int t = 0; t < 10; ++t) {
    auto p = random_problem(rng, 50, 35, 10);
    ASSERT_EQ(p.size(), 50u);
    std::vector<std::size_t> perm(p.size());
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto q = permuted(p, perm);
    auto a = retrofit(p);
    auto b = retrofit(q);
    for (std::size_t i = 0; i < perm.size(); ++i)
      ASSERT_TRUE(same_bits(b.row(i), a.row(perm[i]))) << "trial " << t << " row " << i;
  }
}

TEST(RetrofitProperty, ThreadCountDoesNotChangeBits) {
  std::mt19937_64 rng(35);
  auto p = random_problem(rng, 400, 250, 16);
  auto one = retrofit(p, {.iterations = 10, .threads = 1});
  for (unsigned threads : {2u, 3u, 8u}) {
    auto many = retrofit(p, {.iterations = 10, .threads = threads});
    EXPECT_TRUE(same_bits(one.data(), many.data())) << threads;
  }
}
