#include <doctest.h>

#include <random>

#include "../oracles.hpp"
#include "vidcap/error.hpp"
#include "vidcap/stats.hpp"

using namespace vidcap;

TEST_SUITE("stats") {

TEST_CASE("wilcoxon fixtures") {
  const std::vector<double> d{1, 2, 3, 4, 5};
  CHECK(wilcoxon_signed_rank(d) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(wilcoxon_signed_rank(std::vector<double>{0, 0, 0}) == 1.0);
  CHECK(wilcoxon_signed_rank(std::vector<double>{1, -1}) == 1.0);
  CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{}), ValidationError);
}

TEST_CASE("wilcoxon exact p equals sign enumeration") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> mag(-4, 4);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> d(1 + rng() % 12);
    for (auto& x : d) x = mag(rng) * 0.5;  // ties and zeros on purpose
    REQUIRE(wilcoxon_signed_rank(d) == doctest::Approx(oracle::wilcoxon(d)).epsilon(1e-12));
  }
}

TEST_CASE("wilcoxon normal approximation is close to exact for n=20") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> g(0.3, 1.0);
  std::vector<double> d(20);
  for (auto& x : d) x = g(rng);
  const double exact = wilcoxon_signed_rank(d, 20);
  const double approx = wilcoxon_signed_rank(d, 0);
  CHECK(std::fabs(exact - approx) < 0.02);
}

TEST_CASE("corrected resampled t fixture against the t density") {
  const std::vector<double> d{2, 1, 2, 1, 2, 1, 2, 1, 2, 1};
  const double p = corrected_resampled_t(d, 0.1, 0.8);
  CHECK(p == doctest::Approx(oracle::t_two_sided(6.0, 9.0)).epsilon(1e-6));
  CHECK(std::fabs(p - 2.0e-4) < 1e-4);
  CHECK(corrected_resampled_t(std::vector<double>{0, 0, 0}, 0.1, 0.8) == 1.0);
  CHECK(corrected_resampled_t(std::vector<double>{2, 2, 2}, 0.1, 0.8) == 0.0);
  CHECK_THROWS_AS(corrected_resampled_t(std::vector<double>{1}, 0.1, 0.8), ValidationError);
}

TEST_CASE("corrected t reduces to the paired t-test without the overlap term") {
  const std::vector<double> d{0.5, 1.5, -0.2, 0.9, 1.1};
  double m = 0;
  for (double x : d) m += x;
  m /= d.size();
  double ss = 0;
  for (double x : d) ss += (x - m) * (x - m);
  const double t = m / std::sqrt(ss / (d.size() - 1) / d.size());
  CHECK(corrected_resampled_t(d, 0.0, 0.8) == doctest::Approx(oracle::t_two_sided(t, 4.0)).epsilon(1e-7));
}

TEST_CASE("student t tail matches numeric integration") {
  for (double df : {1.0, 2.0, 5.0, 9.0, 30.0})
    for (double t : {0.0, 0.5, 1.3, 2.7, 4.0})
      CHECK(student_t_two_sided(t, df) == doctest::Approx(oracle::t_two_sided(t, df)).epsilon(1e-7));
}

TEST_CASE("combined significance takes the larger p") {
  const std::vector<double> a{3, 4, 5, 6}, b{3, 4, 5, 6};
  const auto same = combined_significance(a, b);
  CHECK(same.combined_p == 1.0);
  CHECK_FALSE(same.significant());
  std::mt19937_64 rng(47);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x(6), y(6);
    for (int j = 0; j < 6; ++j) {
      x[j] = g(rng) + 0.5;
      y[j] = g(rng);
    }
    const auto r = combined_significance(x, y, 0.1, 0.8, 0.01);
    CHECK(r.combined_p == std::max(r.wilcoxon_p, r.corrected_t_p));
    CHECK(r.combined_p >= r.wilcoxon_p);
    CHECK(r.combined_p >= r.corrected_t_p);
  }
  // finer pairing for the rank test
  const std::vector<double> fa{1, 2, 3}, fb{0, 1, 2};
  const std::vector<double> sa{1, 1, 1, 1, 1, 1, 1, 1}, sb{0, 0, 0, 0, 0, 0, 0, 0};
  const auto r = combined_significance(fa, fb, 0.1, 0.8, 0.05, sa, sb);
  CHECK(r.n == 8);
  CHECK(r.wilcoxon_p == doctest::Approx(2.0 / 256.0));
  CHECK_THROWS_AS(combined_significance(fa, std::vector<double>{1, 2}), ValidationError);
}

TEST_CASE("spearman fixtures and oracle") {
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
  CHECK(spearman(x, y).rho == doctest::Approx(0.8));
  CHECK(spearman(x, x).rho == doctest::Approx(1.0));
  const std::vector<double> rev{4, 3, 2, 1};
  CHECK(spearman(x, rev).rho == doctest::Approx(-1.0));
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 1, 1, 1}), NumericError);
  CHECK_THROWS(spearman(std::vector<double>{1, 2}, std::vector<double>{2, 1}));

  std::mt19937_64 rng(53);
  std::uniform_int_distribution<int> v(0, 5);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(3 + rng() % 10), b(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
      a[j] = v(rng);
      b[j] = v(rng) + 0.5 * a[j];
    }
    const auto ra = oracle::ranks(a), rb = oracle::ranks(b);
    if (std::all_of(ra.begin(), ra.end(), [&](double r) { return r == ra[0]; }) ||
        std::all_of(rb.begin(), rb.end(), [&](double r) { return r == rb[0]; }))
      continue;
    const double rho = oracle::spearman_rho(a, b);
    const auto got = spearman(a, b);
    REQUIRE(got.rho == doctest::Approx(rho).epsilon(1e-12));
    if (std::fabs(rho) < 1.0) {
      const double n = static_cast<double>(a.size());
      const double t = rho * std::sqrt((n - 2) / (1 - rho * rho));
      REQUIRE(got.p == doctest::Approx(oracle::t_two_sided(t, n - 2)).epsilon(1e-6));
    }
  }
}

TEST_CASE("roc auc fixtures") {
  CHECK(roc_auc(std::vector<double>{.9, .8, .1}, std::vector<int>{1, 1, 0}) == 100.0);
  CHECK(roc_auc(std::vector<double>{.5, .5, .5, .5}, std::vector<int>{1, 0, 1, 0}) == 50.0);
  CHECK(roc_auc(std::vector<double>{.9, .4, .6, .1}, std::vector<int>{1, 0, 1, 0}) == 100.0);
  CHECK_THROWS_AS(roc_auc(std::vector<double>{.1, .2}, std::vector<int>{1, 1}), ValidationError);
}

TEST_CASE("roc auc equals pair counting, complements and is rank invariant") {
  std::mt19937_64 rng(59);
  std::uniform_int_distribution<int> v(0, 6);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> s(2 + rng() % 15);
    std::vector<int> y(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
      s[j] = v(rng);
      y[j] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    const double a = roc_auc(s, y);
    REQUIRE(std::fabs(a - oracle::auc(s, y)) < 1e-9);
    std::vector<int> flip(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) flip[j] = 1 - y[j];
    REQUIRE(a + roc_auc(s, flip) == 100.0);
    std::vector<double> mono(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) mono[j] = std::exp(3.0 * s[j]) - 7.0;
    REQUIRE(roc_auc(mono, y) == a);
  }
}

TEST_CASE("midranks") {
  const auto r = midranks(std::vector<double>{3, 1, 3, 2});
  CHECK(r == std::vector<double>{3.5, 1, 3.5, 2});
}

}  // TEST_SUITE
