// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "jumplan/scalar.hpp"

using namespace jumplan;

namespace {

// independent bisection oracle for sqrt(k)
double bisect_sqrt(double k) {
  double lo = 0, hi = k < 1 ? 1 : k;
  for (int i = 0; i < 200; ++i) {
    double mid = (lo + hi) / 2;
    (mid * mid <= k ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

// containment up to the oracle's own double rounding noise
bool interval_contains(const Interval& iv, double x, double slack = 1e-12) {
  return mpfr_cmp_d(iv.lo(), x + slack) <= 0 && mpfr_cmp_d(iv.hi(), x - slack) >= 0;
}

}  // namespace

TEST_CASE("parse_scalar literals") {
  Scalar two = parse_scalar("2");
  Interval iv = two.eval_interval(64);
  CHECK(mpfr_cmp_ui(iv.lo(), 2) == 0);
  CHECK(mpfr_cmp_ui(iv.hi(), 2) == 0);

  // sqrt(2) satisfies x*x = 2 exactly in normal form
  Scalar r2 = parse_scalar("sqrt(2)");
  CHECK((r2 * r2).equals_exact(Scalar(2)));
  CHECK(r2.sign() == 1);

  Scalar third = parse_scalar("1/3");
  CHECK(interval_contains(third.eval_interval(64), 0.333333333333));

  CHECK_THROWS_AS(parse_scalar("1 +"), ParseError);
  CHECK_THROWS_AS(parse_scalar("sqrt(0)"), ParseError);
  CHECK_THROWS_AS(parse_scalar("sqrt(-4)"), ParseError);
  CHECK_THROWS_AS(parse_scalar("2 @ 3"), ParseError);
  CHECK_THROWS_AS(parse_scalar("1/0"), std::domain_error);
  CHECK_THROWS_AS(parse_scalar("1/(2 - 2)"), std::domain_error);
}

TEST_CASE("eval_interval contract") {
  Scalar r2 = parse_scalar("sqrt(2)");
  Interval iv32 = r2.eval_interval(32);
  CHECK(interval_contains(iv32, bisect_sqrt(2.0)));

  // 10 - 7*sqrt(2) against the bisection oracle
  Scalar s = parse_scalar("10 - 7*sqrt(2)");
  double expected = 10 - 7 * bisect_sqrt(2.0);
  CHECK(expected == doctest::Approx(0.1005050).epsilon(1e-5));
  CHECK(interval_contains(s.eval_interval(64), expected));
  CHECK(s.eval_interval(64).meets_relative_width(64));
}

TEST_CASE("interval soundness on random expression trees") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> small(1, 9);
  std::uniform_int_distribution<int> op(0, 5);

  std::function<Scalar(int)> gen = [&](int depth) -> Scalar {
    if (depth == 0) {
      switch (op(rng) % 3) {
        case 0:
          return Scalar(small(rng));
        case 1:
          return Scalar(mpq_class(small(rng), small(rng)));
        default:
          return Scalar::sqrt(Scalar(small(rng)));
      }
    }
    Scalar a = gen(depth - 1), b = gen(depth - 1);
    switch (op(rng)) {
      case 0:
        return a + b;
      case 1:
        return a - b;
      case 2:
        return a * b;
      case 3:
        try {
          return a / b;
        } catch (const std::domain_error&) {
          return a;
        }
      case 4:
        return -a;
      default:
        return a;
    }
  };

  for (int i = 0; i < 200; ++i) {
    Scalar s = gen(3);
    Interval w1 = s.eval_interval(48);
    Interval w2 = s.eval_interval(96);
    // doubled precision intervals nest into the coarse one and tighten
    CHECK(mpfr_cmp(w1.lo(), w2.lo()) <= 0);
    CHECK(mpfr_cmp(w1.hi(), w2.hi()) >= 0);
    CHECK(w2.meets_relative_width(96));
  }
}

TEST_CASE("exact zero detection on surd combinations") {
  CHECK(parse_scalar("sqrt(8) - 2*sqrt(2)").sign() == 0);
  CHECK(parse_scalar("(1 + sqrt(2)) * (sqrt(2) - 1) - 1").sign() == 0);
  CHECK(parse_scalar("sqrt(2)*sqrt(3) - sqrt(6)").sign() == 0);
  CHECK(parse_scalar("1/3 + 1/6 - 1/2").sign() == 0);
  CHECK(parse_scalar("10 - 7*sqrt(2)").sign() == 1);
  CHECK(parse_scalar("sqrt(2) - 3/2").sign() == -1);
  // division by a surd stays exact
  Scalar q = parse_scalar("1 / (1 + sqrt(2))");
  CHECK((q - parse_scalar("sqrt(2) - 1")).sign() == 0);
}

TEST_CASE("expression round trip through the grammar") {
  const char* cases[] = {"2", "-7/3", "sqrt(12)", "3/2 + 2*sqrt(5)",
                         "(1 - sqrt(2)) * 5/7"};
  for (const char* c : cases) {
    Scalar s = parse_scalar(c);
    Scalar back = parse_scalar(s.to_expression());
    CHECK(s.equals_exact(back));
  }
}

TEST_CASE("householder to last axis") {
  SUBCASE("(3,4) maps to (0,5)") {
    RealVector x{Scalar(3), Scalar(4)};
    auto [h, eps] = householder_to_last_axis(x, 128);
    CHECK(eps.equals_exact(Scalar(5)));
    RealVector img = h.apply(x);
    CHECK(img[0].sign() == 0);
    CHECK(img[1].equals_exact(Scalar(5)));
  }
  SUBCASE("already aligned gives identity") {
    RealVector x{Scalar(0), Scalar(3)};
    auto [h, eps] = householder_to_last_axis(x, 128);
    CHECK(h.identity);
    CHECK(eps.equals_exact(Scalar(3)));
  }
  SUBCASE("negative multiple of f_d") {
    RealVector x{Scalar(0), Scalar(-3)};
    auto [h, eps] = householder_to_last_axis(x, 128);
    CHECK(!h.identity);
    CHECK(eps.equals_exact(Scalar(3)));
    RealVector img = h.apply(x);
    CHECK(img[1].equals_exact(Scalar(3)));
  }
  SUBCASE("(1,0,0) maps to (0,0,1), orthogonal, involutive") {
    RealVector x{Scalar(1), Scalar(0), Scalar(0)};
    auto [h, eps] = householder_to_last_axis(x, 128);
    CHECK(eps.equals_exact(Scalar(1)));
    RealVector img = h.apply(x);
    CHECK(img[0].sign() == 0);
    CHECK(img[1].sign() == 0);
    CHECK(img[2].equals_exact(Scalar(1)));
    // O^T O = I: apply twice returns the input
    RealVector twice = h.apply(img);
    for (size_t i = 0; i < 3; ++i) CHECK((twice[i] - x[i]).sign() == 0);
    // columns of O are orthonormal
    RealMatrix O = h.to_matrix();
    for (size_t a = 0; a < 3; ++a)
      for (size_t b = 0; b < 3; ++b) {
        Scalar dotv = dot(O.col(a), O.col(b));
        CHECK((dotv - Scalar(a == b ? 1 : 0)).sign() == 0);
      }
  }
  SUBCASE("surd input: image within interval tolerance") {
    RealVector x{Scalar(1), parse_scalar("sqrt(2)")};
    auto [h, eps] = householder_to_last_axis(x, 128);
    // eps^2 = 3 exactly
    CHECK((eps * eps - Scalar(3)).sign() == 0);
    CHECK(eps.sign() == 1);
    // norm preserved for another vector
    RealVector y{Scalar(2), Scalar(-1)};
    RealVector img = h.apply(y);
    CHECK((norm_squared(img) - norm_squared(y)).sign() == 0);
  }
  CHECK_THROWS(householder_to_last_axis(RealVector{Scalar(0), Scalar(0)}, 128));
}

TEST_CASE("exact fragment linear algebra") {
  RealMatrix m(2, 3);
  m.at(0, 0) = Scalar(1);
  m.at(0, 1) = Scalar(0);
  m.at(0, 2) = parse_scalar("sqrt(2)");
  m.at(1, 0) = Scalar(0);
  m.at(1, 1) = Scalar(1);
  m.at(1, 2) = parse_scalar("sqrt(3)");
  CHECK(exact_rank(m) == 2);
  CHECK(!exact_left_nullvector(m));
  auto ns = exact_right_nullspace(m);
  REQUIRE(ns.size() == 1);
  // m * x = 0 for the nullspace vector
  for (size_t i = 0; i < 2; ++i) {
    Scalar acc;
    for (size_t j = 0; j < 3; ++j) acc += m.at(i, j) * ns[0][j];
    CHECK(acc.sign() == 0);
  }

  // dependent rows yield a left nullvector
  RealMatrix r(2, 2);
  r.at(0, 0) = Scalar(1);
  r.at(0, 1) = parse_scalar("sqrt(2)");
  r.at(1, 0) = Scalar(2);
  r.at(1, 1) = parse_scalar("2*sqrt(2)");
  CHECK(exact_rank(r) == 1);
  auto w = exact_left_nullvector(r);
  REQUIRE(w.has_value());
  for (size_t j = 0; j < 2; ++j) {
    Scalar acc;
    for (size_t i = 0; i < 2; ++i) acc += (*w)[i] * r.at(i, j);
    CHECK(acc.sign() == 0);
  }

  // exact solve
  RealMatrix a(2, 2);
  a.at(0, 0) = Scalar(2);
  a.at(0, 1) = Scalar(1);
  a.at(1, 0) = Scalar(1);
  a.at(1, 1) = parse_scalar("sqrt(2)");
  RealVector b{Scalar(1), Scalar(0)};
  RealVector x = exact_solve(a, b);
  for (size_t i = 0; i < 2; ++i) {
    Scalar acc;
    for (size_t j = 0; j < 2; ++j) acc += a.at(i, j) * x[j];
    CHECK((acc - b[i]).sign() == 0);
  }
}
