// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "jumplan/lattice.hpp"

using namespace jumplan;

namespace {

RealMatrix one_sqrt2() {
  RealMatrix P(1, 2);
  P.at(0, 0) = Scalar(1);
  P.at(0, 1) = parse_scalar("sqrt(2)");
  return P;
}

RealMatrix surd_2d() {
  RealMatrix P(2, 3);
  P.at(0, 0) = Scalar(1);
  P.at(0, 1) = Scalar(0);
  P.at(0, 2) = parse_scalar("sqrt(2)");
  P.at(1, 0) = Scalar(0);
  P.at(1, 1) = Scalar(1);
  P.at(1, 2) = parse_scalar("sqrt(3)");
  return P;
}

// independent brute-force CVP oracle with the documented tie-break
IntVec oracle_cvp(const RealMatrix& P, const RealVector& t, long radius,
                  bool exclude_exact) {
  size_t n = P.cols;
  std::vector<long> v(n, -radius);
  std::optional<IntVec> best;
  Scalar best_d;
  mpz_class best_norm;
  auto advance = [&]() {
    for (size_t j = n; j-- > 0;) {
      if (v[j] < radius) {
        ++v[j];
        for (size_t k = j + 1; k < n; ++k) v[k] = -radius;
        return true;
      }
    }
    return false;
  };
  do {
    IntVec cand(n);
    mpz_class nn;
    for (size_t j = 0; j < n; ++j) {
      cand[j] = v[j];
      nn += cand[j] * cand[j];
    }
    RealVector img = mat_vec(P, cand);
    Scalar dsq = norm_squared(img - t);
    if (exclude_exact && dsq.sign() == 0) continue;
    bool better = false;
    if (!best) {
      better = true;
    } else {
      int c = cmp(dsq, best_d);
      if (c < 0) better = true;
      else if (c == 0) {
        if (nn < best_norm) better = true;
        else if (nn == best_norm && cand < *best) better = true;
      }
    }
    if (better) {
      best = cand;
      best_d = dsq;
      best_norm = nn;
    }
  } while (advance());
  return *best;
}

}  // namespace

TEST_CASE("lll_reduce") {
  SUBCASE("orthonormal basis is unchanged") {
    RealMatrix B(2, 2);
    B.at(0, 0) = Scalar(1);
    B.at(1, 1) = Scalar(1);
    auto r = lll_reduce(B, mpq_class(99, 100));
    CHECK(r.U.is_identity());
  }
  SUBCASE("{(201,1),(200,1)} contains ±(1,0)") {
    RealMatrix B(2, 2);
    B.at(0, 0) = Scalar(201);
    B.at(0, 1) = Scalar(200);
    B.at(1, 0) = Scalar(1);
    B.at(1, 1) = Scalar(1);
    auto r = lll_reduce(B, mpq_class(99, 100));
    bool found = false;
    for (size_t j = 0; j < 2; ++j) {
      const SurdForm* a = r.reduced.at(0, j).form();
      const SurdForm* b = r.reduced.at(1, j).form();
      if (a && b && b->is_zero() && a->is_rational() &&
          (a->rational_value() == 1 || a->rational_value() == -1))
        found = true;
    }
    CHECK(found);
  }
  SUBCASE("random integer bases: reduced = basis * U, U unimodular, Lovász holds") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<long> entry(-50, 50);
    mpq_class delta(3, 4);
    for (int k = 0; k < 25; ++k) {
      RealMatrix B(3, 3);
      for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 3; ++j) B.at(i, j) = Scalar(entry(rng));
      // ensure independence
      IntMatrix zi(3, 3);
      for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 3; ++j) zi.at(i, j) = B.at(i, j).form()->rational_value();
      if (zi.det() == 0) continue;
      auto r = lll_reduce(B, delta);
      mpz_class du = r.U.det();
      CHECK((du == 1 || du == -1));
      for (size_t j = 0; j < 3; ++j) {
        IntVec ucol(3);
        for (size_t i = 0; i < 3; ++i) ucol[i] = r.U.at(i, j);
        RealVector prod = mat_vec(B, ucol);
        for (size_t i = 0; i < 3; ++i)
          CHECK((prod[i] - r.reduced.at(i, j)).sign() == 0);
      }
      // exact rational Gram-Schmidt of the reduced basis; Lovász condition
      std::vector<std::vector<mpq_class>> bs(3, std::vector<mpq_class>(3));
      std::vector<std::vector<mpq_class>> mu(3, std::vector<mpq_class>(3));
      std::vector<mpq_class> Bn(3);
      auto dotq = [](const std::vector<mpq_class>& a, const std::vector<mpq_class>& b) {
        mpq_class s;
        for (size_t t = 0; t < a.size(); ++t) s += a[t] * b[t];
        return s;
      };
      for (size_t jcol = 0; jcol < 3; ++jcol) {
        for (size_t i = 0; i < 3; ++i)
          bs[jcol][i] = r.reduced.at(i, jcol).form()->rational_value();
        for (size_t l = 0; l < jcol; ++l) {
          mu[jcol][l] = dotq(bs[jcol], bs[l]) / Bn[l];
          for (size_t i = 0; i < 3; ++i) bs[jcol][i] -= mu[jcol][l] * bs[l][i];
        }
        Bn[jcol] = dotq(bs[jcol], bs[jcol]);
        if (jcol > 0)
          CHECK(Bn[jcol] >= (delta - mu[jcol][jcol - 1] * mu[jcol][jcol - 1]) * Bn[jcol - 1]);
      }
    }
  }
  CHECK_THROWS_AS(lll_reduce(one_sqrt2(), mpq_class(2, 1)), std::invalid_argument);
}

TEST_CASE("approx_cvp documented examples") {
  RealMatrix P = one_sqrt2();
  Effort eff;
  eff.enum_radius = 10;

  SUBCASE("target sqrt(2)/2") {
    RealVector t{parse_scalar("sqrt(2)/2")};
    CvpResult r = approx_cvp(P, t, eff);
    CHECK(r.v == IntVec{5, -3});
    // distance ~ 0.0503
    double dd = Scalar::sqrt(r.dist_sq).eval_interval(64).midpoint_double();
    CHECK(dd == doctest::Approx(0.0503).epsilon(1e-2));
  }
  SUBCASE("exact lattice point") {
    RealVector t{P.at(0, 0) * Scalar(2) + P.at(0, 1) * Scalar(3)};
    CvpResult r = approx_cvp(P, t, eff);
    CHECK(r.v == IntVec{2, 3});
    CHECK(r.dist_sq.sign() == 0);
  }
  SUBCASE("zero target with exclusion") {
    RealVector t{Scalar(0)};
    CvpResult r = approx_cvp(P, t, eff, true);
    CHECK(r.v == IntVec{-7, 5});
    double dd = Scalar::sqrt(r.dist_sq).eval_interval(64).midpoint_double();
    CHECK(dd == doctest::Approx(0.0711).epsilon(1e-2));
  }
}

TEST_CASE("approx_cvp matches the brute-force oracle exactly") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<long> num(-4000, 4000);

  SUBCASE("n = 2, radius 10") {
    RealMatrix P = one_sqrt2();
    Effort eff;
    eff.enum_radius = 10;
    for (int k = 0; k < 20; ++k) {
      RealVector t{Scalar(mpq_class(num(rng), 1000))};
      CHECK(approx_cvp(P, t, eff).v == oracle_cvp(P, t, 10, false));
      CHECK(approx_cvp(P, t, eff, true).v == oracle_cvp(P, t, 10, true));
    }
  }
  SUBCASE("n = 3, radius 4") {
    RealMatrix P = surd_2d();
    Effort eff;
    eff.enum_radius = 4;
    for (int k = 0; k < 10; ++k) {
      RealVector t{Scalar(mpq_class(num(rng), 1000)), Scalar(mpq_class(num(rng), 1000))};
      CHECK(approx_cvp(P, t, eff).v == oracle_cvp(P, t, 4, false));
    }
  }
}

TEST_CASE("claim1_vector") {
  RealMatrix P = one_sqrt2();
  Effort eff;
  eff.enum_radius = 10;

  SUBCASE("documented vector at delta = 0.2") {
    IntVec v = claim1_vector(P, Scalar(mpq_class(1, 5)), eff);
    CHECK(v == IntVec{10, -7});
  }
  SUBCASE("postconditions hold under repeated halving") {
    Scalar delta(mpq_class(1, 2));
    for (int k = 0; k < 8; ++k) {
      IntVec v = claim1_vector(P, delta, eff);
      // primitive
      CHECK(gcd_of(v) == 1);
      // parity: even entries except the last, which is 1 mod 4
      CHECK(mpz_even_p(v[0].get_mpz_t()));
      mpz_class lm = v[1] % 4;
      if (lm < 0) lm += 4;
      CHECK(lm == 1);
      // 0 < ||P v|| < delta
      Scalar nsq = norm_squared(mat_vec(P, v));
      CHECK(nsq.sign() > 0);
      CHECK(cmp(nsq, delta * delta) < 0);
      delta = delta * Scalar(mpq_class(1, 2));
    }
  }
}

TEST_CASE("validate_instance") {
  SUBCASE("n <= d rejected") {
    RealMatrix P(1, 1);
    P.at(0, 0) = Scalar(1);
    CHECK(!validate_instance(P).ok);
  }
  SUBCASE("full-rank surd instance accepted") { CHECK(validate_instance(surd_2d()).ok); }
  SUBCASE("rank-deficient rejected") {
    RealMatrix P(2, 3);
    for (size_t j = 0; j < 3; ++j) {
      P.at(0, j) = Scalar(static_cast<long>(j + 1));
      P.at(1, j) = Scalar(static_cast<long>(2 * (j + 1)));  // same line
    }
    CHECK(!validate_instance(P).ok);
  }
}

TEST_CASE("density_certificate") {
  Effort eff;
  Scalar tol(mpq_class(1, 1000));

  SUBCASE("rational rows give an exactly-integer dual") {
    RealMatrix P(1, 2);
    P.at(0, 0) = parse_scalar("1/2");
    P.at(0, 1) = parse_scalar("1/3");
    DensityVerdict v = density_certificate(P, eff, tol);
    REQUIRE(v.kind == DensityVerdict::Kind::NotDense);
    CHECK(v.exact);
    CHECK(v.w[0].equals_exact(Scalar(6)));
    CHECK(v.wTP[0].equals_exact(Scalar(3)));
    CHECK(v.wTP[1].equals_exact(Scalar(2)));
    CHECK(v.probes.empty());
  }
  SUBCASE("surd instances are dense with probe evidence") {
    DensityVerdict v = density_certificate(one_sqrt2(), eff, tol);
    REQUIRE(v.kind == DensityVerdict::Kind::Dense);
    CHECK(v.w.empty());
    CHECK(v.probes.size() == 6);  // d * 3 scales * 2 signs
    Scalar tol_sq = tol * tol;
    for (const auto& p : v.probes) {
      // evidence re-verifies
      RealVector img = mat_vec(one_sqrt2(), p.v);
      Scalar dsq = norm_squared(img - p.target);
      CHECK(cmp(dsq, tol_sq) <= 0);
      CHECK(dsq.equals_exact(p.dist_sq));
    }
  }
  SUBCASE("n <= d yields NotDense") {
    RealMatrix P(1, 1);
    P.at(0, 0) = parse_scalar("sqrt(2)");
    DensityVerdict v = density_certificate(P, eff, tol);
    REQUIRE(v.kind == DensityVerdict::Kind::NotDense);
    CHECK(v.exact);
    // w^T P = (1): exactly integer
    Scalar prod = v.w[0] * P.at(0, 0);
    CHECK(prod.equals_exact(Scalar(1)));
  }
  SUBCASE("scaled surd line: exact dual through the lattice search") {
    // P = [sqrt(2), 2*sqrt(2)]: G(P) = sqrt(2) Z is discrete
    RealMatrix P(1, 2);
    P.at(0, 0) = parse_scalar("sqrt(2)");
    P.at(0, 1) = parse_scalar("2*sqrt(2)");
    DensityVerdict v = density_certificate(P, eff, tol);
    REQUIRE(v.kind == DensityVerdict::Kind::NotDense);
    CHECK(v.exact);
    for (size_t j = 0; j < 2; ++j) {
      const SurdForm* f = v.wTP[j].form();
      REQUIRE(f);
      CHECK(f->is_rational());
      CHECK(f->rational_value().get_den() == 1);
    }
  }
}
