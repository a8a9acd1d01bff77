// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gmpxx.h>

#include <string>
#include <vector>

#include "jumplan/interval.hpp"

namespace jumplan {

/// Exact element of the multiquadratic field generated by square roots of
/// positive integers: a sum of rational coefficients times sqrt(r) for
/// distinct squarefree radicands r (r == 1 carries the rational part).
/// This is the normal form against which exact zero tests are decided.
class SurdForm {
 public:
  struct Term {
    mpz_class radicand;  // squarefree, >= 1
    mpq_class coeff;     // nonzero
  };

  SurdForm() = default;
  SurdForm(long x);  // NOLINT(google-explicit-constructor)
  explicit SurdForm(const mpz_class& x);
  explicit SurdForm(const mpq_class& x);

  /// sqrt(k) for a positive integer k, canonicalized: sqrt(12) -> 2*sqrt(3).
  static SurdForm sqrt_int(const mpz_class& k);
  /// sqrt(q) for a nonnegative rational: sqrt(a/b) = sqrt(a*b)/b.
  static SurdForm sqrt_rational(const mpq_class& q);

  SurdForm operator-() const;
  SurdForm operator+(const SurdForm& o) const;
  SurdForm operator-(const SurdForm& o) const;
  SurdForm operator*(const SurdForm& o) const;
  SurdForm operator/(const SurdForm& o) const;  // throws on exact zero divisor
  SurdForm inverse() const;

  SurdForm& operator+=(const SurdForm& o) { return *this = *this + o; }
  SurdForm& operator-=(const SurdForm& o) { return *this = *this - o; }
  SurdForm& operator*=(const SurdForm& o) { return *this = *this * o; }

  bool is_zero() const { return terms_.empty(); }
  bool is_rational() const;
  /// Rational value; only valid when is_rational().
  mpq_class rational_value() const;
  /// Exact sign in {-1, 0, +1}; always terminates.
  int sign() const;
  bool operator==(const SurdForm& o) const;
  bool operator!=(const SurdForm& o) const { return !(*this == o); }

  Interval enclosure(mpfr_prec_t prec) const;

  /// Canonical rendering in the expression grammar, e.g. "3/2 + 2*sqrt(5)".
  std::string to_expression() const;

  const std::vector<Term>& terms() const { return terms_; }

  /// If the value is a perfect square of a field element of the simple
  /// form a*sqrt(r) (covers rationals and single-term surds), returns the
  /// nonnegative root; otherwise returns false.
  bool try_sqrt(SurdForm& out) const;

 private:
  // sorted by radicand, no zero coefficients
  std::vector<Term> terms_;

  void normalize();
  friend SurdForm mul_term(const SurdForm& f, const mpz_class& rad,
                           const mpq_class& c);
};

/// k = s^2 * r with r squarefree; throws if k cannot be certified
/// squarefree-decomposed (prime factors beyond the trial bound).
void squarefree_decompose(const mpz_class& k, mpz_class& outer, mpz_class& radicand);

}  // namespace jumplan
