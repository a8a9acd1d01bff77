// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <stdexcept>
#include <string>
#include <utility>

namespace jumplan {

/// Raised when a quantity cannot be decided at the configured precision
/// ceiling (e.g. a sign test whose interval still straddles zero).
class PrecisionExhausted : public std::runtime_error {
 public:
  explicit PrecisionExhausted(const std::string& what)
      : std::runtime_error(what) {}
};

/// Thin RAII wrapper around one mpfr_t.
class Mpfr {
 public:
  explicit Mpfr(mpfr_prec_t prec) { mpfr_init2(v_, prec); }
  Mpfr(const Mpfr& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  Mpfr(Mpfr&& o) noexcept {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_swap(v_, o.v_);
  }
  Mpfr& operator=(const Mpfr& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  Mpfr& operator=(Mpfr&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~Mpfr() { mpfr_clear(v_); }

  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

 private:
  mpfr_t v_;
};

/// Closed interval [lo, hi] with mpfr endpoints and outward rounding.
/// Every operation returns an interval guaranteed to contain the exact
/// result. Endpoints share one working precision, fixed at construction.
class Interval {
 public:
  explicit Interval(mpfr_prec_t prec = 64);

  static Interval from_int(long x, mpfr_prec_t prec);
  static Interval from_mpz(const mpz_class& x, mpfr_prec_t prec);
  static Interval from_mpq(const mpq_class& x, mpfr_prec_t prec);
  /// sqrt of a nonnegative integer.
  static Interval sqrt_mpz(const mpz_class& x, mpfr_prec_t prec);

  mpfr_prec_t precision() const { return prec_; }

  Interval operator-() const;
  Interval operator+(const Interval& o) const;
  Interval operator-(const Interval& o) const;
  Interval operator*(const Interval& o) const;
  /// Throws PrecisionExhausted if the divisor straddles zero.
  Interval operator/(const Interval& o) const;
  /// Clamps a slightly-negative lower endpoint to 0; throws if hi < 0.
  Interval sqrt() const;
  Interval abs() const;
  /// Scale by an exact rational.
  Interval scaled(const mpq_class& c) const;

  bool contains_zero() const;
  bool strictly_positive() const;  // lo > 0
  bool strictly_negative() const;  // hi < 0
  /// max(|lo|, |hi|) as an upper bound on |value|, rounded up.
  Mpfr magnitude_upper() const;
  /// Lower bound on |value|; zero if the interval straddles 0.
  Mpfr mignitude_lower() const;
  /// hi - lo rounded up.
  Mpfr width_upper() const;

  /// True iff width <= 2^(1-bits) * max(1, mignitude). This implies the
  /// eval_interval contract width <= 2^(1-bits) * max(1, |value|).
  bool meets_relative_width(mpfr_prec_t bits) const;

  double midpoint_double() const;
  /// Midpoint as an exact rational (endpoints are dyadic).
  mpq_class midpoint_mpq() const;
  /// Decimal rendering of the midpoint with the given significant digits.
  std::string decimal(size_t digits = 20) const;

  mpfr_srcptr lo() const { return lo_.get(); }
  mpfr_srcptr hi() const { return hi_.get(); }
  mpfr_ptr lo() { return lo_.get(); }
  mpfr_ptr hi() { return hi_.get(); }

  /// Round this interval's endpoints outward to a coarser precision.
  Interval rounded_to(mpfr_prec_t prec) const;

  /// True if [lo,hi] of `inner` is contained in this interval.
  bool contains(const Interval& inner) const;

 private:
  mpfr_prec_t prec_;
  Mpfr lo_, hi_;
};

mpq_class mpq_from_mpfr(mpfr_srcptr x);

}  // namespace jumplan
