// SPDX-License-Identifier: Apache-2.0

#include "jumplan/interval.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

namespace jumplan {

Interval::Interval(mpfr_prec_t prec) : prec_(prec), lo_(prec), hi_(prec) {
  mpfr_set_zero(lo_.get(), 1);
  mpfr_set_zero(hi_.get(), 1);
}

Interval Interval::from_int(long x, mpfr_prec_t prec) {
  Interval r(prec);
  mpfr_set_si(r.lo(), x, MPFR_RNDD);
  mpfr_set_si(r.hi(), x, MPFR_RNDU);
  return r;
}

Interval Interval::from_mpz(const mpz_class& x, mpfr_prec_t prec) {
  Interval r(prec);
  mpfr_set_z(r.lo(), x.get_mpz_t(), MPFR_RNDD);
  mpfr_set_z(r.hi(), x.get_mpz_t(), MPFR_RNDU);
  return r;
}

Interval Interval::from_mpq(const mpq_class& x, mpfr_prec_t prec) {
  Interval r(prec);
  mpfr_set_q(r.lo(), x.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(r.hi(), x.get_mpq_t(), MPFR_RNDU);
  return r;
}

Interval Interval::sqrt_mpz(const mpz_class& x, mpfr_prec_t prec) {
  if (x < 0) throw std::invalid_argument("sqrt of negative integer");
  Interval r(prec);
  mpfr_set_z(r.lo(), x.get_mpz_t(), MPFR_RNDD);
  mpfr_sqrt(r.lo(), r.lo(), MPFR_RNDD);
  mpfr_set_z(r.hi(), x.get_mpz_t(), MPFR_RNDU);
  mpfr_sqrt(r.hi(), r.hi(), MPFR_RNDU);
  return r;
}

Interval Interval::operator-() const {
  Interval r(prec_);
  mpfr_neg(r.lo(), hi(), MPFR_RNDD);
  mpfr_neg(r.hi(), lo(), MPFR_RNDU);
  return r;
}

Interval Interval::operator+(const Interval& o) const {
  Interval r(std::max(prec_, o.prec_));
  mpfr_add(r.lo(), lo(), o.lo(), MPFR_RNDD);
  mpfr_add(r.hi(), hi(), o.hi(), MPFR_RNDU);
  return r;
}

Interval Interval::operator-(const Interval& o) const {
  Interval r(std::max(prec_, o.prec_));
  mpfr_sub(r.lo(), lo(), o.hi(), MPFR_RNDD);
  mpfr_sub(r.hi(), hi(), o.lo(), MPFR_RNDU);
  return r;
}

Interval Interval::operator*(const Interval& o) const {
  mpfr_prec_t p = std::max(prec_, o.prec_);
  Interval r(p);
  Mpfr t(p);
  bool first = true;
  const mpfr_srcptr as[2] = {lo(), hi()};
  const mpfr_srcptr bs[2] = {o.lo(), o.hi()};
  for (auto a : as) {
    for (auto b : bs) {
      mpfr_mul(t.get(), a, b, MPFR_RNDD);
      if (first || mpfr_cmp(t.get(), r.lo()) < 0) mpfr_set(r.lo(), t.get(), MPFR_RNDD);
      mpfr_mul(t.get(), a, b, MPFR_RNDU);
      if (first || mpfr_cmp(t.get(), r.hi()) > 0) mpfr_set(r.hi(), t.get(), MPFR_RNDU);
      first = false;
    }
  }
  return r;
}

Interval Interval::operator/(const Interval& o) const {
  if (o.contains_zero())
    throw PrecisionExhausted("interval division: divisor straddles zero");
  mpfr_prec_t p = std::max(prec_, o.prec_);
  Interval r(p);
  Mpfr t(p);
  bool first = true;
  const mpfr_srcptr as[2] = {lo(), hi()};
  const mpfr_srcptr bs[2] = {o.lo(), o.hi()};
  for (auto a : as) {
    for (auto b : bs) {
      mpfr_div(t.get(), a, b, MPFR_RNDD);
      if (first || mpfr_cmp(t.get(), r.lo()) < 0) mpfr_set(r.lo(), t.get(), MPFR_RNDD);
      mpfr_div(t.get(), a, b, MPFR_RNDU);
      if (first || mpfr_cmp(t.get(), r.hi()) > 0) mpfr_set(r.hi(), t.get(), MPFR_RNDU);
      first = false;
    }
  }
  return r;
}

Interval Interval::sqrt() const {
  if (mpfr_sgn(hi()) < 0)
    throw std::domain_error("sqrt of provably negative value");
  Interval r(prec_);
  if (mpfr_sgn(lo()) <= 0) {
    mpfr_set_zero(r.lo(), 1);
  } else {
    mpfr_sqrt(r.lo(), lo(), MPFR_RNDD);
  }
  mpfr_sqrt(r.hi(), hi(), MPFR_RNDU);
  return r;
}

Interval Interval::abs() const {
  Interval r(prec_);
  if (mpfr_sgn(lo()) >= 0) return *this;
  if (mpfr_sgn(hi()) <= 0) return -*this;
  // straddles zero
  mpfr_set_zero(r.lo(), 1);
  mpfr_neg(r.hi(), lo(), MPFR_RNDU);
  if (mpfr_cmp(hi(), r.hi()) > 0) mpfr_set(r.hi(), hi(), MPFR_RNDU);
  return r;
}

Interval Interval::scaled(const mpq_class& c) const {
  Interval r(prec_);
  if (sgn(c) >= 0) {
    mpfr_mul_q(r.lo(), lo(), c.get_mpq_t(), MPFR_RNDD);
    mpfr_mul_q(r.hi(), hi(), c.get_mpq_t(), MPFR_RNDU);
  } else {
    mpfr_mul_q(r.lo(), hi(), c.get_mpq_t(), MPFR_RNDD);
    mpfr_mul_q(r.hi(), lo(), c.get_mpq_t(), MPFR_RNDU);
  }
  return r;
}

bool Interval::contains_zero() const {
  return mpfr_sgn(lo()) <= 0 && mpfr_sgn(hi()) >= 0;
}

bool Interval::strictly_positive() const { return mpfr_sgn(lo()) > 0; }
bool Interval::strictly_negative() const { return mpfr_sgn(hi()) < 0; }

Mpfr Interval::magnitude_upper() const {
  Mpfr m(prec_);
  Mpfr a(prec_);
  mpfr_abs(m.get(), lo(), MPFR_RNDU);
  mpfr_abs(a.get(), hi(), MPFR_RNDU);
  if (mpfr_cmp(a.get(), m.get()) > 0) mpfr_set(m.get(), a.get(), MPFR_RNDU);
  return m;
}

Mpfr Interval::mignitude_lower() const {
  Mpfr m(prec_);
  if (contains_zero()) {
    mpfr_set_zero(m.get(), 1);
    return m;
  }
  if (mpfr_sgn(lo()) > 0) {
    mpfr_set(m.get(), lo(), MPFR_RNDD);
  } else {
    mpfr_neg(m.get(), hi(), MPFR_RNDD);
  }
  return m;
}

Mpfr Interval::width_upper() const {
  Mpfr w(prec_);
  mpfr_sub(w.get(), hi(), lo(), MPFR_RNDU);
  return w;
}

bool Interval::meets_relative_width(mpfr_prec_t bits) const {
  Mpfr w = width_upper();
  Mpfr bound(prec_);
  Mpfr mig = mignitude_lower();
  mpfr_set_ui(bound.get(), 1, MPFR_RNDD);
  if (mpfr_cmp(mig.get(), bound.get()) > 0) mpfr_set(bound.get(), mig.get(), MPFR_RNDD);
  mpfr_mul_2si(bound.get(), bound.get(), 1 - static_cast<long>(bits), MPFR_RNDD);
  return mpfr_cmp(w.get(), bound.get()) <= 0;
}

double Interval::midpoint_double() const {
  Mpfr m(prec_);
  mpfr_add(m.get(), lo(), hi(), MPFR_RNDN);
  mpfr_div_2ui(m.get(), m.get(), 1, MPFR_RNDN);
  return mpfr_get_d(m.get(), MPFR_RNDN);
}

mpq_class mpq_from_mpfr(mpfr_srcptr x) {
  if (!mpfr_number_p(x)) throw std::domain_error("mpfr value not finite");
  if (mpfr_zero_p(x)) return mpq_class(0);
  mpz_class mant;
  mpfr_exp_t e = mpfr_get_z_2exp(mant.get_mpz_t(), x);
  mpq_class q(mant);
  if (e >= 0) {
    mpz_class two_e;
    mpz_ui_pow_ui(two_e.get_mpz_t(), 2, static_cast<unsigned long>(e));
    q *= mpq_class(two_e);
  } else {
    mpz_class two_e;
    mpz_ui_pow_ui(two_e.get_mpz_t(), 2, static_cast<unsigned long>(-e));
    q /= mpq_class(two_e);
  }
  return q;
}

mpq_class Interval::midpoint_mpq() const {
  mpq_class a = mpq_from_mpfr(lo());
  mpq_class b = mpq_from_mpfr(hi());
  return (a + b) / 2;
}

std::string Interval::decimal(size_t digits) const {
  Mpfr m(prec_);
  mpfr_add(m.get(), lo(), hi(), MPFR_RNDN);
  mpfr_div_2ui(m.get(), m.get(), 1, MPFR_RNDN);
  char fmt[32];
  std::snprintf(fmt, sizeof fmt, "%%.%zuRg", digits);
  char* s = nullptr;
  mpfr_asprintf(&s, fmt, m.get());
  std::string out(s);
  mpfr_free_str(s);
  return out;
}

Interval Interval::rounded_to(mpfr_prec_t prec) const {
  Interval r(prec);
  mpfr_set(r.lo(), lo(), MPFR_RNDD);
  mpfr_set(r.hi(), hi(), MPFR_RNDU);
  return r;
}

bool Interval::contains(const Interval& inner) const {
  return mpfr_cmp(lo(), inner.lo()) <= 0 && mpfr_cmp(hi(), inner.hi()) >= 0;
}

}  // namespace jumplan
