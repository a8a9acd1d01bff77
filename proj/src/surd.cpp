// SPDX-License-Identifier: Apache-2.0

#include "jumplan/surd.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <sstream>

namespace jumplan {

namespace {

constexpr unsigned long kTrialBound = 1u << 20;  // 1048576

// Smallest prime factors of canonicalized radicands, cached. Radicands are
// certified factorable at canonicalization time, so lookups here succeed.
std::map<mpz_class, mpz_class>& spf_cache() {
  static std::map<mpz_class, mpz_class> cache;
  return cache;
}
std::mutex& spf_mutex() {
  static std::mutex m;
  return m;
}

mpz_class smallest_prime_factor(const mpz_class& r) {
  {
    std::lock_guard<std::mutex> lk(spf_mutex());
    auto it = spf_cache().find(r);
    if (it != spf_cache().end()) return it->second;
  }
  mpz_class p;
  if (mpz_divisible_ui_p(r.get_mpz_t(), 2)) {
    p = 2;
  } else {
    unsigned long d = 3;
    for (; d <= kTrialBound; d += 2) {
      if (mpz_divisible_ui_p(r.get_mpz_t(), d)) break;
    }
    if (d <= kTrialBound) {
      p = d;
    } else {
      // squarefree_decompose certified r prime in this regime
      p = r;
    }
  }
  std::lock_guard<std::mutex> lk(spf_mutex());
  spf_cache().emplace(r, p);
  return p;
}

}  // namespace

void squarefree_decompose(const mpz_class& k, mpz_class& outer, mpz_class& radicand) {
  if (k <= 0) throw std::invalid_argument("radicand must be positive");
  mpz_class m = k;
  outer = 1;
  radicand = 1;
  auto strip = [&](unsigned long p) {
    unsigned count = 0;
    while (mpz_divisible_ui_p(m.get_mpz_t(), p)) {
      mpz_divexact_ui(m.get_mpz_t(), m.get_mpz_t(), p);
      ++count;
    }
    if (count == 0) return;
    if (count >= 2) {
      mpz_class pw;
      mpz_ui_pow_ui(pw.get_mpz_t(), p, count / 2);
      outer *= pw;
    }
    if (count % 2 == 1) radicand *= p;
  };
  strip(2);
  for (unsigned long d = 3; d <= kTrialBound && m > 1; d += 2) {
    mpz_class dd(static_cast<long>(d));
    if (dd * dd > m) break;
    strip(d);
  }
  if (m > 1) {
    // Leftover cofactor: every prime factor exceeds kTrialBound.
    if (mpz_perfect_square_p(m.get_mpz_t())) {
      mpz_class s;
      mpz_sqrt(s.get_mpz_t(), m.get_mpz_t());
      outer *= s;
    } else {
      // At most two prime factors below kTrialBound^3, and not p^2,
      // so the cofactor is squarefree. Beyond that we cannot certify.
      mpz_class bound;
      mpz_ui_pow_ui(bound.get_mpz_t(), kTrialBound, 3);
      if (m >= bound)
        throw std::invalid_argument("radicand too large to canonicalize: " + mpz_class(k).get_str());
      radicand *= m;
    }
  }
}

SurdForm::SurdForm(long x) {
  if (x != 0) terms_.push_back({mpz_class(1), mpq_class(x)});
}

SurdForm::SurdForm(const mpz_class& x) {
  if (x != 0) terms_.push_back({mpz_class(1), mpq_class(x)});
}

SurdForm::SurdForm(const mpq_class& x) {
  if (x != 0) terms_.push_back({mpz_class(1), x});
}

SurdForm SurdForm::sqrt_int(const mpz_class& k) {
  mpz_class outer, rad;
  squarefree_decompose(k, outer, rad);
  SurdForm r;
  r.terms_.push_back({rad, mpq_class(outer)});
  return r;
}

SurdForm SurdForm::sqrt_rational(const mpq_class& q) {
  if (q < 0) throw std::domain_error("sqrt of negative rational");
  if (q == 0) return SurdForm();
  // sqrt(a/b) = sqrt(a*b)/b
  mpz_class ab = q.get_num() * q.get_den();
  SurdForm r = sqrt_int(ab);
  for (auto& t : r.terms_) t.coeff /= mpq_class(q.get_den());
  return r;
}

void SurdForm::normalize() {
  std::sort(terms_.begin(), terms_.end(),
            [](const Term& a, const Term& b) { return a.radicand < b.radicand; });
  std::vector<Term> out;
  for (auto& t : terms_) {
    if (!out.empty() && out.back().radicand == t.radicand) {
      out.back().coeff += t.coeff;
      if (out.back().coeff == 0) out.pop_back();
    } else if (t.coeff != 0) {
      out.push_back(std::move(t));
    }
  }
  terms_ = std::move(out);
}

SurdForm SurdForm::operator-() const {
  SurdForm r = *this;
  for (auto& t : r.terms_) t.coeff = -t.coeff;
  return r;
}

SurdForm SurdForm::operator+(const SurdForm& o) const {
  SurdForm r;
  r.terms_.reserve(terms_.size() + o.terms_.size());
  // merge two sorted term lists
  size_t i = 0, j = 0;
  while (i < terms_.size() && j < o.terms_.size()) {
    int c = cmp(terms_[i].radicand, o.terms_[j].radicand);
    if (c < 0) {
      r.terms_.push_back(terms_[i++]);
    } else if (c > 0) {
      r.terms_.push_back(o.terms_[j++]);
    } else {
      mpq_class s = terms_[i].coeff + o.terms_[j].coeff;
      if (s != 0) r.terms_.push_back({terms_[i].radicand, s});
      ++i;
      ++j;
    }
  }
  while (i < terms_.size()) r.terms_.push_back(terms_[i++]);
  while (j < o.terms_.size()) r.terms_.push_back(o.terms_[j++]);
  return r;
}

SurdForm SurdForm::operator-(const SurdForm& o) const { return *this + (-o); }

SurdForm SurdForm::operator*(const SurdForm& o) const {
  SurdForm r;
  for (const auto& a : terms_) {
    for (const auto& b : o.terms_) {
      mpz_class g = gcd(a.radicand, b.radicand);
      mpz_class rad = (a.radicand / g) * (b.radicand / g);
      mpq_class c = a.coeff * b.coeff * mpq_class(g);
      r.terms_.push_back({rad, c});
    }
  }
  r.normalize();
  return r;
}

bool SurdForm::is_rational() const {
  return terms_.empty() || (terms_.size() == 1 && terms_[0].radicand == 1);
}

mpq_class SurdForm::rational_value() const {
  if (terms_.empty()) return mpq_class(0);
  return terms_[0].coeff;
}

SurdForm SurdForm::inverse() const {
  if (is_zero()) throw std::domain_error("division by exact zero");
  if (is_rational()) {
    SurdForm r;
    r.terms_.push_back({mpz_class(1), mpq_class(1) / terms_[0].coeff});
    return r;
  }
  // Split off one prime p from the radicand set: x = A + sqrt(p)*B with A, B
  // in the subfield whose radicands are coprime to p; then
  // 1/x = (A - sqrt(p)B) / (A^2 - p B^2) and the denominator avoids p.
  mpz_class p;
  for (const auto& t : terms_) {
    if (t.radicand != 1) {
      p = smallest_prime_factor(t.radicand);
      break;
    }
  }
  SurdForm A, B;
  for (const auto& t : terms_) {
    if (mpz_divisible_p(t.radicand.get_mpz_t(), p.get_mpz_t())) {
      B.terms_.push_back({t.radicand / p, t.coeff});
    } else {
      A.terms_.push_back({t.radicand, t.coeff});
    }
  }
  A.normalize();
  B.normalize();
  SurdForm denom = A * A - SurdForm(p) * B * B;
  // zero would contradict linear independence of sqrt(p) over the subfield
  SurdForm dinv = denom.inverse();
  SurdForm sqrt_p;
  sqrt_p.terms_.push_back({p, mpq_class(1)});
  return (A - sqrt_p * B) * dinv;
}

SurdForm SurdForm::operator/(const SurdForm& o) const { return *this * o.inverse(); }

int SurdForm::sign() const {
  if (terms_.empty()) return 0;
  if (is_rational()) return sgn(terms_[0].coeff);
  // all-same-sign shortcut
  bool all_pos = true, all_neg = true;
  for (const auto& t : terms_) {
    if (t.coeff > 0) all_neg = false;
    if (t.coeff < 0) all_pos = false;
  }
  if (all_pos) return 1;
  if (all_neg) return -1;
  // Nonzero by normal form, so refinement terminates.
  for (mpfr_prec_t p = 64;; p *= 2) {
    Interval iv = enclosure(p);
    if (iv.strictly_positive()) return 1;
    if (iv.strictly_negative()) return -1;
  }
}

bool SurdForm::operator==(const SurdForm& o) const {
  if (terms_.size() != o.terms_.size()) return false;
  for (size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].radicand != o.terms_[i].radicand) return false;
    if (terms_[i].coeff != o.terms_[i].coeff) return false;
  }
  return true;
}

Interval SurdForm::enclosure(mpfr_prec_t prec) const {
  mpfr_prec_t work = prec + 16;
  Interval acc(work);
  for (const auto& t : terms_) {
    if (t.radicand == 1) {
      acc = acc + Interval::from_mpq(t.coeff, work);
    } else {
      acc = acc + Interval::sqrt_mpz(t.radicand, work).scaled(t.coeff);
    }
  }
  return acc;
}

std::string SurdForm::to_expression() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& t : terms_) {
    mpq_class c = t.coeff;
    if (first) {
      if (c < 0) {
        os << "-";
        c = -c;
      }
    } else {
      os << (c < 0 ? " - " : " + ");
      if (c < 0) c = -c;
    }
    first = false;
    if (t.radicand == 1) {
      os << c.get_str();
    } else if (c == 1) {
      os << "sqrt(" << t.radicand.get_str() << ")";
    } else if (c.get_den() == 1) {
      os << c.get_num().get_str() << "*sqrt(" << t.radicand.get_str() << ")";
    } else {
      // a/b * sqrt(r)
      os << c.get_num().get_str() << "*sqrt(" << t.radicand.get_str() << ")/"
         << c.get_den().get_str();
    }
  }
  return os.str();
}

bool SurdForm::try_sqrt(SurdForm& out) const {
  if (is_zero()) {
    out = SurdForm();
    return true;
  }
  if (terms_.size() != 1) return false;
  const Term& t = terms_[0];
  if (t.coeff < 0) return false;
  // value = c * sqrt(r); its square root is c^(1/2) * r^(1/4) — only usable
  // when r == 1, i.e. the value is a nonnegative rational.
  if (t.radicand != 1) return false;
  out = sqrt_rational(t.coeff);
  return true;
}

}  // namespace jumplan
