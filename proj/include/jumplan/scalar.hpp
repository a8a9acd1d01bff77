// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jumplan/interval.hpp"
#include "jumplan/surd.hpp"

namespace jumplan {

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

constexpr long kDefaultPrecision = 128;
constexpr long kZeroTestMaxBits = 1 << 14;

/// Exact real scalar. Values expressible with integer radicals (the whole
/// expression grammar) are held in quadratic-surd normal form and all tests
/// on them are exact. sqrt of a non-rational value yields an expression node
/// evaluated by directed-rounding intervals at any requested precision.
/// Immutable and freely shareable between threads.
class Scalar {
 public:
  Scalar() : Scalar(SurdForm()) {}
  Scalar(long v) : Scalar(SurdForm(v)) {}  // NOLINT(google-explicit-constructor)
  explicit Scalar(const mpz_class& v) : Scalar(SurdForm(v)) {}
  explicit Scalar(const mpq_class& v) : Scalar(SurdForm(v)) {}
  explicit Scalar(SurdForm f);

  static Scalar sqrt(const Scalar& x);

  Scalar operator-() const;
  Scalar operator+(const Scalar& o) const;
  Scalar operator-(const Scalar& o) const;
  Scalar operator*(const Scalar& o) const;
  /// Throws std::domain_error when the divisor is exactly zero (decided in
  /// normal form); a non-fragment divisor that cannot be separated from zero
  /// surfaces later as PrecisionExhausted during evaluation.
  Scalar operator/(const Scalar& o) const;

  Scalar& operator+=(const Scalar& o) { return *this = *this + o; }
  Scalar& operator-=(const Scalar& o) { return *this = *this - o; }
  Scalar& operator*=(const Scalar& o) { return *this = *this * o; }

  /// Normal form when the value lies in the surd fragment, else nullptr.
  const SurdForm* form() const;

  /// Interval of relative width 2^(1-bits) (see meets_relative_width),
  /// guaranteed to contain the exact value.
  Interval eval_interval(long bits) const;

  /// Exact for fragment values. Otherwise interval refinement up to
  /// max_bits; throws PrecisionExhausted if the sign cannot be decided.
  int sign(long max_bits = kZeroTestMaxBits) const;
  bool is_zero(long max_bits = kZeroTestMaxBits) const { return sign(max_bits) == 0; }

  bool equals_exact(const Scalar& o) const;  // fragment-only; throws otherwise

  std::string to_expression() const;  // fragment-only; throws otherwise
  std::string to_decimal(long bits, size_t digits = 20) const;

  struct Node;

 private:
  std::shared_ptr<const Node> n_;
  explicit Scalar(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
};

/// cmp(a, b) = sign of a - b.
int cmp(const Scalar& a, const Scalar& b, long max_bits = kZeroTestMaxBits);
/// |a| <= bound, decided exactly for fragment values.
bool abs_leq(const Scalar& a, const Scalar& bound, long max_bits = kZeroTestMaxBits);

/// Parses the expression grammar:
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | primary
///   primary:= integer | "sqrt(" posint ")" | '(' expr ')'
Scalar parse_scalar(const std::string& text);

using RealVector = std::vector<Scalar>;

struct RealMatrix {
  size_t rows = 0, cols = 0;
  std::vector<Scalar> a;  // row-major

  RealMatrix() = default;
  RealMatrix(size_t r, size_t c) : rows(r), cols(c), a(r * c) {}

  Scalar& at(size_t i, size_t j) { return a[i * cols + j]; }
  const Scalar& at(size_t i, size_t j) const { return a[i * cols + j]; }
  RealVector col(size_t j) const;
  void set_col(size_t j, const RealVector& v);
  bool all_fragment() const;
};

Scalar dot(const RealVector& a, const RealVector& b);
Scalar norm_squared(const RealVector& v);
RealVector operator-(const RealVector& a, const RealVector& b);
RealVector operator+(const RealVector& a, const RealVector& b);
RealVector scale(const Scalar& c, const RealVector& v);

/// P * v for an integer vector v.
RealVector mat_vec(const RealMatrix& P, const std::vector<mpz_class>& v);

/// Reflection v -> v - 2 (u.v / u.u) u; identity when `identity` is set.
/// The normal u is stored unnormalized so application needs no square root.
struct Householder {
  size_t dim = 0;
  bool identity = true;
  RealVector u;
  Scalar u_dot_u;

  RealVector apply(const RealVector& x) const;
  RealMatrix to_matrix() const;
};

/// Orthogonal map O with O*x = eps*f_d, eps = +||x|| > 0.
/// Throws PrecisionExhausted when x cannot be separated from 0.
std::pair<Householder, Scalar> householder_to_last_axis(const RealVector& x,
                                                        long precision);

// --- exact linear algebra over the surd fragment (throws on non-fragment) ---

size_t exact_rank(const RealMatrix& m);
/// Solves A x = b for square nonsingular A.
RealVector exact_solve(const RealMatrix& A, const RealVector& b);
/// A nonzero w with w^T M = 0, if the rows of M are linearly dependent /
/// M has fewer independent columns than rows; nullopt when M has full row rank.
std::optional<RealVector> exact_left_nullvector(const RealMatrix& m);
/// Basis of {x : M x = 0}; empty when M has full column rank.
std::vector<RealVector> exact_right_nullspace(const RealMatrix& m);

}  // namespace jumplan
