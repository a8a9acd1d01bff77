// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace jumplan {

using IntVec = std::vector<mpz_class>;

/// Dense matrix of arbitrary-precision integers, row-major.
class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), e_(rows * cols) {}

  static IntMatrix identity(size_t n);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  mpz_class& at(size_t i, size_t j) { return e_[i * cols_ + j]; }
  const mpz_class& at(size_t i, size_t j) const { return e_[i * cols_ + j]; }

  IntMatrix operator*(const IntMatrix& o) const;
  IntVec operator*(const IntVec& v) const;
  IntMatrix transposed() const;
  bool operator==(const IntMatrix& o) const;
  bool operator!=(const IntMatrix& o) const { return !(*this == o); }
  bool is_identity() const;

  /// Exact determinant (fraction-free Bareiss elimination).
  mpz_class det() const;

  /// Inverse of a matrix with det = ±1; throws if entries would not be
  /// integral (i.e. |det| != 1).
  IntMatrix inverse_unimodular() const;

  /// Solves M x = b exactly over the rationals and requires an integer
  /// solution (det = ±1 callers).
  IntVec solve_integer(const IntVec& b) const;

  std::string to_string() const;

 private:
  size_t rows_ = 0, cols_ = 0;
  std::vector<mpz_class> e_;
};

/// Identity with entry (row, col) replaced by value (+2 or -2), row != col.
/// Indices are 0-based.
struct StepDescriptor {
  int n = 0;
  int row = 0;
  int col = 0;
  int value = 2;  // +2 or -2

  StepDescriptor negated() const { return {n, row, col, -value}; }
  StepDescriptor transposed() const { return {n, col, row, value}; }
  StepDescriptor embedded(int new_n, int offset) const {
    return {new_n, row + offset, col + offset, value};
  }
  bool operator==(const StepDescriptor& o) const {
    return n == o.n && row == o.row && col == o.col && value == o.value;
  }
};

using StepList = std::vector<StepDescriptor>;

/// Elementary involutions. First(i): particle i jumps over the stationary
/// particle 0 (identity with diagonal entry i negated). Second(i, j):
/// particle i jumps over particle j (First(i) with entry (j, i) set to 2).
/// i and j are particle indices in 1..n.
struct ElementaryDescriptor {
  enum class Type { First, Second };
  Type type = Type::First;
  int i = 1;
  int j = 0;  // unused for First
};

IntMatrix step_matrix(const StepDescriptor& s);
IntMatrix elementary_matrix(const ElementaryDescriptor& e, size_t n);

/// Lemma 1(iii) characterization: det = 1, even off-diagonal entries,
/// diagonal entries congruent to 1 mod 4.
bool is_good(const IntMatrix& m);

/// In-place row update M <- step * M (row[s.row] += s.value * row[s.col]).
void apply_step_left(IntMatrix& m, const StepDescriptor& s);
void apply_step_left(IntVec& v, const StepDescriptor& s);
/// In-place column update M <- M * step (col[s.col] += s.value * col[s.row]).
void apply_step_right(IntMatrix& m, const StepDescriptor& s);

/// mat(steps[0]) * mat(steps[1]) * ... — the "configuration application
/// order" product: the first step acts first when applied on the right of a
/// configuration matrix.
IntMatrix product_in_order(const StepList& steps, size_t n);

StepList negated_each(const StepList& steps);

/// Absorbs steps emitted by reduce/normalize/triangularize cores. Runs of a
/// repeated step are reported grouped; when out is null only the (possibly
/// astronomically large) count is kept. Materializing past limit throws
/// std::length_error.
struct StepSink {
  StepList* out = nullptr;
  mpz_class count{0};
  size_t limit = static_cast<size_t>(-1);

  void emit_run(const StepDescriptor& s, const mpz_class& reps) {
    if (reps <= 0) {
      if (reps < 0) throw std::logic_error("StepSink: negative run");
      return;
    }
    count += reps;
    if (out) {
      if (count > static_cast<unsigned long>(limit))
        throw std::length_error("step budget exceeded");
      size_t r = mpz_class(reps).get_ui();
      for (size_t k = 0; k < r; ++k) out->push_back(s);
    }
  }
};

struct ReduceResult {
  StepList steps;  // application order: steps[0] is applied to v first
  IntVec reduced;
};

/// Lemma 1(i)/(ii): applies norm-decreasing steps until every entry lies in
/// {0, +g, -g} with g = gcd of the input. Pair choice: largest single-step
/// norm decrease, ties broken by smallest (pivot index, changed index); the
/// chosen pair is then stepped to the nearest even multiple (ties toward the
/// smaller step count). Every emitted step strictly decreases the norm.
ReduceResult reduce_vector(const IntVec& v);
/// Core with a sink; returns the reduced vector.
IntVec reduce_vector_core(IntVec v, StepSink& sink);

struct NormalizeResult {
  IntMatrix A;     // good, A v = e_n
  StepList steps;  // application order (left action), product reversed = A
};

/// Claim 2: v primitive, all entries even except the last which is 1 mod 4;
/// returns good A with A v = e_n exactly.
NormalizeResult normalize_to_en(const IntVec& v);
/// Core with a sink (steps in application order, left action).
IntMatrix normalize_to_en_core(const IntVec& v, StepSink& sink);

/// Lemma 1(iii) "if" direction: ordered step factorization of a good matrix;
/// product_in_order(result) == m exactly. Throws if !is_good(m).
StepList factor_good(const IntMatrix& m);

struct TriangularizeResult {
  IntMatrix A0;    // good
  StepList steps;  // application order (left action), product reversed = A0
};

/// Lemma gen: Y is n x d (n >= d) with odd diagonal and even below-diagonal
/// entries; returns good A0 with all below-diagonal entries of A0*Y zero.
/// An upper-triangular input with odd diagonal yields the identity.
TriangularizeResult triangularize(const IntMatrix& y);
/// Core used by the planner: emits into sink, returns A0 (and A0*Y via out).
/// size_reduce_above additionally reduces above-diagonal entries against the
/// pivots, which keeps the planner's rounded targets small.
IntMatrix triangularize_core(IntMatrix y, StepSink& sink, IntMatrix* reduced_out,
                             bool size_reduce_above = false);

/// Lemma obs2: a step splits into two elementary involutions, returned in
/// configuration application order (first element acts first).
std::pair<ElementaryDescriptor, ElementaryDescriptor> step_to_elementary(
    const StepDescriptor& s);

mpz_class gcd_of(const IntVec& v);

}  // namespace jumplan
