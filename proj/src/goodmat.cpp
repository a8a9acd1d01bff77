// SPDX-License-Identifier: Apache-2.0

#include "jumplan/goodmat.hpp"

#include <functional>
#include <sstream>
#include <stdexcept>

namespace jumplan {

namespace {

// Nearest integer to num/den, ties toward zero. den != 0.
mpz_class nearest_quotient(const mpz_class& num_in, const mpz_class& den_in) {
  mpz_class num = num_in, den = den_in;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  mpz_class q, r;
  mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  mpz_class twice_r = 2 * r;
  if (twice_r > den) return q + 1;
  if (twice_r < den) return q;
  // exact half: pick the candidate with smaller absolute value
  return q >= 0 ? q : q + 1;
}

}  // namespace

IntMatrix IntMatrix::identity(size_t n) {
  IntMatrix m(n, n);
  for (size_t i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

IntMatrix IntMatrix::operator*(const IntMatrix& o) const {
  if (cols_ != o.rows_) throw std::invalid_argument("IntMatrix: shape mismatch");
  IntMatrix r(rows_, o.cols_);
  mpz_class t;
  for (size_t i = 0; i < rows_; ++i)
    for (size_t k = 0; k < cols_; ++k) {
      const mpz_class& aik = at(i, k);
      if (aik == 0) continue;
      for (size_t j = 0; j < o.cols_; ++j) {
        t = aik * o.at(k, j);
        r.at(i, j) += t;
      }
    }
  return r;
}

IntVec IntMatrix::operator*(const IntVec& v) const {
  if (cols_ != v.size()) throw std::invalid_argument("IntMatrix: shape mismatch");
  IntVec r(rows_);
  for (size_t i = 0; i < rows_; ++i)
    for (size_t j = 0; j < cols_; ++j) r[i] += at(i, j) * v[j];
  return r;
}

IntMatrix IntMatrix::transposed() const {
  IntMatrix r(cols_, rows_);
  for (size_t i = 0; i < rows_; ++i)
    for (size_t j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
  return r;
}

bool IntMatrix::operator==(const IntMatrix& o) const {
  return rows_ == o.rows_ && cols_ == o.cols_ && e_ == o.e_;
}

bool IntMatrix::is_identity() const {
  if (rows_ != cols_) return false;
  for (size_t i = 0; i < rows_; ++i)
    for (size_t j = 0; j < cols_; ++j)
      if (at(i, j) != (i == j ? 1 : 0)) return false;
  return true;
}

mpz_class IntMatrix::det() const {
  if (rows_ != cols_) throw std::invalid_argument("det of non-square matrix");
  size_t n = rows_;
  if (n == 0) return 1;
  IntMatrix a = *this;
  mpz_class prev = 1;
  int sign = 1;
  for (size_t k = 0; k + 1 < n; ++k) {
    if (a.at(k, k) == 0) {
      size_t p = k + 1;
      while (p < n && a.at(p, k) == 0) ++p;
      if (p == n) return 0;
      for (size_t j = 0; j < n; ++j) std::swap(a.at(k, j), a.at(p, j));
      sign = -sign;
    }
    for (size_t i = k + 1; i < n; ++i)
      for (size_t j = k + 1; j < n; ++j) {
        mpz_class t = a.at(i, j) * a.at(k, k) - a.at(i, k) * a.at(k, j);
        mpz_divexact(a.at(i, j).get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
    prev = a.at(k, k);
  }
  return sign > 0 ? a.at(n - 1, n - 1) : mpz_class(-a.at(n - 1, n - 1));
}

IntMatrix IntMatrix::inverse_unimodular() const {
  if (rows_ != cols_) throw std::invalid_argument("inverse of non-square matrix");
  size_t n = rows_;
  // rational Gaussian elimination on [A | I]
  std::vector<std::vector<mpq_class>> w(n, std::vector<mpq_class>(2 * n));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) w[i][j] = mpq_class(at(i, j));
    w[i][n + i] = 1;
  }
  for (size_t c = 0; c < n; ++c) {
    size_t piv = c;
    while (piv < n && w[piv][c] == 0) ++piv;
    if (piv == n) throw std::domain_error("inverse_unimodular: singular matrix");
    std::swap(w[piv], w[c]);
    mpq_class inv = 1 / w[c][c];
    for (size_t j = 0; j < 2 * n; ++j) w[c][j] *= inv;
    for (size_t i = 0; i < n; ++i) {
      if (i == c || w[i][c] == 0) continue;
      mpq_class f = w[i][c];
      for (size_t j = c; j < 2 * n; ++j) w[i][j] -= f * w[c][j];
    }
  }
  IntMatrix r(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      mpq_class q = w[i][n + j];
      if (q.get_den() != 1)
        throw std::domain_error("inverse_unimodular: non-integer inverse");
      r.at(i, j) = q.get_num();
    }
  return r;
}

IntVec IntMatrix::solve_integer(const IntVec& b) const {
  if (rows_ != cols_ || b.size() != rows_)
    throw std::invalid_argument("solve_integer: shape mismatch");
  size_t n = rows_;
  std::vector<std::vector<mpq_class>> w(n, std::vector<mpq_class>(n + 1));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) w[i][j] = mpq_class(at(i, j));
    w[i][n] = mpq_class(b[i]);
  }
  for (size_t c = 0; c < n; ++c) {
    size_t piv = c;
    while (piv < n && w[piv][c] == 0) ++piv;
    if (piv == n) throw std::domain_error("solve_integer: singular matrix");
    std::swap(w[piv], w[c]);
    for (size_t i = c + 1; i < n; ++i) {
      if (w[i][c] == 0) continue;
      mpq_class f = w[i][c] / w[c][c];
      for (size_t j = c; j <= n; ++j) w[i][j] -= f * w[c][j];
    }
  }
  IntVec x(n);
  for (size_t ii = n; ii-- > 0;) {
    mpq_class acc = w[ii][n];
    for (size_t j = ii + 1; j < n; ++j) acc -= w[ii][j] * mpq_class(x[j]);
    acc /= w[ii][ii];
    if (acc.get_den() != 1)
      throw std::domain_error("solve_integer: non-integer solution");
    x[ii] = acc.get_num();
  }
  return x;
}

std::string IntMatrix::to_string() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < rows_; ++i) {
    os << (i ? ", [" : "[");
    for (size_t j = 0; j < cols_; ++j) os << (j ? "," : "") << at(i, j).get_str();
    os << "]";
  }
  os << "]";
  return os.str();
}

IntMatrix step_matrix(const StepDescriptor& s) {
  if (s.row == s.col) throw std::invalid_argument("step: row == col");
  if (s.row < 0 || s.col < 0 || s.row >= s.n || s.col >= s.n)
    throw std::invalid_argument("step: index out of range");
  if (s.value != 2 && s.value != -2)
    throw std::invalid_argument("step: value must be +2 or -2");
  IntMatrix m = IntMatrix::identity(s.n);
  m.at(s.row, s.col) = s.value;
  return m;
}

IntMatrix elementary_matrix(const ElementaryDescriptor& e, size_t n) {
  if (e.i < 1 || static_cast<size_t>(e.i) > n)
    throw std::invalid_argument("elementary: index out of range");
  IntMatrix m = IntMatrix::identity(n);
  m.at(e.i - 1, e.i - 1) = -1;
  if (e.type == ElementaryDescriptor::Type::Second) {
    if (e.j < 1 || static_cast<size_t>(e.j) > n || e.j == e.i)
      throw std::invalid_argument("elementary: bad second index");
    m.at(e.j - 1, e.i - 1) = 2;
  }
  return m;
}

bool is_good(const IntMatrix& m) {
  if (m.rows() != m.cols()) return false;
  size_t n = m.rows();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      if (i == j) {
        mpz_class r = m.at(i, i) % 4;
        if (r < 0) r += 4;
        if (r != 1) return false;
      } else if (mpz_odd_p(m.at(i, j).get_mpz_t())) {
        return false;
      }
    }
  return m.det() == 1;
}

void apply_step_left(IntMatrix& m, const StepDescriptor& s) {
  for (size_t j = 0; j < m.cols(); ++j)
    m.at(s.row, j) += s.value * m.at(s.col, j);
}

void apply_step_left(IntVec& v, const StepDescriptor& s) {
  v[s.row] += s.value * v[s.col];
}

void apply_step_right(IntMatrix& m, const StepDescriptor& s) {
  for (size_t i = 0; i < m.rows(); ++i)
    m.at(i, s.col) += s.value * m.at(i, s.row);
}

IntMatrix product_in_order(const StepList& steps, size_t n) {
  IntMatrix m = IntMatrix::identity(n);
  // group runs of identical steps into one column update
  size_t i = 0;
  while (i < steps.size()) {
    size_t j = i;
    while (j < steps.size() && steps[j] == steps[i]) ++j;
    const StepDescriptor& s = steps[i];
    mpz_class f = mpz_class(s.value) * static_cast<long>(j - i);
    for (size_t r = 0; r < m.rows(); ++r) m.at(r, s.col) += f * m.at(r, s.row);
    i = j;
  }
  return m;
}

StepList negated_each(const StepList& steps) {
  StepList out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.negated());
  return out;
}

mpz_class gcd_of(const IntVec& v) {
  mpz_class g = 0;
  for (const auto& x : v) g = gcd(g, x);
  return g;
}

namespace {

// Shared reduction loop (Lemma 1(i)/(ii)). Reports each chosen jump as a
// grouped run so callers can mirror it on matrices in O(1) row operations.
void reduce_grouped(IntVec& v,
                    const std::function<void(const StepDescriptor&, const mpz_class&)>& on_run) {
  const size_t n = v.size();
  for (;;) {
    // pick (changed i, pivot j) maximizing |v_j| * (|v_i| - |v_j|),
    // ties by smallest (j, i)
    bool found = false;
    size_t bi = 0, bj = 0;
    mpz_class best_score;
    for (size_t j = 0; j < n; ++j) {
      if (v[j] == 0) continue;
      mpz_class aj = abs(v[j]);
      for (size_t i = 0; i < n; ++i) {
        if (i == j) continue;
        mpz_class ai = abs(v[i]);
        if (ai <= aj) continue;
        mpz_class score = aj * (ai - aj);
        if (!found || score > best_score) {
          found = true;
          best_score = score;
          bi = i;
          bj = j;
        }
      }
    }
    if (!found) return;
    mpz_class t = nearest_quotient(v[bi], 2 * v[bj]);
    int value = t > 0 ? -2 : 2;
    StepDescriptor s{static_cast<int>(n), static_cast<int>(bi),
                     static_cast<int>(bj), value};
    v[bi] -= 2 * t * v[bj];
    on_run(s, abs(t));
  }
}

}  // namespace

IntVec reduce_vector_core(IntVec v, StepSink& sink) {
  reduce_grouped(v, [&](const StepDescriptor& s, const mpz_class& reps) {
    sink.emit_run(s, reps);
  });
  return v;
}

ReduceResult reduce_vector(const IntVec& v) {
  bool all_zero = true;
  for (const auto& x : v)
    if (x != 0) all_zero = false;
  if (v.empty() || all_zero)
    throw std::invalid_argument("reduce_vector: zero vector");
  ReduceResult r;
  StepSink sink{&r.steps, 0};
  r.reduced = reduce_vector_core(v, sink);
  return r;
}

IntMatrix normalize_to_en_core(const IntVec& v, StepSink& sink) {
  size_t n = v.size();
  if (n == 0) throw std::invalid_argument("normalize_to_en: empty vector");
  if (gcd_of(v) != 1)
    throw std::invalid_argument("normalize_to_en: vector not primitive");
  for (size_t i = 0; i + 1 < n; ++i)
    if (mpz_odd_p(v[i].get_mpz_t()))
      throw std::invalid_argument("normalize_to_en: entry " + std::to_string(i) +
                                  " must be even");
  mpz_class last_mod = v[n - 1] % 4;
  if (last_mod < 0) last_mod += 4;
  if (last_mod != 1)
    throw std::invalid_argument("normalize_to_en: last entry must be 1 mod 4");

  // Mirror each grouped jump on an identity to accumulate A.
  IntMatrix A = IntMatrix::identity(n);
  IntVec work = v;
  reduce_grouped(work, [&](const StepDescriptor& s, const mpz_class& reps) {
    mpz_class f = mpz_class(s.value) * reps;
    for (size_t c = 0; c < n; ++c) A.at(s.row, c) += f * A.at(s.col, c);
    sink.emit_run(s, reps);
  });
  for (size_t k = 0; k < n; ++k) {
    if (work[k] != (k + 1 == n ? 1 : 0))
      throw std::logic_error("normalize_to_en: reduction did not reach e_n");
  }
  return A;
}

NormalizeResult normalize_to_en(const IntVec& v) {
  NormalizeResult out;
  StepSink sink{&out.steps, 0};
  out.A = normalize_to_en_core(v, sink);
  return out;
}

namespace {

// Left-applied step list (application order) reducing a good matrix to the
// identity, following the Lemma 1(iii) proof.
StepList identity_reduction_steps(IntMatrix m) {
  size_t n = m.rows();
  StepList applied;
  if (n <= 1) return applied;

  // reduce last column to e_n, mirroring the grouped jumps on m
  IntVec v(n);
  for (size_t i = 0; i < n; ++i) v[i] = m.at(i, n - 1);
  reduce_grouped(v, [&](const StepDescriptor& s, const mpz_class& reps) {
    mpz_class f = mpz_class(s.value) * reps;
    for (size_t c = 0; c < n; ++c) m.at(s.row, c) += f * m.at(s.col, c);
    size_t r = reps.get_ui();
    for (size_t k = 0; k < r; ++k) applied.push_back(s);
  });
  for (size_t i = 0; i < n; ++i)
    if (v[i] != (i + 1 == n ? 1 : 0))
      throw std::logic_error("factor_good: last column did not reduce to e_n");

  // recurse on the leading block: left-multiplying by f(B^-1)
  IntMatrix b(n - 1, n - 1);
  for (size_t i = 0; i + 1 < n; ++i)
    for (size_t j = 0; j + 1 < n; ++j) b.at(i, j) = m.at(i, j);
  StepList inner = identity_reduction_steps(std::move(b));
  for (auto s : inner) {
    s.n = static_cast<int>(n);  // extension by a trailing identity row/column
    mpz_class f = s.value;
    for (size_t c = 0; c < n; ++c) m.at(s.row, c) += f * m.at(s.col, c);
    applied.push_back(s);
  }

  // clear the even entries in the last row
  for (size_t i = 0; i + 1 < n; ++i) {
    mpz_class e = m.at(n - 1, i);
    if (e == 0) continue;
    if (mpz_odd_p(e.get_mpz_t()))
      throw std::logic_error("factor_good: odd residue in last row");
    mpz_class t = e / 2;
    int value = t > 0 ? -2 : 2;
    StepDescriptor s{static_cast<int>(n), static_cast<int>(n - 1),
                     static_cast<int>(i), value};
    size_t reps = mpz_class(abs(t)).get_ui();
    mpz_class f = mpz_class(value) * static_cast<long>(reps);
    for (size_t c = 0; c < n; ++c) m.at(s.row, c) += f * m.at(s.col, c);
    for (size_t k = 0; k < reps; ++k) applied.push_back(s);
  }
  if (!m.is_identity())
    throw std::logic_error("factor_good: reduction did not reach identity");
  return applied;
}

}  // namespace

StepList factor_good(const IntMatrix& m) {
  if (!is_good(m)) throw std::invalid_argument("factor_good: matrix is not good");
  // L_k ... L_1 M = I, so M = inv(L_1) inv(L_2) ... inv(L_k): negate each
  // applied step, keeping the order.
  return negated_each(identity_reduction_steps(m));
}

IntMatrix triangularize_core(IntMatrix y, StepSink& sink, IntMatrix* reduced_out,
                             bool size_reduce_above) {
  size_t n = y.rows(), d = y.cols();
  IntMatrix a0 = IntMatrix::identity(n);

  auto row_op = [&](size_t dst, size_t src, const mpz_class& t) {
    // dst += 2t * src on both T and A0
    if (t == 0) return;
    int value = t > 0 ? 2 : -2;
    mpz_class f = 2 * t;
    for (size_t j = 0; j < d; ++j) y.at(dst, j) += f * y.at(src, j);
    for (size_t j = 0; j < n; ++j) a0.at(dst, j) += f * a0.at(src, j);
    StepDescriptor s{static_cast<int>(n), static_cast<int>(dst),
                     static_cast<int>(src), value};
    sink.emit_run(s, abs(t));
  };

  for (size_t c = 0; c < d; ++c) {
    // gcd-reduce column c over the active rows c..n-1
    for (;;) {
      bool found = false;
      size_t bi = 0, bj = 0;
      mpz_class best_score;
      for (size_t j = c; j < n; ++j) {
        if (y.at(j, c) == 0) continue;
        mpz_class aj = abs(y.at(j, c));
        for (size_t i = c; i < n; ++i) {
          if (i == j) continue;
          mpz_class ai = abs(y.at(i, c));
          if (ai <= aj) continue;
          mpz_class score = aj * (ai - aj);
          if (!found || score > best_score) {
            found = true;
            best_score = score;
            bi = i;
            bj = j;
          }
        }
      }
      if (!found) break;
      mpz_class t = nearest_quotient(y.at(bi, c), 2 * y.at(bj, c));
      row_op(bi, bj, -t);
    }
    // parity forces: below-diagonal entries became 0, pivot at (c, c) is odd
    for (size_t i = c + 1; i < n; ++i)
      if (y.at(i, c) != 0)
        throw std::logic_error("triangularize: below-diagonal residue");
    if (mpz_even_p(y.at(c, c).get_mpz_t()))
      throw std::logic_error("triangularize: even pivot");
    if (size_reduce_above) {
      for (size_t i = 0; i < c; ++i) {
        mpz_class t = nearest_quotient(y.at(i, c), 2 * y.at(c, c));
        row_op(i, c, -t);
      }
    }
  }
  if (reduced_out) *reduced_out = y;
  return a0;
}

TriangularizeResult triangularize(const IntMatrix& y) {
  size_t n = y.rows(), d = y.cols();
  if (n < d) throw std::invalid_argument("triangularize: need n >= d");
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) {
      if (i == j && mpz_even_p(y.at(i, j).get_mpz_t()))
        throw std::invalid_argument("triangularize: diagonal entry must be odd");
      if (i > j && mpz_odd_p(y.at(i, j).get_mpz_t()))
        throw std::invalid_argument("triangularize: below-diagonal entry must be even");
    }
  TriangularizeResult out;
  StepSink sink{&out.steps, 0};
  out.A0 = triangularize_core(y, sink, nullptr);
  return out;
}

std::pair<ElementaryDescriptor, ElementaryDescriptor> step_to_elementary(
    const StepDescriptor& s) {
  if (s.row == s.col || s.value * s.value != 4)
    throw std::invalid_argument("step_to_elementary: invalid step");
  ElementaryDescriptor first{ElementaryDescriptor::Type::First, s.col + 1, 0};
  ElementaryDescriptor second{ElementaryDescriptor::Type::Second, s.col + 1,
                              s.row + 1};
  if (s.value == -2) return {second, first};  // M = A_ij A_i
  return {first, second};                     // M' = A_i A_ij
}

}  // namespace jumplan
