// SPDX-License-Identifier: Apache-2.0

#include "jumplan/scalar.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace jumplan {

struct Scalar::Node {
  enum class Kind { Literal, Sqrt, Neg, Add, Sub, Mul, Div };
  Kind kind = Kind::Literal;
  std::optional<SurdForm> form;  // set iff the subtree is in the fragment
  std::shared_ptr<const Node> a, b;
};

namespace {

using Node = Scalar::Node;
using Kind = Node::Kind;

std::shared_ptr<const Node> make_literal(SurdForm f) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Literal;
  n->form = std::move(f);
  return n;
}

std::shared_ptr<const Node> make_op(Kind k, std::shared_ptr<const Node> a,
                                    std::shared_ptr<const Node> b) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

// Bottom-up interval evaluation at a fixed working precision, memoized over
// the shared DAG. Division by a straddling interval throws PrecisionExhausted,
// which the caller turns into a precision escalation.
Interval eval_node(const Node* n, mpfr_prec_t prec,
                   std::map<const Node*, Interval>& memo) {
  auto it = memo.find(n);
  if (it != memo.end()) return it->second;
  Interval out(prec);
  switch (n->kind) {
    case Kind::Literal:
      out = n->form->enclosure(prec);
      break;
    case Kind::Sqrt:
      out = eval_node(n->a.get(), prec, memo).sqrt();
      break;
    case Kind::Neg:
      out = -eval_node(n->a.get(), prec, memo);
      break;
    case Kind::Add:
      out = eval_node(n->a.get(), prec, memo) + eval_node(n->b.get(), prec, memo);
      break;
    case Kind::Sub:
      out = eval_node(n->a.get(), prec, memo) - eval_node(n->b.get(), prec, memo);
      break;
    case Kind::Mul:
      out = eval_node(n->a.get(), prec, memo) * eval_node(n->b.get(), prec, memo);
      break;
    case Kind::Div:
      out = eval_node(n->a.get(), prec, memo) / eval_node(n->b.get(), prec, memo);
      break;
  }
  memo.emplace(n, out);
  return out;
}

Interval eval_raw(const Node* n, mpfr_prec_t prec) {
  std::map<const Node*, Interval> memo;
  return eval_node(n, prec, memo);
}

}  // namespace

Scalar::Scalar(SurdForm f) : n_(make_literal(std::move(f))) {}

const SurdForm* Scalar::form() const {
  return n_->form ? &*n_->form : nullptr;
}

Scalar Scalar::sqrt(const Scalar& x) {
  if (const SurdForm* f = x.form()) {
    if (f->is_rational()) {
      mpq_class q = f->rational_value();
      if (q < 0) throw std::domain_error("sqrt of negative value");
      return Scalar(SurdForm::sqrt_rational(q));
    }
    SurdForm root;
    if (f->try_sqrt(root)) return Scalar(root);
    if (f->sign() < 0) throw std::domain_error("sqrt of negative value");
  }
  return Scalar(make_op(Kind::Sqrt, x.n_, nullptr));
}

Scalar Scalar::operator-() const {
  if (const SurdForm* f = form()) return Scalar(-*f);
  return Scalar(make_op(Kind::Neg, n_, nullptr));
}

Scalar Scalar::operator+(const Scalar& o) const {
  if (form() && o.form()) return Scalar(*form() + *o.form());
  return Scalar(make_op(Kind::Add, n_, o.n_));
}

Scalar Scalar::operator-(const Scalar& o) const {
  if (form() && o.form()) return Scalar(*form() - *o.form());
  return Scalar(make_op(Kind::Sub, n_, o.n_));
}

Scalar Scalar::operator*(const Scalar& o) const {
  if (form() && o.form()) return Scalar(*form() * *o.form());
  return Scalar(make_op(Kind::Mul, n_, o.n_));
}

Scalar Scalar::operator/(const Scalar& o) const {
  if (const SurdForm* g = o.form()) {
    if (g->is_zero()) throw std::domain_error("division by exact zero");
    if (form()) return Scalar(*form() / *g);
  }
  return Scalar(make_op(Kind::Div, n_, o.n_));
}

Interval Scalar::eval_interval(long bits) const {
  if (bits < 16) bits = 16;
  long work = bits + 16;
  for (int round = 0; round < 24; ++round) {
    try {
      Interval out = eval_raw(n_.get(), work);
      if (out.meets_relative_width(bits)) return out.rounded_to(bits + 8);
    } catch (const PrecisionExhausted&) {
      // divisor straddled zero at this working precision; refine
    }
    work = work * 2 + 32;
    if (work > kZeroTestMaxBits * 4)
      throw PrecisionExhausted("eval_interval: requested width unreachable");
  }
  throw PrecisionExhausted("eval_interval: requested width unreachable");
}

int Scalar::sign(long max_bits) const {
  if (const SurdForm* f = form()) return f->sign();
  for (long p = 64; p <= max_bits; p = p * 2 + 16) {
    try {
      Interval iv = eval_raw(n_.get(), p);
      if (iv.strictly_positive()) return 1;
      if (iv.strictly_negative()) return -1;
    } catch (const PrecisionExhausted&) {
    }
  }
  throw PrecisionExhausted("sign: interval straddles zero at max precision");
}

bool Scalar::equals_exact(const Scalar& o) const {
  const SurdForm* f = form();
  const SurdForm* g = o.form();
  if (!f || !g) throw std::logic_error("equals_exact requires fragment values");
  return *f == *g;
}

std::string Scalar::to_expression() const {
  const SurdForm* f = form();
  if (!f) throw std::logic_error("to_expression requires a fragment value");
  return f->to_expression();
}

std::string Scalar::to_decimal(long bits, size_t digits) const {
  return eval_interval(bits).decimal(digits);
}

int cmp(const Scalar& a, const Scalar& b, long max_bits) {
  return (a - b).sign(max_bits);
}

bool abs_leq(const Scalar& a, const Scalar& bound, long max_bits) {
  return cmp(a, bound, max_bits) <= 0 && cmp(-a, bound, max_bits) <= 0;
}

// --- parser -----------------------------------------------------------

namespace {

struct Parser {
  const std::string& s;
  size_t pos = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at position " + std::to_string(pos) + " in \"" + s + "\"");
  }

  Scalar parse_expr() {
    Scalar v = parse_term();
    for (;;) {
      skip_ws();
      if (eat('+')) {
        v = v + parse_term();
      } else if (eat('-')) {
        v = v - parse_term();
      } else {
        return v;
      }
    }
  }

  Scalar parse_term() {
    Scalar v = parse_factor();
    for (;;) {
      skip_ws();
      if (eat('*')) {
        v = v * parse_factor();
      } else if (eat('/')) {
        v = v / parse_factor();
      } else {
        return v;
      }
    }
  }

  Scalar parse_factor() {
    skip_ws();
    if (eat('-')) return -parse_factor();
    return parse_primary();
  }

  Scalar parse_primary() {
    skip_ws();
    if (pos >= s.size()) fail("unexpected end of expression");
    if (eat('(')) {
      Scalar v = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return v;
    }
    if (s.compare(pos, 5, "sqrt(") == 0) {
      pos += 5;
      skip_ws();
      mpz_class k = parse_integer();
      if (!eat(')')) fail("expected ')' after sqrt argument");
      if (k <= 0) fail("sqrt argument must be a positive integer");
      return Scalar(SurdForm::sqrt_int(k));
    }
    if (std::isdigit(static_cast<unsigned char>(s[pos])))
      return Scalar(parse_integer());
    fail("expected number, sqrt(...) or '('");
  }

  mpz_class parse_integer() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == start) fail("expected integer");
    return mpz_class(s.substr(start, pos - start));
  }
};

}  // namespace

Scalar parse_scalar(const std::string& text) {
  Parser p(text);
  Scalar v = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing characters");
  return v;
}

// --- vectors and matrices ----------------------------------------------

RealVector RealMatrix::col(size_t j) const {
  RealVector v(rows);
  for (size_t i = 0; i < rows; ++i) v[i] = at(i, j);
  return v;
}

void RealMatrix::set_col(size_t j, const RealVector& v) {
  for (size_t i = 0; i < rows; ++i) at(i, j) = v[i];
}

bool RealMatrix::all_fragment() const {
  return std::all_of(a.begin(), a.end(), [](const Scalar& s) { return s.form(); });
}

Scalar dot(const RealVector& a, const RealVector& b) {
  Scalar s;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Scalar norm_squared(const RealVector& v) { return dot(v, v); }

RealVector operator-(const RealVector& a, const RealVector& b) {
  RealVector r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

RealVector operator+(const RealVector& a, const RealVector& b) {
  RealVector r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

RealVector scale(const Scalar& c, const RealVector& v) {
  RealVector r(v.size());
  for (size_t i = 0; i < v.size(); ++i) r[i] = c * v[i];
  return r;
}

RealVector mat_vec(const RealMatrix& P, const std::vector<mpz_class>& v) {
  RealVector r(P.rows);
  for (size_t i = 0; i < P.rows; ++i) {
    Scalar s;
    for (size_t j = 0; j < P.cols; ++j) s += P.at(i, j) * Scalar(v[j]);
    r[i] = s;
  }
  return r;
}

// --- Householder --------------------------------------------------------

RealVector Householder::apply(const RealVector& x) const {
  if (identity) return x;
  Scalar t = (Scalar(2) * dot(u, x)) / u_dot_u;
  RealVector r(x.size());
  for (size_t i = 0; i < x.size(); ++i) r[i] = x[i] - t * u[i];
  return r;
}

RealMatrix Householder::to_matrix() const {
  RealMatrix m(dim, dim);
  for (size_t j = 0; j < dim; ++j) {
    RealVector e(dim, Scalar(0));
    e[j] = Scalar(1);
    RealVector c = apply(e);
    m.set_col(j, c);
  }
  return m;
}

std::pair<Householder, Scalar> householder_to_last_axis(const RealVector& x,
                                                        long precision) {
  size_t d = x.size();
  if (d == 0) throw std::invalid_argument("householder: empty vector");
  Scalar nsq = norm_squared(x);
  if (nsq.sign() == 0)
    throw std::invalid_argument("householder: zero vector");
  Scalar norm = Scalar::sqrt(nsq);

  // Exactly aligned with +f_d: identity (decidable for fragment inputs; for
  // others a bounded probe suffices — a wrong "not aligned" answer only means
  // the generic formula runs, which is still correct unless u is exactly 0,
  // and that case resurfaces as PrecisionExhausted downstream).
  bool aligned = true;
  for (size_t i = 0; i + 1 < d && aligned; ++i) {
    try {
      aligned = x[i].sign(x[i].form() ? kZeroTestMaxBits : 512) == 0;
    } catch (const PrecisionExhausted&) {
      aligned = false;
    }
  }
  if (aligned) {
    int s;
    try {
      s = x[d - 1].sign();
    } catch (const PrecisionExhausted&) {
      s = 0;  // fall through to the generic reflection
    }
    if (s > 0) {
      Householder h;
      h.dim = d;
      h.identity = true;
      return {h, x[d - 1]};
    }
    if (s < 0) {
      // reflection negating the last coordinate: u = f_d
      Householder h;
      h.dim = d;
      h.identity = false;
      h.u.assign(d, Scalar(0));
      h.u[d - 1] = Scalar(1);
      h.u_dot_u = Scalar(1);
      return {h, -x[d - 1]};
    }
  }

  Householder h;
  h.dim = d;
  h.identity = false;
  h.u = x;
  h.u[d - 1] = h.u[d - 1] - norm;
  h.u_dot_u = norm_squared(h.u);
  (void)precision;
  return {h, norm};
}

// --- exact fragment linear algebra --------------------------------------

namespace {

std::vector<std::vector<SurdForm>> to_forms(const RealMatrix& m) {
  std::vector<std::vector<SurdForm>> f(m.rows, std::vector<SurdForm>(m.cols));
  for (size_t i = 0; i < m.rows; ++i)
    for (size_t j = 0; j < m.cols; ++j) {
      const SurdForm* p = m.at(i, j).form();
      if (!p) throw std::logic_error("exact linear algebra requires fragment entries");
      f[i][j] = *p;
    }
  return f;
}

// Row echelon over the exact field; returns pivot column per row and the
// transform L (rows of L express the echelon rows in terms of input rows).
struct Echelon {
  std::vector<std::vector<SurdForm>> mat;   // echelon form
  std::vector<std::vector<SurdForm>> left;  // left transform
  std::vector<size_t> pivot_cols;
};

Echelon echelon_form(std::vector<std::vector<SurdForm>> f) {
  size_t rows = f.size();
  size_t cols = rows ? f[0].size() : 0;
  Echelon e;
  e.left.assign(rows, std::vector<SurdForm>(rows));
  for (size_t i = 0; i < rows; ++i) e.left[i][i] = SurdForm(1);
  size_t r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    size_t piv = r;
    while (piv < rows && f[piv][c].is_zero()) ++piv;
    if (piv == rows) continue;
    std::swap(f[piv], f[r]);
    std::swap(e.left[piv], e.left[r]);
    for (size_t i = r + 1; i < rows; ++i) {
      if (f[i][c].is_zero()) continue;
      SurdForm q = f[i][c] / f[r][c];
      for (size_t j = c; j < cols; ++j) f[i][j] -= q * f[r][j];
      for (size_t j = 0; j < rows; ++j) e.left[i][j] -= q * e.left[r][j];
    }
    e.pivot_cols.push_back(c);
    ++r;
  }
  e.mat = std::move(f);
  return e;
}

}  // namespace

size_t exact_rank(const RealMatrix& m) {
  return echelon_form(to_forms(m)).pivot_cols.size();
}

RealVector exact_solve(const RealMatrix& A, const RealVector& b) {
  if (A.rows != A.cols || b.size() != A.rows)
    throw std::invalid_argument("exact_solve: shape mismatch");
  size_t n = A.rows;
  auto f = to_forms(A);
  std::vector<SurdForm> rhs(n);
  for (size_t i = 0; i < n; ++i) {
    const SurdForm* p = b[i].form();
    if (!p) throw std::logic_error("exact_solve requires fragment entries");
    rhs[i] = *p;
  }
  // forward elimination with partial (first-nonzero) pivoting
  for (size_t c = 0; c < n; ++c) {
    size_t piv = c;
    while (piv < n && f[piv][c].is_zero()) ++piv;
    if (piv == n) throw std::domain_error("exact_solve: singular matrix");
    std::swap(f[piv], f[c]);
    std::swap(rhs[piv], rhs[c]);
    for (size_t i = c + 1; i < n; ++i) {
      if (f[i][c].is_zero()) continue;
      SurdForm q = f[i][c] / f[c][c];
      for (size_t j = c; j < n; ++j) f[i][j] -= q * f[c][j];
      rhs[i] -= q * rhs[c];
    }
  }
  RealVector x(n);
  for (size_t ii = n; ii-- > 0;) {
    SurdForm acc = rhs[ii];
    for (size_t j = ii + 1; j < n; ++j) {
      const SurdForm* xf = x[j].form();
      acc -= f[ii][j] * *xf;
    }
    x[ii] = Scalar(acc / f[ii][ii]);
  }
  return x;
}

std::optional<RealVector> exact_left_nullvector(const RealMatrix& m) {
  Echelon e = echelon_form(to_forms(m));
  if (e.pivot_cols.size() == m.rows) return std::nullopt;
  // first zero row of the echelon form; its left-transform row is a witness
  size_t zr = e.pivot_cols.size();
  RealVector w(m.rows);
  for (size_t j = 0; j < m.rows; ++j) w[j] = Scalar(e.left[zr][j]);
  return w;
}

std::vector<RealVector> exact_right_nullspace(const RealMatrix& m) {
  Echelon e = echelon_form(to_forms(m));
  size_t n = m.cols;
  std::vector<bool> is_pivot(n, false);
  for (size_t c : e.pivot_cols) is_pivot[c] = true;
  std::vector<RealVector> basis;
  for (size_t f = 0; f < n; ++f) {
    if (is_pivot[f]) continue;
    // back-substitute: x_f = 1, other free vars 0
    std::vector<SurdForm> x(n);
    x[f] = SurdForm(1);
    for (size_t r = e.pivot_cols.size(); r-- > 0;) {
      size_t pc = e.pivot_cols[r];
      SurdForm acc;
      for (size_t j = pc + 1; j < n; ++j) acc += e.mat[r][j] * x[j];
      x[pc] = -acc / e.mat[r][pc];
    }
    RealVector v(n);
    for (size_t j = 0; j < n; ++j) v[j] = Scalar(x[j]);
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace jumplan
