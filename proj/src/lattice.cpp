// SPDX-License-Identifier: Apache-2.0

#include "jumplan/lattice.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

namespace jumplan {

namespace {

mpz_class round_mpq(const mpq_class& q) {
  // nearest integer, ties toward +infinity (floor(q + 1/2))
  mpq_class t = q + mpq_class(1, 2);
  mpz_class r;
  mpz_fdiv_q(r.get_mpz_t(), t.get_num().get_mpz_t(), t.get_den().get_mpz_t());
  return r;
}

mpq_class rationalize(const Scalar& s, long prec) {
  if (const SurdForm* f = s.form(); f && f->is_rational()) return f->rational_value();
  return s.eval_interval(prec).midpoint_mpq();
}

mpq_class dot_q(const std::vector<mpq_class>& a, const std::vector<mpq_class>& b) {
  mpq_class s;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

mpq_class dot_zq(const IntVec& a, const std::vector<mpq_class>& b) {
  mpq_class s;
  for (size_t i = 0; i < a.size(); ++i) s += mpq_class(a[i]) * b[i];
  return s;
}

mpz_class dot_zz(const IntVec& a, const IntVec& b) {
  mpz_class s;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// --- exact integer LLL with transform tracking (Cohen, Alg. 2.6.3) -------

struct Lll {
  std::vector<IntVec> b;  // lattice basis columns, dim N
  std::vector<IntVec> u;  // transform columns, dim m
  std::vector<std::vector<mpq_class>> mu;
  std::vector<mpq_class> B;  // squared GS norms
  mpq_class delta{99, 100};

  void gram_schmidt() {
    size_t m = b.size();
    size_t N = b.empty() ? 0 : b[0].size();
    std::vector<std::vector<mpq_class>> bstar(m, std::vector<mpq_class>(N));
    mu.assign(m, std::vector<mpq_class>(m));
    B.assign(m, mpq_class());
    for (size_t i = 0; i < m; ++i) {
      for (size_t k = 0; k < N; ++k) bstar[i][k] = mpq_class(b[i][k]);
      for (size_t j = 0; j < i; ++j) {
        mu[i][j] = dot_zq(b[i], bstar[j]) / B[j];
        for (size_t k = 0; k < N; ++k) bstar[i][k] -= mu[i][j] * bstar[j][k];
      }
      B[i] = dot_q(bstar[i], bstar[i]);
      if (B[i] == 0) throw PrecisionExhausted("lll: dependent basis columns");
    }
  }

  void size_reduce(size_t k, size_t l) {
    mpz_class q = round_mpq(mu[k][l]);
    if (q == 0) return;
    for (size_t t = 0; t < b[k].size(); ++t) b[k][t] -= q * b[l][t];
    for (size_t t = 0; t < u[k].size(); ++t) u[k][t] -= q * u[l][t];
    for (size_t j = 0; j < l; ++j) mu[k][j] -= mpq_class(q) * mu[l][j];
    mu[k][l] -= mpq_class(q);
  }

  void swap_step(size_t k) {
    std::swap(b[k - 1], b[k]);
    std::swap(u[k - 1], u[k]);
    mpq_class mu_old = mu[k][k - 1];
    mpq_class Bnew = B[k] + mu_old * mu_old * B[k - 1];
    mpq_class mu_new = mu_old * B[k - 1] / Bnew;
    mpq_class Bk_new = B[k - 1] * B[k] / Bnew;
    for (size_t j = 0; j + 1 < k; ++j) std::swap(mu[k - 1][j], mu[k][j]);
    for (size_t i = k + 1; i < b.size(); ++i) {
      mpq_class t = mu[i][k];
      mu[i][k] = mu[i][k - 1] - mu_old * t;
      mu[i][k - 1] = t + mu_new * mu[i][k];
    }
    B[k - 1] = Bnew;
    B[k] = Bk_new;
    mu[k][k - 1] = mu_new;
  }

  void run() {
    size_t m = b.size();
    gram_schmidt();
    if (m <= 1) return;
    size_t k = 1;
    while (k < m) {
      size_reduce(k, k - 1);
      if (B[k] < (delta - mu[k][k - 1] * mu[k][k - 1]) * B[k - 1]) {
        swap_step(k);
        k = k > 1 ? k - 1 : 1;
      } else {
        for (size_t l = k - 1; l-- > 0;) size_reduce(k, l);
        ++k;
      }
    }
  }
};

// Gram-Schmidt data of the final basis, for Babai nearest plane.
struct GsData {
  std::vector<std::vector<mpq_class>> bstar;
  std::vector<mpq_class> B;
};

GsData gram_schmidt_of(const std::vector<IntVec>& b) {
  GsData g;
  size_t m = b.size();
  size_t N = b.empty() ? 0 : b[0].size();
  g.bstar.assign(m, std::vector<mpq_class>(N));
  g.B.assign(m, mpq_class());
  for (size_t i = 0; i < m; ++i) {
    for (size_t k = 0; k < N; ++k) g.bstar[i][k] = mpq_class(b[i][k]);
    for (size_t j = 0; j < i; ++j) {
      mpq_class mu = dot_q(g.bstar[i], g.bstar[j]) / g.B[j];
      for (size_t k = 0; k < N; ++k) g.bstar[i][k] -= mu * g.bstar[j][k];
    }
    g.B[i] = dot_q(g.bstar[i], g.bstar[i]);
  }
  return g;
}

// Babai nearest-plane coefficients of target t in the (reduced) basis b.
IntVec babai_coefficients(const std::vector<IntVec>& b, const GsData& g,
                          std::vector<mpq_class> t) {
  size_t m = b.size();
  IntVec a(m);
  for (size_t i = m; i-- > 0;) {
    mpq_class c = dot_q(t, g.bstar[i]) / g.B[i];
    a[i] = round_mpq(c);
    for (size_t k = 0; k < t.size(); ++k) t[k] -= mpq_class(a[i]) * mpq_class(b[i][k]);
  }
  return a;
}

// --- candidate ranking ----------------------------------------------------

int cmp_scalar_soft(const Scalar& a, const Scalar& b) {
  try {
    return cmp(a, b, 2048);
  } catch (const PrecisionExhausted&) {
    return 0;  // indistinguishable; defer to the next tie-break key
  }
}

struct Ranked {
  IntVec v;
  Scalar dist_sq;
  mpz_class vnorm_sq;
};

bool lex_less(const IntVec& a, const IntVec& b) {
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

bool ranked_less(const Ranked& a, const Ranked& b) {
  int c = cmp_scalar_soft(a.dist_sq, b.dist_sq);
  if (c != 0) return c < 0;
  if (a.vnorm_sq != b.vnorm_sq) return a.vnorm_sq < b.vnorm_sq;
  return lex_less(a.v, b.v);
}

Scalar dist_sq_exact(const RealMatrix& P, const RealVector& t, const IntVec& v) {
  RealVector img = mat_vec(P, v);
  return norm_squared(img - t);
}

bool is_exact_hit(const Scalar& dist_sq) {
  try {
    return dist_sq.sign(1024) == 0;
  } catch (const PrecisionExhausted&) {
    return false;  // cannot certify a hit; keep the candidate
  }
}

struct FloatView {
  std::vector<double> Pd, td;
  size_t d, n;
  double scale = 1.0;

  FloatView(const RealMatrix& P, const RealVector& t) : d(P.rows), n(P.cols) {
    Pd.resize(d * n);
    td.resize(d);
    for (size_t i = 0; i < d; ++i) {
      for (size_t j = 0; j < n; ++j) {
        Pd[i * n + j] = P.at(i, j).eval_interval(64).midpoint_double();
        scale = std::max(scale, std::fabs(Pd[i * n + j]));
      }
      td[i] = t[i].eval_interval(64).midpoint_double();
      scale = std::max(scale, std::fabs(td[i]));
    }
  }

  double dist2_long(const std::vector<long>& v) const {
    double s = 0;
    for (size_t i = 0; i < d; ++i) {
      double acc = -td[i];
      for (size_t j = 0; j < n; ++j) acc += Pd[i * n + j] * static_cast<double>(v[j]);
      s += acc * acc;
    }
    return s;
  }

  double margin(double best) const {
    return 1e-9 * (1.0 + best) + 1e-12 * scale * scale;
  }
};

// Interval prefilter: squared distances with certified lower/upper bounds.
// Candidate coefficients can be huge (embedding offsets), where a plain
// double prefilter loses to catastrophic cancellation.
struct IntervalView {
  std::vector<Interval> Pe, te;
  size_t d, n;
  mpfr_prec_t prec;

  IntervalView(const RealMatrix& P, const RealVector& t, long bits)
      : d(P.rows), n(P.cols), prec(static_cast<mpfr_prec_t>(bits)) {
    Pe.reserve(d * n);
    te.reserve(d);
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < n; ++j) Pe.push_back(P.at(i, j).eval_interval(bits));
    for (size_t i = 0; i < d; ++i) te.push_back(t[i].eval_interval(bits));
  }

  Interval dist2(const IntVec& v) const {
    Interval s(prec);
    for (size_t i = 0; i < d; ++i) {
      Interval acc = -te[i];
      for (size_t j = 0; j < n; ++j) {
        if (v[j] == 0) continue;
        acc = acc + Pe[i * n + j].scaled(mpq_class(v[j]));
      }
      s = s + acc * acc;
    }
    return s;
  }
};

// Exact selection over an interval-prefiltered candidate set. keep_within_dd
// extends the shortlist to everything (possibly) below that squared distance,
// so callers can pick shorter coefficient vectors among qualifying hits.
CvpResult rank_candidates(const RealMatrix& P, const RealVector& t,
                          std::vector<IntVec> cands, bool exclude_exact_image,
                          bool exhausted_box, double keep_within_dd) {
  IntervalView iv(P, t, 128);
  size_t m = cands.size();
  std::vector<double> lo(m), hi(m);
  std::vector<bool> dead(m, false);
  for (size_t i = 0; i < m; ++i) {
    Interval ds = iv.dist2(cands[i]);
    lo[i] = mpfr_get_d(ds.lo(), MPFR_RNDD);
    hi[i] = mpfr_get_d(ds.hi(), MPFR_RNDU);
    // exclusion must happen before minimizer pruning, or an excluded exact
    // hit suppresses every real candidate
    if (exclude_exact_image && lo[i] <= 0 && is_exact_hit(dist_sq_exact(P, t, cands[i])))
      dead[i] = true;
  }
  double min_hi = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < m; ++i)
    if (!dead[i]) min_hi = std::min(min_hi, hi[i]);

  // potential minimizers: lo_i <= min_hi (anything else is provably beaten)
  std::vector<size_t> kept;
  {
    std::vector<size_t> pot;
    for (size_t i = 0; i < m; ++i)
      if (!dead[i] && lo[i] <= min_hi) pot.push_back(i);
    std::stable_sort(pot.begin(), pot.end(), [&](size_t a, size_t b) {
      if (hi[a] != hi[b]) return hi[a] < hi[b];
      return lex_less(cands[a], cands[b]);
    });
    if (pot.size() > 256) pot.resize(256);
    kept = std::move(pot);
  }
  if (keep_within_dd > 0) {
    std::vector<size_t> qual;
    for (size_t i = 0; i < m; ++i)
      if (!dead[i] && lo[i] <= keep_within_dd) qual.push_back(i);
    std::stable_sort(qual.begin(), qual.end(), [&](size_t a, size_t b) {
      mpz_class na = dot_zz(cands[a], cands[a]);
      mpz_class nb = dot_zz(cands[b], cands[b]);
      if (na != nb) return na < nb;
      return lex_less(cands[a], cands[b]);
    });
    if (qual.size() > 256) qual.resize(256);
    for (size_t idx : qual)
      if (std::find(kept.begin(), kept.end(), idx) == kept.end()) kept.push_back(idx);
  }

  std::vector<Ranked> ranked;
  ranked.reserve(kept.size());
  for (size_t idx : kept) {
    Scalar dsq = dist_sq_exact(P, t, cands[idx]);
    if (exclude_exact_image && is_exact_hit(dsq)) continue;
    mpz_class vn = dot_zz(cands[idx], cands[idx]);
    ranked.push_back(Ranked{std::move(cands[idx]), dsq, std::move(vn)});
  }

  CvpResult out;
  out.exhausted_box = exhausted_box;
  if (ranked.empty()) {
    out.found = false;
    out.v.assign(P.cols, 0);
    out.dist_sq = dist_sq_exact(P, t, out.v);
    return out;
  }
  size_t best_i = 0;
  for (size_t i = 1; i < ranked.size(); ++i)
    if (ranked_less(ranked[i], ranked[best_i])) best_i = i;
  out.v = ranked[best_i].v;
  out.dist_sq = ranked[best_i].dist_sq;
  out.candidates.reserve(ranked.size());
  out.candidates.push_back(
      CvpCandidate{ranked[best_i].v, ranked[best_i].dist_sq, ranked[best_i].vnorm_sq});
  for (size_t i = 0; i < ranked.size(); ++i) {
    if (i == best_i) continue;
    out.candidates.push_back(
        CvpCandidate{std::move(ranked[i].v), ranked[i].dist_sq, ranked[i].vnorm_sq});
  }
  return out;
}

// --- box enumeration with a floating prefilter ----------------------------

std::vector<IntVec> box_candidates(const RealMatrix& P, const RealVector& t,
                                   long radius, bool exclude_exact_image,
                                   double keep_within_dd) {
  size_t n = P.cols;
  FloatView fv(P, t);

  std::vector<long> v(n, -radius);
  auto advance = [&]() {
    for (size_t j = n; j-- > 0;) {
      if (v[j] < radius) {
        ++v[j];
        std::fill(v.begin() + j + 1, v.end(), -radius);
        return true;
      }
    }
    return false;
  };

  double best1 = fv.dist2_long(v);
  while (advance()) best1 = std::min(best1, fv.dist2_long(v));
  double m = fv.margin(best1);
  double thresh = best1;
  if (exclude_exact_image) {
    // runner-up tier; the best tier may consist entirely of exact hits
    double best2 = std::numeric_limits<double>::infinity();
    std::fill(v.begin(), v.end(), -radius);
    do {
      double dd = fv.dist2_long(v);
      if (dd > best1 + m) best2 = std::min(best2, dd);
    } while (advance());
    if (std::isfinite(best2)) thresh = best2;
  }
  thresh = std::max(thresh + fv.margin(thresh), keep_within_dd);

  std::vector<IntVec> shortlist;
  std::fill(v.begin(), v.end(), -radius);
  do {
    if (fv.dist2_long(v) <= thresh) {
      IntVec c(n);
      for (size_t j = 0; j < n; ++j) c[j] = v[j];
      shortlist.push_back(std::move(c));
      if (shortlist.size() > 200000) break;  // enumeration is lex-ordered
    }
  } while (advance());
  return shortlist;
}

// --- scaled-embedding search ----------------------------------------------

std::vector<IntVec> embedding_candidates(const RealMatrix& P, const RealVector& t,
                                         const Effort& effort) {
  size_t n = P.cols, d = P.rows;
  long prec = effort.precision_bits;
  mpz_class C;
  mpz_ui_pow_ui(C.get_mpz_t(), 2, static_cast<unsigned long>(std::max(8L, prec / 2)));

  Lll lll;
  lll.b.assign(n, IntVec(n + d));
  lll.u.assign(n, IntVec(n));
  for (size_t j = 0; j < n; ++j) {
    lll.b[j][j] = 1;
    lll.u[j][j] = 1;
    for (size_t i = 0; i < d; ++i)
      lll.b[j][n + i] = round_mpq(mpq_class(C) * rationalize(P.at(i, j), prec));
  }
  lll.run();

  GsData gs = gram_schmidt_of(lll.b);
  std::vector<mpq_class> target(n + d);
  for (size_t i = 0; i < d; ++i) target[n + i] = mpq_class(C) * rationalize(t[i], prec);
  IntVec a = babai_coefficients(lll.b, gs, target);

  long r = 1;
  while (std::pow(2.0 * (r + 1) + 1.0, static_cast<double>(n)) <= 30000.0) ++r;

  std::set<IntVec> seen;
  std::vector<IntVec> cands;
  auto emit = [&](const std::vector<long>& off) {
    IntVec w(n);
    for (size_t j = 0; j < n; ++j) {
      mpz_class cj = a[j] + off[j];
      for (size_t i = 0; i < n; ++i) w[i] += cj * lll.u[j][i];
    }
    if (seen.insert(w).second) cands.push_back(std::move(w));
  };

  std::vector<long> off(n, -r);
  auto advance = [&]() {
    for (size_t j = n; j-- > 0;) {
      if (off[j] < r) {
        ++off[j];
        std::fill(off.begin() + j + 1, off.end(), -r);
        return true;
      }
    }
    return false;
  };
  do {
    emit(off);
  } while (advance());

  // long per-axis sweeps: qualifying-but-coarser points can sit well outside
  // the box, roughly along one reduced direction
  long sweep = std::min<long>(4096, std::max<long>(r, effort.enum_budget / (8 * (long)n)));
  std::fill(off.begin(), off.end(), 0);
  for (size_t j = 0; j < n; ++j) {
    for (long t = -sweep; t <= sweep; ++t) {
      if (std::abs(t) <= r) continue;
      off[j] = t;
      emit(off);
    }
    off[j] = 0;
  }
  return cands;
}

double box_size(size_t n, long radius) {
  return std::pow(2.0 * radius + 1.0, static_cast<double>(n));
}

}  // namespace

CvpResult approx_cvp(const RealMatrix& P, const RealVector& t, const Effort& effort,
                     bool exclude_exact_image, double keep_within_dist_sq) {
  if (t.size() != P.rows) throw std::invalid_argument("approx_cvp: shape mismatch");
  size_t n = P.cols;
  if (box_size(n, effort.enum_radius) <= static_cast<double>(effort.enum_budget)) {
    auto cands =
        box_candidates(P, t, effort.enum_radius, exclude_exact_image, keep_within_dist_sq);
    return rank_candidates(P, t, std::move(cands), exclude_exact_image, true,
                           keep_within_dist_sq);
  }
  auto cands = embedding_candidates(P, t, effort);
  return rank_candidates(P, t, std::move(cands), exclude_exact_image, false,
                         keep_within_dist_sq);
}

Effort effort_for_delta(const Effort& base, const Scalar& delta, size_t n, size_t d) {
  // Embedding scale sized so the reduced basis bottoms out just below delta:
  // the (n+d)-embedding with scale C reaches ||Pv|| ~ C^(d/n - 1), so C needs
  // about n/(n-d) times the bits of 1/delta. Oversizing instead makes the
  // search return needlessly fine vectors whose huge coefficients the planner
  // then pays for in plan length.
  Effort e = base;
  if (n <= d) return e;
  Interval iv = delta.eval_interval(64);
  Mpfr mig = iv.mignitude_lower();
  if (mpfr_sgn(mig.get()) > 0) {
    mpfr_exp_t ex = mpfr_get_exp(mig.get());
    // guard bits also measure how far (in reduced-basis units) the coarsest
    // qualifying vectors sit from the Babai point; they must stay inside the
    // local enumeration box
    long guard = n == 2 ? 6 : 4;
    long bits = std::max(0L, -static_cast<long>(ex)) + guard;
    long c_bits = (bits * static_cast<long>(n) + static_cast<long>(n - d) - 1) /
                  static_cast<long>(n - d);
    e.precision_bits = std::max(64L, 2 * c_bits);
  }
  return e;
}

IntVec claim1_vector(const RealMatrix& P, const Scalar& delta, const Effort& effort) {
  size_t n = P.cols;
  if (n < 2 || P.rows >= n)
    throw std::invalid_argument("claim1_vector: requires a validated P (n > d)");
  if (delta.sign() <= 0) throw std::invalid_argument("claim1_vector: delta <= 0");

  RealVector half_last(P.rows);
  Scalar half(mpq_class(1, 2));
  for (size_t i = 0; i < P.rows; ++i) half_last[i] = P.at(i, n - 1) * half;

  Scalar delta_sq = delta * delta;
  double keep_dd;  // (delta/2)^2 upper bound, for the shortlist
  {
    Interval div = delta.eval_interval(64);
    double hi = mpfr_get_d(div.hi(), MPFR_RNDU);
    keep_dd = 0.2500001 * hi * hi + 1e-300;
  }
  // The scaled embedding is sized to delta, so the search goes straight to it
  // (a box of any affordable radius cannot reach small deltas anyway).
  Effort base = effort_for_delta(effort, delta, n, P.rows);
  base.enum_radius = std::numeric_limits<long>::max() / 4;
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(effort.wall_ms);

  for (int attempt = 0; attempt <= effort.scale_attempts; ++attempt) {
    Effort eff = base;
    eff.precision_bits = base.precision_bits + 8L * attempt;
    CvpResult res = approx_cvp(P, half_last, eff, /*exclude_exact_image=*/true, keep_dd);
    if (!res.found) continue;

    // among candidates meeting ||P v1|| < delta, prefer the shortest v1
    std::optional<IntVec> best;
    mpz_class best_norm;
    for (const auto& cand : res.candidates) {
      Scalar v1_norm_sq = Scalar(4) * cand.dist_sq;  // v1 = 2 v0 - e_n
      try {
        if (cand.dist_sq.sign(2048) <= 0) continue;
        if (cmp(v1_norm_sq, delta_sq, 4096) >= 0) continue;
      } catch (const PrecisionExhausted&) {
        continue;
      }
      IntVec v1(n);
      mpz_class vn = 0;
      for (size_t j = 0; j < n; ++j) {
        v1[j] = 2 * cand.v[j];
        if (j + 1 == n) v1[j] -= 1;
        vn += v1[j] * v1[j];
      }
      if (!best || vn < best_norm || (vn == best_norm && lex_less(v1, *best))) {
        best = std::move(v1);
        best_norm = vn;
      }
    }
    if (best) {
      IntVec v1 = *best;
      mpz_class k = gcd_of(v1);  // odd: the last entry of v1 is odd
      IntVec v2(n);
      for (size_t j = 0; j < n; ++j) v2[j] = v1[j] / k;
      mpz_class last_mod = v2[n - 1] % 4;
      if (last_mod < 0) last_mod += 4;
      if (last_mod != 1)
        for (auto& x : v2) x = -x;
      try {
        Scalar nsq = norm_squared(mat_vec(P, v2));
        if (nsq.sign(4096) > 0 && cmp(nsq, delta_sq, 4096) < 0) return v2;
      } catch (const PrecisionExhausted&) {
        // could not certify at this precision; escalate
      }
    }
    if (std::chrono::steady_clock::now() > deadline)
      throw EffortExhausted("claim1_vector: wall clock exhausted");
  }
  throw EffortExhausted(
      "claim1_vector: no vector with 0 < ||Pv|| < delta found within effort "
      "(n = " + std::to_string(n) + ", d = " + std::to_string(P.rows) +
      ", delta ~ " + delta.to_decimal(64, 4) + "); G(P) may not be dense");
}

Validation validate_instance(const RealMatrix& P) {
  size_t d = P.rows, n = P.cols;
  if (d == 0 || n == 0) return {false, "empty configuration matrix"};
  if (n <= d)
    return {false, "n <= d: the difference set cannot be dense (Observation: needs n > d)"};
  if (P.all_fragment()) {
    size_t r = exact_rank(P);
    if (r < d)
      return {false, "columns do not span R^d (rank " + std::to_string(r) + " < " +
                         std::to_string(d) + ")"};
    return {true, ""};
  }
  // interval rank with escalation
  for (long prec : {128L, 256L, 512L, 1024L}) {
    std::vector<std::vector<Interval>> w;
    w.reserve(d);
    for (size_t i = 0; i < d; ++i) {
      std::vector<Interval> row;
      row.reserve(n);
      for (size_t j = 0; j < n; ++j) row.push_back(P.at(i, j).eval_interval(prec));
      w.push_back(std::move(row));
    }
    size_t rank = 0;
    std::vector<bool> used_row(d, false);
    for (size_t step = 0; step < d; ++step) {
      size_t bi = d, bj = n;
      Mpfr best_mig(static_cast<mpfr_prec_t>(prec));
      mpfr_set_zero(best_mig.get(), 1);
      for (size_t i = 0; i < d; ++i) {
        if (used_row[i]) continue;
        for (size_t j = 0; j < n; ++j) {
          Mpfr mig = w[i][j].mignitude_lower();
          if (mpfr_cmp(mig.get(), best_mig.get()) > 0) {
            best_mig = mig;
            bi = i;
            bj = j;
          }
        }
      }
      if (bi == d) break;  // no certified-nonzero pivot remains
      used_row[bi] = true;
      ++rank;
      for (size_t i = 0; i < d; ++i) {
        if (used_row[i]) continue;
        Interval f = w[i][bj] / w[bi][bj];
        for (size_t j = 0; j < n; ++j) w[i][j] = w[i][j] - f * w[bi][j];
      }
    }
    if (rank == d) return {true, ""};
  }
  return {false, "columns do not span R^d at working precision"};
}

LllResult lll_reduce(const RealMatrix& basis, const mpq_class& delta,
                     long precision_bits) {
  if (delta <= mpq_class(1, 4) || delta >= 1)
    throw std::invalid_argument("lll_reduce: delta must lie in (1/4, 1)");
  size_t n = basis.cols, N = basis.rows;
  // scale rationalized entries to integers by the common power of two
  std::vector<std::vector<mpq_class>> q(n, std::vector<mpq_class>(N));
  mpz_class den = 1;
  for (size_t j = 0; j < n; ++j)
    for (size_t i = 0; i < N; ++i) {
      q[j][i] = rationalize(basis.at(i, j), precision_bits);
      mpz_class l;
      mpz_lcm(l.get_mpz_t(), den.get_mpz_t(), q[j][i].get_den().get_mpz_t());
      den = l;
    }
  Lll lll;
  lll.delta = delta;
  lll.b.assign(n, IntVec(N));
  lll.u.assign(n, IntVec(n));
  for (size_t j = 0; j < n; ++j) {
    lll.u[j][j] = 1;
    for (size_t i = 0; i < N; ++i) {
      mpq_class scaled = q[j][i] * mpq_class(den);
      lll.b[j][i] = scaled.get_num();  // denominator is 1 by construction
    }
  }
  lll.run();

  LllResult out;
  out.U = IntMatrix(n, n);
  for (size_t j = 0; j < n; ++j)
    for (size_t i = 0; i < n; ++i) out.U.at(i, j) = lll.u[j][i];
  if (out.U.det() * out.U.det() != 1)
    throw std::logic_error("lll_reduce: transform not unimodular");
  out.reduced = RealMatrix(N, n);
  for (size_t j = 0; j < n; ++j) {
    IntVec ucol(n);
    for (size_t i = 0; i < n; ++i) ucol[i] = out.U.at(i, j);
    RealVector col = mat_vec(basis, ucol);
    out.reduced.set_col(j, col);
  }
  return out;
}

namespace {

std::optional<DensityVerdict> not_dense_rank_paths(const RealMatrix& P) {
  size_t d = P.rows, n = P.cols;
  if (!P.all_fragment()) return std::nullopt;
  size_t r = exact_rank(P);
  if (r < d) {
    auto w = exact_left_nullvector(P);
    if (!w) return std::nullopt;
    DensityVerdict v;
    v.kind = DensityVerdict::Kind::NotDense;
    v.w = *w;
    v.wTP.assign(n, Scalar(0));
    v.nearest_integers.assign(n, 0);
    v.residual_bound = Scalar(0);
    v.exact = true;
    v.note = "columns span a proper subspace; w is orthogonal to it (w^T P = 0)";
    return v;
  }
  if (n == d) {
    // full-rank square: G(P) is a discrete lattice; w = (P^T)^{-1} e_1
    RealMatrix Pt(n, d);
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < n; ++j) Pt.at(j, i) = P.at(i, j);
    RealVector e1(n, Scalar(0));
    e1[0] = Scalar(1);
    RealVector w = exact_solve(Pt, e1);
    DensityVerdict v;
    v.kind = DensityVerdict::Kind::NotDense;
    v.w = w;
    v.wTP.assign(n, Scalar(0));
    v.wTP[0] = Scalar(1);
    v.nearest_integers.assign(n, 0);
    v.nearest_integers[0] = 1;
    v.residual_bound = Scalar(0);
    v.exact = true;
    v.note = "n = d with full rank: G(P) is a discrete lattice (Observation: needs n > d)";
    return v;
  }
  return std::nullopt;
}

std::optional<DensityVerdict> not_dense_rational(const RealMatrix& P) {
  size_t d = P.rows, n = P.cols;
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < n; ++j) {
      const SurdForm* f = P.at(i, j).form();
      if (!f || !f->is_rational()) return std::nullopt;
    }
  mpz_class L = 1;
  for (size_t j = 0; j < n; ++j) {
    mpz_class l;
    mpz_lcm(l.get_mpz_t(), L.get_mpz_t(),
            P.at(0, j).form()->rational_value().get_den().get_mpz_t());
    L = l;
  }
  DensityVerdict v;
  v.kind = DensityVerdict::Kind::NotDense;
  v.w.assign(d, Scalar(0));
  v.w[0] = Scalar(L);
  v.wTP.reserve(n);
  v.nearest_integers.reserve(n);
  for (size_t j = 0; j < n; ++j) {
    mpq_class val = mpq_class(L) * P.at(0, j).form()->rational_value();
    v.wTP.push_back(Scalar(val));
    v.nearest_integers.push_back(val.get_num());  // denominator 1
  }
  v.residual_bound = Scalar(0);
  v.exact = true;
  v.note = "rational configuration: G(P) is contained in (1/q)Z^d";
  return v;
}

std::optional<DensityVerdict> not_dense_dual_search(const RealMatrix& P,
                                                    const Effort& effort) {
  size_t d = P.rows, n = P.cols;
  if (!P.all_fragment()) return std::nullopt;
  std::vector<RealVector> null_basis = exact_right_nullspace(P);
  if (null_basis.empty()) return std::nullopt;
  size_t c = null_basis.size();

  long prec = effort.precision_bits;
  mpz_class C;
  mpz_ui_pow_ui(C.get_mpz_t(), 2, static_cast<unsigned long>(std::max(8L, prec / 2)));
  Lll lll;
  lll.b.assign(n, IntVec(n + c));
  lll.u.assign(n, IntVec(n));
  for (size_t j = 0; j < n; ++j) {
    lll.b[j][j] = 1;
    lll.u[j][j] = 1;
    for (size_t i = 0; i < c; ++i)
      lll.b[j][n + i] = round_mpq(mpq_class(C) * rationalize(null_basis[i][j], prec));
  }
  lll.run();

  // pivot columns of P give an invertible d x d subsystem P^T w = m
  std::vector<size_t> pivots;
  {
    RealMatrix Pc = P;
    // greedy: add columns that increase exact rank
    RealMatrix acc(d, 0);
    for (size_t j = 0; j < n && pivots.size() < d; ++j) {
      RealMatrix trial(d, acc.cols + 1);
      for (size_t i = 0; i < d; ++i) {
        for (size_t k = 0; k < acc.cols; ++k) trial.at(i, k) = acc.at(i, k);
        trial.at(i, acc.cols) = P.at(i, j);
      }
      if (exact_rank(trial) == trial.cols) {
        acc = trial;
        pivots.push_back(j);
      }
    }
    (void)Pc;
  }
  if (pivots.size() < d) return std::nullopt;

  mpq_class thresh(1);
  for (long i = 0; i < std::max(8L, prec / 2); ++i) thresh /= 2;
  Scalar threshold{Scalar(thresh)};

  for (size_t j = 0; j < n; ++j) {
    IntVec m(n);
    bool zero = true;
    for (size_t i = 0; i < n; ++i) {
      m[i] = lll.u[j][i];
      if (m[i] != 0) zero = false;
    }
    if (zero) continue;
    // solve the pivot subsystem sum_i w_i P[i][p_k] = m[p_k]
    RealMatrix S(d, d);
    RealVector rhs(d);
    for (size_t k = 0; k < d; ++k) {
      for (size_t i = 0; i < d; ++i) S.at(k, i) = P.at(i, pivots[k]);
      rhs[k] = Scalar(m[pivots[k]]);
    }
    RealVector w;
    try {
      w = exact_solve(S, rhs);
    } catch (const std::exception&) {
      continue;
    }
    bool wzero = true;
    for (const auto& wi : w)
      if (wi.sign() != 0) wzero = false;
    if (wzero) continue;
    // residuals r_j = w^T p_j - m_j
    std::vector<Scalar> wTP(n);
    Scalar max_resid(0);
    bool all_exact = true;
    bool small = true;
    for (size_t col = 0; col < n; ++col) {
      Scalar val = dot(w, P.col(col));
      wTP[col] = val;
      Scalar r = val - Scalar(m[col]);
      int s;
      try {
        s = r.sign(2048);
      } catch (const PrecisionExhausted&) {
        s = 1;  // treat as nonzero, judged by the threshold below
      }
      if (s != 0) {
        all_exact = false;
        Scalar ar = s > 0 ? r : -r;
        if (cmp_scalar_soft(ar, max_resid) > 0) max_resid = ar;
        if (cmp_scalar_soft(ar, threshold) > 0) small = false;
      }
    }
    if (all_exact || small) {
      DensityVerdict v;
      v.kind = DensityVerdict::Kind::NotDense;
      v.w = w;
      v.wTP = wTP;
      v.nearest_integers = m;
      v.residual_bound = all_exact ? Scalar(0) : max_resid;
      v.exact = all_exact;
      v.note = all_exact ? "dual vector with exactly integer w^T P"
                         : "dual vector with near-integer w^T P";
      return v;
    }
  }
  return std::nullopt;
}

}  // namespace

DensityVerdict density_certificate(const RealMatrix& P, const Effort& effort,
                                   const Scalar& tolerance) {
  size_t d = P.rows;
  if (auto v = not_dense_rank_paths(P)) return *v;
  if (auto v = not_dense_rational(P)) return *v;

  Validation val = validate_instance(P);
  if (!val.ok) {
    // non-fragment rank failure: report without an exact witness
    DensityVerdict v;
    v.kind = DensityVerdict::Kind::NotDense;
    v.residual_bound = Scalar(0);
    v.note = val.reason;
    return v;
  }

  if (auto v = not_dense_dual_search(P, effort)) return *v;

  // Dense probes: {±s e_i : s in {1, 1/2, 1/4}}
  DensityVerdict dense;
  dense.kind = DensityVerdict::Kind::Dense;
  dense.tolerance = tolerance;
  Scalar tol_sq = tolerance * tolerance;
  double keep_dd;
  {
    Interval tiv = tolerance.eval_interval(64);
    double hi = mpfr_get_d(tiv.hi(), MPFR_RNDU);
    keep_dd = hi * hi * 1.000001 + 1e-300;
  }
  Effort probe_effort = effort_for_delta(effort, tolerance, P.cols, P.rows);
  probe_effort.enum_radius = std::numeric_limits<long>::max() / 4;
  const mpq_class scales[3] = {mpq_class(1), mpq_class(1, 2), mpq_class(1, 4)};
  for (size_t i = 0; i < d; ++i) {
    for (const auto& s : scales) {
      for (int sign : {1, -1}) {
        RealVector target(d, Scalar(0));
        target[i] = Scalar(mpq_class(sign) * s);
        bool ok = false;
        ProbeEvidence ev;
        for (int attempt = 0; attempt <= effort.scale_attempts && !ok; ++attempt) {
          Effort eff = probe_effort;
          eff.precision_bits = probe_effort.precision_bits + 8L * attempt;
          CvpResult res = approx_cvp(P, target, eff, false, keep_dd);
          // prefer the shortest qualifying coefficient vector as evidence
          const CvpCandidate* pick = nullptr;
          for (const auto& cand : res.candidates) {
            try {
              if (cmp(cand.dist_sq, tol_sq, 4096) > 0) continue;
            } catch (const PrecisionExhausted&) {
              continue;
            }
            if (!pick || cand.vnorm_sq < pick->vnorm_sq) pick = &cand;
          }
          if (pick) {
            ev = ProbeEvidence{target, pick->v, pick->dist_sq};
            ok = true;
          }
        }
        if (!ok) {
          DensityVerdict u;
          u.kind = DensityVerdict::Kind::Unknown;
          u.note = "no NotDense witness found and a density probe missed tolerance";
          return u;
        }
        dense.probes.push_back(std::move(ev));
      }
    }
  }
  dense.note = "all density probes approximated below tolerance";
  return dense;
}

}  // namespace jumplan
