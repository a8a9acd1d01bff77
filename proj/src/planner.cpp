// SPDX-License-Identifier: Apache-2.0

#include "jumplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>

namespace jumplan {

namespace {

RealMatrix mat_mul_int(const RealMatrix& a, const IntMatrix& b) {
  if (a.cols != b.rows()) throw std::invalid_argument("mat_mul_int: shape mismatch");
  RealMatrix r(a.rows, b.cols());
  for (size_t i = 0; i < a.rows; ++i)
    for (size_t j = 0; j < b.cols(); ++j) {
      Scalar s;
      for (size_t k = 0; k < a.cols; ++k) {
        if (b.at(k, j) == 0) continue;
        s += a.at(i, k) * Scalar(b.at(k, j));
      }
      r.at(i, j) = s;
    }
  return r;
}

long ceil_sqrt_long(size_t d) {
  long r = 1;
  while (r * r < static_cast<long>(d)) ++r;
  return r;
}

// nearest integer of the given parity to the (interval midpoint of the)
// scalar, ties toward -infinity
mpz_class nearest_with_parity(const Scalar& x, int parity, long prec) {
  mpq_class q;
  if (const SurdForm* f = x.form(); f && f->is_rational()) {
    q = f->rational_value();
  } else {
    q = x.eval_interval(prec).midpoint_mpq();
  }
  // y = 2k + parity with k = ceil(z - 1/2), z = (q - parity)/2
  mpq_class z = (q - parity) / 2;
  mpq_class zm = z - mpq_class(1, 2);
  mpz_class k;
  mpz_cdiv_q(k.get_mpz_t(), zm.get_num().get_mpz_t(), zm.get_den().get_mpz_t());
  return 2 * k + parity;
}

// |entry| <= bound for every entry, exact on fragment values; undecidable
// entries count as failures only when certify is set.
enum class SupCheck { Pass, Fail, Undecided };

SupCheck sup_entries_leq(const RealMatrix& e, const Scalar& bound, long bits) {
  bool undecided = false;
  for (const auto& s : e.a) {
    try {
      if (cmp(s, bound, bits) > 0 || cmp(-s, bound, bits) > 0) return SupCheck::Fail;
    } catch (const PrecisionExhausted&) {
      undecided = true;
    }
  }
  return undecided ? SupCheck::Undecided : SupCheck::Pass;
}

Scalar sup_abs_entry(const RealMatrix& e, long bits) {
  Scalar best(0);
  for (const auto& s : e.a) {
    Scalar a = s;
    try {
      if (a.sign(bits) < 0) a = -a;
      if (cmp(a, best, bits) > 0) best = a;
    } catch (const PrecisionExhausted&) {
      // keep the running maximum; reporting only
    }
  }
  return best;
}

RealMatrix subtract(const RealMatrix& a, const RealMatrix& b) {
  RealMatrix r(a.rows, a.cols);
  for (size_t i = 0; i < a.a.size(); ++i) r.a[i] = a.a[i] - b.a[i];
  return r;
}

ApproxResult identity_result(size_t n) {
  ApproxResult r;
  r.A = IntMatrix::identity(n);
  r.steps_tracked = true;
  r.achieved_sup_error = Scalar(0);
  return r;
}

}  // namespace

ApproxResult approx_zero_lastcol(const RealMatrix& P, const RealMatrix& X,
                                 const Scalar& tol, const Effort& effort,
                                 const PlannerOptions& opts) {
  size_t d = P.rows, n = P.cols;
  if (X.rows != d || X.cols != n)
    throw std::invalid_argument("approx_zero_lastcol: shape mismatch");
  if (tol.sign() <= 0) throw std::invalid_argument("approx_zero_lastcol: tol <= 0");
  for (size_t i = 0; i < d; ++i) {
    const SurdForm* f = X.at(i, n - 1).form();
    if (!f || !f->is_zero())
      throw std::invalid_argument("approx_zero_lastcol: last column of X must be exactly zero");
  }
  if (d == 0) return identity_result(n);

  Scalar dcap(ceil_sqrt_long(d));
  int last_failure = 0;
  for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
    Scalar budget = tol * Scalar(mpq_class(1, 1L << attempt));
    Scalar delta = budget / (Scalar(2) * dcap);

    IntVec v;
    try {
      v = claim1_vector(P, delta, effort);
    } catch (const EffortExhausted& e) {
      if (getenv("JUMPLAN_DEBUG"))
        fprintf(stderr, "[zlc d=%zu attempt=%d claim1 failed: %s]\n", d, attempt, e.what());
      throw;
    }

    StepList a1_steps;
    StepSink a1_sink{opts.track_steps ? &a1_steps : nullptr, 0,
                     static_cast<size_t>(effort.move_budget)};
    IntMatrix A1 = normalize_to_en_core(v, a1_sink);
    IntMatrix A1inv = A1.inverse_unimodular();

    RealVector Pv = mat_vec(P, v);
    auto [H, eps_s] = householder_to_last_axis(Pv, opts.precision);

    RealMatrix PA1inv = mat_mul_int(P, A1inv);
    // D = O P A1^-1; its last column is eps_s f_d by construction
    RealMatrix Dtop(d, n);  // only columns 0..n-2 are used
    for (size_t j = 0; j + 1 < n; ++j) {
      RealVector c = H.apply(PA1inv.col(j));
      Dtop.set_col(j, c);
    }

    // size-reduce the last row of D against 2*eps_s by shifting columns of
    // A1^-1 with even multiples of v; P' (the top rows) is unaffected
    RealVector w(n - 1);
    StepList shift_steps;
    Scalar two_eps = Scalar(2) * eps_s;
    for (size_t j = 0; j + 1 < n; ++j) {
      Scalar wj = Dtop.at(d - 1, j);
      mpz_class s_j(0);
      try {
        Scalar ratio = wj / two_eps;
        mpq_class mid = ratio.eval_interval(opts.precision).midpoint_mpq();
        mpq_class half = mid + mpq_class(1, 2);
        mpz_class rounded;
        mpz_fdiv_q(rounded.get_mpz_t(), half.get_num().get_mpz_t(),
                   half.get_den().get_mpz_t());
        s_j = -rounded;
      } catch (const PrecisionExhausted&) {
        s_j = 0;  // leave w_j as is; verification will pick this up
      }
      if (s_j != 0) {
        // A1inv <- A1inv * (I + 2 s_j E_{n-1,j}): col j += 2 s_j * v
        for (size_t i = 0; i < n; ++i) A1inv.at(i, j) += 2 * s_j * v[i];
        StepDescriptor sd{static_cast<int>(n), static_cast<int>(n - 1),
                          static_cast<int>(j), s_j > 0 ? 2 : -2};
        if (opts.track_steps) {
          StepSink sink{&shift_steps, 0, static_cast<size_t>(effort.move_budget)};
          sink.emit_run(sd, abs(s_j));
        }
        wj = wj + Scalar(mpz_class(2 * s_j)) * eps_s;
      }
      w[j] = wj;
    }

    // P' and OX
    RealMatrix Pprime(d - 1, n - 1);
    for (size_t i = 0; i + 1 < d; ++i)
      for (size_t j = 0; j + 1 < n; ++j) Pprime.at(i, j) = Dtop.at(i, j);
    RealMatrix OXtop(d - 1, n - 1);
    RealVector OXlast(n - 1);
    for (size_t j = 0; j + 1 < n; ++j) {
      RealVector c = H.apply(X.col(j));
      for (size_t i = 0; i + 1 < d; ++i) OXtop.at(i, j) = c[i];
      OXlast[j] = c[d - 1];
    }

    ApproxResult inner = approx_good(Pprime, OXtop, budget / Scalar(2), effort, opts);

    // even compensation row y
    IntVec y(n - 1);
    StepList y_steps;
    StepSink y_sink{opts.track_steps ? &y_steps : nullptr, 0,
                    static_cast<size_t>(effort.move_budget)};
    IntMatrix B(n, n);
    for (size_t i = 0; i + 1 < n; ++i)
      for (size_t j = 0; j + 1 < n; ++j) B.at(i, j) = inner.A.at(i, j);
    B.at(n - 1, n - 1) = 1;
    for (size_t j = 0; j + 1 < n; ++j) {
      Scalar wB;
      for (size_t i = 0; i + 1 < n; ++i) {
        if (inner.A.at(i, j) == 0) continue;
        wB += w[i] * Scalar(inner.A.at(i, j));
      }
      Scalar ratio = (OXlast[j] - wB) / eps_s;
      y[j] = nearest_with_parity(ratio, 0, opts.precision);
      B.at(n - 1, j) = y[j];
      if (y[j] != 0) {
        StepDescriptor sd{static_cast<int>(n), static_cast<int>(n - 1),
                          static_cast<int>(j), y[j] > 0 ? 2 : -2};
        y_sink.emit_run(sd, abs(y[j]) / 2);
      }
    }

    ApproxResult out;
    out.A = A1inv * B;
    out.retries = attempt;
    out.eps_levels.push_back(eps_s);
    out.eps_levels.insert(out.eps_levels.end(), inner.eps_levels.begin(),
                          inner.eps_levels.end());
    if (opts.track_steps && inner.steps_tracked) {
      out.steps_tracked = true;
      out.steps = negated_each(a1_steps);  // A1^-1 in configuration order
      out.steps.insert(out.steps.end(), shift_steps.begin(), shift_steps.end());
      for (auto s : inner.steps) {
        s.n = static_cast<int>(n);
        out.steps.push_back(s);
      }
      out.steps.insert(out.steps.end(), y_steps.begin(), y_steps.end());
    }

    RealMatrix err = subtract(mat_mul_int(P, out.A), X);
    SupCheck chk = sup_entries_leq(err, tol, 2 * opts.precision);
    if (getenv("JUMPLAN_DEBUG")) {
      Scalar ae = sup_abs_entry(err, 2 * opts.precision);
      fprintf(stderr, "[zlc d=%zu attempt=%d chk=%d err=%s tol=%s eps_s=%s]\n", d, attempt,
              (int)chk, ae.to_decimal(128, 4).c_str(), tol.to_decimal(128,4).c_str(),
              eps_s.to_decimal(128,4).c_str());
    }
    if (chk != SupCheck::Fail) {
      out.achieved_sup_error = sup_abs_entry(err, 2 * opts.precision);
      return out;
    }
    last_failure = attempt;
  }
  throw EffortExhausted("approx_zero_lastcol: tolerance not met after " +
                        std::to_string(last_failure + 1) + " attempts");
}

ApproxResult approx_good(const RealMatrix& P, const RealMatrix& X, const Scalar& tol,
                         const Effort& effort, const PlannerOptions& opts) {
  size_t d = P.rows, n = P.cols;
  if (X.rows != d || X.cols != n)
    throw std::invalid_argument("approx_good: shape mismatch");
  if (d == 0) return identity_result(n);
  if (tol.sign() <= 0) throw std::invalid_argument("approx_good: tol <= 0");
  if (n <= d) throw std::invalid_argument("approx_good: requires n > d");

  int last_failure = 0;
  for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
    Scalar eps_r = tol * Scalar(mpq_class(1, 2L << attempt));

    // parity-constrained rounding of (1/eps_r) X^T
    IntMatrix Y(n, d);
    for (size_t j = 0; j < n; ++j)
      for (size_t i = 0; i < d; ++i) {
        Scalar ratio = X.at(i, j) / eps_r;
        Y.at(j, i) = nearest_with_parity(ratio, i == j ? 1 : 0, opts.precision);
      }

    StepList tri_steps;
    StepSink tri_sink{opts.track_steps ? &tri_steps : nullptr, 0,
                      static_cast<size_t>(effort.move_budget)};
    IntMatrix T;  // = A0tri * Y, below-diagonal zero, above-diagonal reduced
    IntMatrix A0tri = triangularize_core(Y, tri_sink, &T, /*size_reduce_above=*/true);

    // X0 = eps_r * T^T has an exactly zero last column (n > d)
    RealMatrix X0(d, n);
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < n; ++j)
        X0.at(i, j) = eps_r * Scalar(T.at(j, i));

    // the unwrap multiplies the inner error by rows of A0tri^-1
    IntMatrix A0inv = A0tri.inverse_unimodular();
    mpz_class amp(1);
    for (size_t i = 0; i < n; ++i) {
      mpz_class row_sum(0);
      for (size_t j = 0; j < n; ++j) row_sum += abs(A0inv.at(i, j));
      amp = std::max(amp, row_sum);
    }
    Scalar inner_tol = eps_r / Scalar(amp);

    ApproxResult inner;
    try {
      inner = approx_zero_lastcol(P, X0, inner_tol, effort, opts);
    } catch (const EffortExhausted&) {
      last_failure = attempt;
      continue;
    }

    ApproxResult out;
    IntMatrix A0invT = A0inv.transposed();  // = (A0tri^T)^-1
    out.A = inner.A * A0invT;
    out.retries = attempt + inner.retries;
    out.eps_levels = inner.eps_levels;
    if (opts.track_steps && inner.steps_tracked) {
      out.steps_tracked = true;
      out.steps = inner.steps;
      for (size_t k = tri_steps.size(); k-- > 0;)
        out.steps.push_back(tri_steps[k].transposed().negated());
    }

    RealMatrix err = subtract(mat_mul_int(P, out.A), X);
    SupCheck chk = sup_entries_leq(err, tol, 2 * opts.precision);
    if (getenv("JUMPLAN_DEBUG")) {
      Scalar ae = sup_abs_entry(err, 2 * opts.precision);
      fprintf(stderr, "[good d=%zu attempt=%d chk=%d err=%s tol=%s amp=%s inner=%s]\n", d, attempt,
              (int)chk, ae.to_decimal(128, 4).c_str(), tol.to_decimal(128,4).c_str(),
              amp.get_str().c_str(), inner_tol.to_decimal(128,4).c_str());
    }
    if (chk != SupCheck::Fail) {
      out.achieved_sup_error = sup_abs_entry(err, 2 * opts.precision);
      return out;
    }
    last_failure = attempt;
  }
  throw EffortExhausted("approx_good: tolerance not met after " +
                        std::to_string(last_failure + 1) + " attempts");
}

PlanCertificate plan_certificate(const RealMatrix& P, const RealMatrix& targets,
                                 const Scalar& eps, const Effort& effort,
                                 const PlannerOptions& opts) {
  size_t d = P.rows, n = P.cols;
  if (targets.rows != d || targets.cols != n + 1)
    throw std::invalid_argument("plan_certificate: targets must be d x (n+1)");
  if (eps.sign() <= 0) throw std::invalid_argument("plan_certificate: eps <= 0");
  Validation val = validate_instance(P);
  if (!val.ok) throw std::invalid_argument("plan_certificate: " + val.reason);

  RealVector q0 = targets.col(0);
  RealMatrix Q(d, n);
  for (size_t j = 0; j < n; ++j) {
    RealVector qc = targets.col(j + 1);
    for (size_t i = 0; i < d; ++i) Q.at(i, j) = qc[i] - q0[i];
  }

  // matrix phase: column norms of P A0 - Q must be <= eps/2, so the
  // entrywise tolerance carries a 1/ceil(sqrt(d)) factor
  Scalar half(mpq_class(1, 2));
  Scalar matrix_budget = eps * half;
  Scalar matrix_tol = matrix_budget / Scalar(ceil_sqrt_long(d));

  RealVector q0_half(d);
  for (size_t i = 0; i < d; ++i) q0_half[i] = q0[i] * half;
  Scalar translation_budget = eps * Scalar(mpq_class(1, 4));
  Scalar tb_sq = translation_budget * translation_budget;
  double keep_dd;
  {
    Interval biv = translation_budget.eval_interval(64);
    double hi = mpfr_get_d(biv.hi(), MPFR_RNDU);
    keep_dd = hi * hi * 1.000001 + 1e-300;
  }

  // translation phase: CVP over the PA0 parametrization keeps w' = u small.
  // When P A0 lands close to a rational matrix, small qualifying u can be
  // scarce for half-grid targets; a tighter matrix tolerance reshuffles the
  // residuals, so shrink it until the plan size is reasonable.
  auto find_u = [&](const RealMatrix& PA0) -> std::optional<IntVec> {
    std::optional<IntVec> u;
    Effort base = effort_for_delta(effort, translation_budget, n, d);
    base.enum_radius = std::numeric_limits<long>::max() / 4;
    for (int attempt = 0; attempt <= effort.scale_attempts && !u; ++attempt) {
      Effort eff = base;
      eff.precision_bits = base.precision_bits + 8L * attempt;
      CvpResult res = approx_cvp(PA0, q0_half, eff, false, keep_dd);
      const CvpCandidate* pick = nullptr;
      for (const auto& cand : res.candidates) {
        try {
          if (cmp(cand.dist_sq, tb_sq, 4096) > 0) continue;
        } catch (const PrecisionExhausted&) {
          continue;
        }
        if (!pick || cand.vnorm_sq < pick->vnorm_sq) pick = &cand;
      }
      if (pick) u = pick->v;
    }
    return u;
  };

  std::optional<ApproxResult> ra;
  std::optional<IntVec> u;
  mpz_class best_est(-1);
  for (int shift = 0; shift < 4; ++shift) {
    Scalar mt = matrix_tol * Scalar(mpq_class(1, 1L << shift));
    ApproxResult cand_ra;
    try {
      cand_ra = approx_good(P, Q, mt, effort, opts);
    } catch (const EffortExhausted&) {
      continue;
    } catch (const std::length_error&) {
      continue;  // step materialization blew the move budget at this shift
    }
    std::optional<IntVec> cand_u = find_u(mat_mul_int(P, cand_ra.A));
    if (!cand_u) continue;
    mpz_class est = 2 * static_cast<unsigned long>(cand_ra.steps.size());
    for (const auto& wj : *cand_u) est += 2 * static_cast<long>(n) * abs(wj);
    if (getenv("JUMPLAN_DEBUG"))
      fprintf(stderr, "[plan shift=%d est=%s]\n", shift, est.get_str().c_str());
    if (best_est < 0 || est < best_est) {
      best_est = est;
      ra = std::move(cand_ra);
      u = std::move(cand_u);
    }
    if (best_est <= effort.move_budget / 4) break;
  }
  if (!ra || !u)
    throw EffortExhausted(
        "plan_certificate: no certificate within the move budget "
        "(a step factorization run exceeded it, or no w0 with "
        "||P w0 - q0/2|| <= eps/4 was found)");

  PlanCertificate cert;
  cert.A0 = ra->A;
  cert.a0_steps = ra->steps;
  cert.steps_tracked = ra->steps_tracked;
  cert.wprime = *u;
  cert.w0 = ra->A * cert.wprime;
  cert.eps = eps;
  cert.matrix_budget = matrix_budget;
  cert.translation_budget = translation_budget;

  // predicted finals
  RealVector Pw0 = mat_vec(P, cert.w0);
  cert.predicted = RealMatrix(d, n + 1);
  for (size_t i = 0; i < d; ++i) cert.predicted.at(i, 0) = Scalar(2) * Pw0[i];
  RealMatrix PA0 = mat_mul_int(P, cert.A0);
  for (size_t j = 0; j < n; ++j)
    for (size_t i = 0; i < d; ++i)
      cert.predicted.at(i, j + 1) = PA0.at(i, j) + cert.predicted.at(i, 0);

  // certificate self-checks (exact where the inputs are exact)
  {
    RealVector diff(d);
    for (size_t i = 0; i < d; ++i) diff[i] = Pw0[i] - q0_half[i];
    if (cmp(norm_squared(diff), tb_sq, 4096) > 0)
      throw std::logic_error("plan_certificate: w0 budget violated");
    Scalar eps_sq = eps * eps;
    for (size_t j = 0; j <= n; ++j) {
      RealVector dv(d);
      for (size_t i = 0; i < d; ++i) dv[i] = cert.predicted.at(i, j) - targets.at(i, j);
      if (cmp(norm_squared(dv), eps_sq, 4096) > 0)
        throw std::logic_error("plan_certificate: predicted final " + std::to_string(j) +
                               " misses its target by more than eps");
    }
  }
  return cert;
}

std::optional<size_t> estimated_move_count(const PlanCertificate& cert, size_t n) {
  if (!cert.steps_tracked) return std::nullopt;
  mpz_class total = 2 * static_cast<unsigned long>(cert.a0_steps.size());
  mpz_class trans(0);
  for (const auto& wj : cert.wprime) trans += abs(wj);
  total += 2 * static_cast<long>(n) * trans;
  if (!total.fits_ulong_p()) return std::nullopt;
  return total.get_ui();
}

}  // namespace jumplan
