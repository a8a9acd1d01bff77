// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "jumplan/lattice.hpp"

namespace jumplan {

struct PlannerOptions {
  long precision = kDefaultPrecision;  // verification runs at twice this
  bool track_steps = true;             // materialize step factorizations
  int max_retries = 6;                 // budget-halving retries
};

struct ApproxResult {
  IntMatrix A;     // good; ||P A - X||_sup <= tol
  StepList steps;  // configuration order: product_in_order(steps) == A
  bool steps_tracked = false;
  Scalar achieved_sup_error;
  std::vector<Scalar> eps_levels;  // ||P v|| per recursion level, outermost first
  int retries = 0;
};

/// Approximates X (whose last column must be exactly zero) by P*A with A
/// good, to entrywise tolerance tol. The recursion follows Claims 1-6:
/// claim1 vector, normalization A1 v = e_n, Householder split of O P A1^-1,
/// induction on d, and an even compensation row y.
ApproxResult approx_zero_lastcol(const RealMatrix& P, const RealMatrix& X,
                                 const Scalar& tol, const Effort& effort,
                                 const PlannerOptions& opts);

/// Full approximation: parity-constrained rounding of X^T/eps_r, a Lemma-gen
/// triangularizer A0 (zero last row), the zero-last-column core, and the
/// unwrap A = B (A0^T)^-1.
ApproxResult approx_good(const RealMatrix& P, const RealMatrix& X, const Scalar& tol,
                         const Effort& effort, const PlannerOptions& opts);

struct PlanCertificate {
  IntMatrix A0;       // good
  StepList a0_steps;  // configuration order; product == A0 (when tracked)
  bool steps_tracked = false;
  IntVec w0;          // ||P w0 - q0/2|| <= eps/4
  IntVec wprime;      // A0 wprime = w0 exactly
  RealMatrix predicted;  // d x (n+1): column i = predicted final of particle i
  Scalar eps;
  Scalar matrix_budget;       // eps/2, for ||P A0 - Q||
  Scalar translation_budget;  // eps/4, for ||P w0 - q0/2||
};

/// Theorem-2 assembly for the zero-based configuration (p0 = 0): targets has
/// n+1 columns q_0..q_n. Predicted finals: particle 0 at 2 P w0, particle i
/// at (P A0) e_i + 2 P w0, every particle within eps of its target.
PlanCertificate plan_certificate(const RealMatrix& P, const RealMatrix& targets,
                                 const Scalar& eps, const Effort& effort,
                                 const PlannerOptions& opts);

/// Exact move count of the compiled plan when steps were tracked
/// (2 per stationary step + 2n per translation repetition), else nullopt.
std::optional<size_t> estimated_move_count(const PlanCertificate& cert, size_t n);

}  // namespace jumplan
