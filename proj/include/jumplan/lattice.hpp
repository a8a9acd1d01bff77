// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jumplan/goodmat.hpp"
#include "jumplan/scalar.hpp"

namespace jumplan {

class EffortExhausted : public std::runtime_error {
 public:
  explicit EffortExhausted(const std::string& what) : std::runtime_error(what) {}
};

/// Search budgets. enum_radius bounds exhaustive box enumeration (doubled
/// adaptively by callers up to scale_attempts rounds), precision_bits fixes
/// the scaled-embedding magnitude C = 2^(precision/2), wall_ms caps searches,
/// move_budget caps compiled plan length.
struct Effort {
  long enum_radius = 32;
  int scale_attempts = 12;
  long precision_bits = 128;
  long wall_ms = 120000;
  long enum_budget = 4'000'000;
  long move_budget = 20'000'000;
};

struct CvpCandidate {
  IntVec v;
  Scalar dist_sq;
  mpz_class vnorm_sq;
};

struct CvpResult {
  IntVec v;
  Scalar dist_sq;        // ||P v - t||^2, exact for fragment inputs
  bool exhausted_box;    // searched region was the full coefficient box
  bool found = true;     // false only with exclusions and an empty region
  // ranked shortlist (best first); callers may prefer a shorter v among
  // candidates that already meet their tolerance
  std::vector<CvpCandidate> candidates;
};

/// Best v in the searched region minimizing ||P v - t||; ties broken by
/// smaller ||v||^2, then lexicographically. The searched region is the box
/// [-radius, radius]^n when it fits enum_budget, otherwise LLL-reduced
/// scaled-embedding + Babai nearest plane + local enumeration.
/// With exclude_exact_image, candidates with P v = t exactly are skipped.
/// keep_within_dist_sq widens the returned shortlist to all candidates whose
/// squared distance is (approximately) below it.
CvpResult approx_cvp(const RealMatrix& P, const RealVector& t, const Effort& effort,
                     bool exclude_exact_image = false,
                     double keep_within_dist_sq = 0.0);

/// Claim 1: primitive v, entries even except the last (1 mod 4), with
/// 0 < ||P v|| < delta. Escalates effort; throws EffortExhausted.
IntVec claim1_vector(const RealMatrix& P, const Scalar& delta, const Effort& effort);

struct Validation {
  bool ok = false;
  std::string reason;
};

/// Observation 1 and the span condition: rejects n <= d and rank-deficient
/// configurations.
Validation validate_instance(const RealMatrix& P);

struct LllResult {
  RealMatrix reduced;  // = basis * U
  IntMatrix U;         // unimodular
};

/// Lovász-reduced basis of the given columns (delta in (1/4, 1)).
LllResult lll_reduce(const RealMatrix& basis, const mpq_class& delta,
                     long precision_bits = kDefaultPrecision);

struct ProbeEvidence {
  RealVector target;
  IntVec v;
  Scalar dist_sq;
};

struct DensityVerdict {
  enum class Kind { Dense, NotDense, Unknown };
  Kind kind = Kind::Unknown;

  // NotDense: w != 0 with every entry of w^T P within residual_bound of an
  // integer; exact means the residuals are exactly zero.
  RealVector w;
  std::vector<Scalar> wTP;
  IntVec nearest_integers;
  Scalar residual_bound;
  bool exact = false;

  // Dense: probe targets approximated below tolerance.
  std::vector<ProbeEvidence> probes;
  Scalar tolerance;

  std::string note;
};

/// Lemma 3 certificate search; Dense evidence uses the probe set
/// {±s e_i : s in {1, 1/2, 1/4}} at the given tolerance.
DensityVerdict density_certificate(const RealMatrix& P, const Effort& effort,
                                   const Scalar& tolerance);

// Exposed for the planner: boost precision so the embedding scale resolves
// distances of size `delta`.
Effort effort_for_delta(const Effort& base, const Scalar& delta, size_t n, size_t d);

}  // namespace jumplan
