// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <set>

#include "jumplan/planner.hpp"

namespace jumplan {

/// One legal move: the jumper lands at 2*pos(over) - pos(jumper).
struct Move {
  int jumper = 0;
  int over = 0;
  bool operator==(const Move& o) const { return jumper == o.jumper && over == o.over; }
};

/// Absolute positions of all n+1 particles (particle 0 included).
/// Coinciding particles are allowed.
struct Configuration {
  size_t dim = 0;
  std::vector<RealVector> pos;

  size_t particles() const { return pos.size(); }
};

Configuration apply_move(const Configuration& c, const Move& m);
void apply_move_inplace(Configuration& c, const Move& m);

/// Builds the zero-based configuration (0, P columns).
Configuration configuration_from_matrix(const RealMatrix& P);

/// Two jumps per step (Lemma obs2): the jumper is always a particle in 1..n,
/// so particle 0 never moves. Simulating the result from (0, P) yields
/// (0, P * product_in_order(steps)) exactly.
std::vector<Move> compile_stationary(const StepList& steps);

/// Jump sequence translating every particle by 2k(p_j - p_0) while keeping
/// all differences p_i - p_0 fixed: per repetition, 0 jumps over j, j jumps
/// over 0, then every other particle jumps over 0 and then over j (2n moves).
/// Negative k replays the reversed move list.
std::vector<Move> translation_gadget(const Configuration& c, int j, const mpz_class& k);
std::vector<Move> translation_gadget(size_t n, int j, const mpz_class& k);

struct PlanSegment {
  enum class Kind { Stationary, Translation };
  Kind kind = Kind::Stationary;
  size_t count = 0;     // number of moves in this segment
  int j = 0;            // translation pivot particle (Translation only)
  mpz_class k;          // signed repetition count (Translation only)
};

struct Plan {
  size_t n = 0, d = 0;
  Configuration initial;    // absolute positions
  RealMatrix predicted;     // d x (n+1) absolute predicted finals
  PlanCertificate cert;     // zero-based certificate
  std::vector<Move> moves;
  std::vector<PlanSegment> segments;

  /// Provenance of move index i, derived from the segment table.
  const PlanSegment& provenance(size_t move_index) const;
};

/// Assembles stationary phase + translation gadgets (coordinates in
/// increasing order) and verifies by exact replay that the simulated finals
/// equal the certificate's predictions. p0 shifts the zero-based plan to
/// absolute coordinates (pass an all-zero vector for none).
Plan compile_plan(const RealMatrix& P, const PlanCertificate& cert,
                  const Effort& effort, const RealVector& p0);

/// Replays moves; on_step(index, move, configuration) is called after each
/// move when provided.
Configuration simulate(
    Configuration start, const std::vector<Move>& moves,
    const std::function<void(size_t, const Move&, const Configuration&)>& on_step = {});

struct VerifyReport {
  bool pass = false;
  bool undecided = false;  // precision insufficient to decide some particle
  std::string max_deviation;           // decimal
  std::vector<std::string> deviations;  // per particle, decimal
  std::string message;
};

/// Max particle distance to target <= eps, certified at the given precision.
VerifyReport verify(const Configuration& final_config, const RealMatrix& targets,
                    const Scalar& eps, long precision);

struct BfsResult {
  std::set<std::vector<long>> states;  // flattened (particle-major) coordinates
  bool hit_move_cap = false;
  bool overflowed = false;  // state cap reached; set is partial
};

/// Exhaustive reachability closure for small integer configurations, with
/// every coordinate confined to [-box, box].
BfsResult bfs_reachable(const std::vector<long>& initial_flat, size_t particles,
                        size_t dim, long box, size_t move_cap,
                        size_t state_cap = 2'000'000);

}  // namespace jumplan
