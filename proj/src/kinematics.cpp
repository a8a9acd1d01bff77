// SPDX-License-Identifier: Apache-2.0

#include "jumplan/kinematics.hpp"

#include <algorithm>
#include <deque>

namespace jumplan {

Configuration apply_move(const Configuration& c, const Move& m) {
  Configuration out = c;
  apply_move_inplace(out, m);
  return out;
}

void apply_move_inplace(Configuration& c, const Move& m) {
  size_t np = c.particles();
  if (m.jumper < 0 || m.over < 0 || static_cast<size_t>(m.jumper) >= np ||
      static_cast<size_t>(m.over) >= np || m.jumper == m.over)
    throw std::out_of_range("apply_move: bad particle index");
  RealVector& pj = c.pos[m.jumper];
  const RealVector& po = c.pos[m.over];
  for (size_t i = 0; i < c.dim; ++i) pj[i] = Scalar(2) * po[i] - pj[i];
}

Configuration configuration_from_matrix(const RealMatrix& P) {
  Configuration c;
  c.dim = P.rows;
  c.pos.resize(P.cols + 1, RealVector(P.rows, Scalar(0)));
  for (size_t j = 0; j < P.cols; ++j) c.pos[j + 1] = P.col(j);
  return c;
}

std::vector<Move> compile_stationary(const StepList& steps) {
  std::vector<Move> moves;
  moves.reserve(2 * steps.size());
  for (const auto& s : steps) {
    auto [first, second] = step_to_elementary(s);
    for (const ElementaryDescriptor& e : {first, second}) {
      if (e.type == ElementaryDescriptor::Type::First) {
        moves.push_back(Move{e.i, 0});
      } else {
        moves.push_back(Move{e.i, e.j});
      }
    }
  }
  return moves;
}

std::vector<Move> translation_gadget(size_t n, int j, const mpz_class& k) {
  if (n < 1) throw std::invalid_argument("translation_gadget: need n >= 1");
  if (j < 1 || static_cast<size_t>(j) > n)
    throw std::invalid_argument("translation_gadget: pivot out of range");
  std::vector<Move> unit;
  unit.push_back(Move{0, j});
  unit.push_back(Move{j, 0});
  for (int i = 1; i <= static_cast<int>(n); ++i) {
    if (i == j) continue;
    unit.push_back(Move{i, 0});
    unit.push_back(Move{i, j});
  }
  if (k < 0) std::reverse(unit.begin(), unit.end());

  mpz_class reps = abs(k);
  if (!reps.fits_ulong_p())
    throw std::length_error("translation_gadget: repetition count too large");
  std::vector<Move> moves;
  size_t r = reps.get_ui();
  moves.reserve(unit.size() * r);
  for (size_t t = 0; t < r; ++t)
    moves.insert(moves.end(), unit.begin(), unit.end());
  return moves;
}

std::vector<Move> translation_gadget(const Configuration& c, int j, const mpz_class& k) {
  if (c.particles() < 2) throw std::invalid_argument("translation_gadget: need n >= 1");
  return translation_gadget(c.particles() - 1, j, k);
}

const PlanSegment& Plan::provenance(size_t move_index) const {
  size_t off = 0;
  for (const auto& seg : segments) {
    if (move_index < off + seg.count) return seg;
    off += seg.count;
  }
  throw std::out_of_range("Plan::provenance: move index out of range");
}

Configuration simulate(
    Configuration start, const std::vector<Move>& moves,
    const std::function<void(size_t, const Move&, const Configuration&)>& on_step) {
  for (size_t i = 0; i < moves.size(); ++i) {
    apply_move_inplace(start, moves[i]);
    if (on_step) on_step(i, moves[i], start);
  }
  return start;
}

namespace {

bool positions_equal(const RealVector& a, const RealVector& b, long bits) {
  for (size_t i = 0; i < a.size(); ++i) {
    const Scalar d = a[i] - b[i];
    if (d.form()) {
      if (!d.form()->is_zero()) return false;
    } else {
      // non-fragment: equality is only refutable
      try {
        if (d.sign(bits) != 0) return false;
      } catch (const PrecisionExhausted&) {
      }
    }
  }
  return true;
}

}  // namespace

Plan compile_plan(const RealMatrix& P, const PlanCertificate& cert,
                  const Effort& effort, const RealVector& p0) {
  size_t n = P.cols, d = P.rows;
  if (p0.size() != d) throw std::invalid_argument("compile_plan: p0 dimension mismatch");
  if (cert.A0.rows() != n || cert.wprime.size() != n)
    throw std::invalid_argument("compile_plan: certificate size mismatch");
  if (cert.A0 * cert.wprime != cert.w0)
    throw std::invalid_argument("compile_plan: certificate inconsistent (A0 w' != w0)");

  StepList steps;
  if (cert.steps_tracked && product_in_order(cert.a0_steps, n) == cert.A0) {
    steps = cert.a0_steps;
  } else {
    steps = factor_good(cert.A0);
  }

  // move budget: 2 per step + 2n per translation repetition
  {
    mpz_class total = 2 * static_cast<unsigned long>(steps.size());
    for (const auto& wj : cert.wprime)
      total += 2 * static_cast<long>(n) * abs(wj);
    if (total > static_cast<unsigned long>(effort.move_budget))
      throw EffortExhausted("compile_plan: plan of " + total.get_str() +
                            " moves exceeds the move budget " +
                            std::to_string(effort.move_budget));
  }

  Plan plan;
  plan.n = n;
  plan.d = d;
  plan.cert = cert;
  plan.moves = compile_stationary(steps);
  if (!plan.moves.empty())
    plan.segments.push_back(
        PlanSegment{PlanSegment::Kind::Stationary, plan.moves.size(), 0, 0});
  for (size_t j = 1; j <= n; ++j) {
    const mpz_class& k = cert.wprime[j - 1];
    if (k == 0) continue;
    std::vector<Move> g = translation_gadget(n, static_cast<int>(j), k);
    plan.segments.push_back(
        PlanSegment{PlanSegment::Kind::Translation, g.size(), static_cast<int>(j), k});
    plan.moves.insert(plan.moves.end(), g.begin(), g.end());
  }

  // absolute initial and predicted configurations
  plan.initial = configuration_from_matrix(P);
  for (auto& pos : plan.initial.pos)
    for (size_t i = 0; i < d; ++i) pos[i] = pos[i] + p0[i];
  plan.predicted = RealMatrix(d, n + 1);
  for (size_t j = 0; j <= n; ++j)
    for (size_t i = 0; i < d; ++i)
      plan.predicted.at(i, j) = cert.predicted.at(i, j) + p0[i];

  // exact replay: the simulated finals must land on the predictions
  Configuration final_config = simulate(plan.initial, plan.moves);
  for (size_t j = 0; j <= n; ++j) {
    if (!positions_equal(final_config.pos[j], plan.predicted.col(j), 1024))
      throw std::logic_error("compile_plan: particle " + std::to_string(j) +
                             " missed its predicted final under exact replay");
  }
  return plan;
}

VerifyReport verify(const Configuration& final_config, const RealMatrix& targets,
                    const Scalar& eps, long precision) {
  VerifyReport rep;
  if (targets.cols != final_config.particles() || targets.rows != final_config.dim) {
    rep.message = "shape mismatch between configuration and targets";
    return rep;
  }
  Scalar eps_sq = eps * eps;
  Scalar max_dev_sq(0);
  bool all_ok = true;
  for (size_t j = 0; j < final_config.particles(); ++j) {
    RealVector diff(final_config.dim);
    for (size_t i = 0; i < final_config.dim; ++i)
      diff[i] = final_config.pos[j][i] - targets.at(i, j);
    Scalar dsq = norm_squared(diff);
    try {
      if (cmp(dsq, eps_sq, 2 * precision) > 0) all_ok = false;
      if (cmp(dsq, max_dev_sq, 2 * precision) > 0) max_dev_sq = dsq;
    } catch (const PrecisionExhausted&) {
      rep.undecided = true;
    }
    rep.deviations.push_back(Scalar::sqrt(dsq).to_decimal(precision, 8));
  }
  rep.pass = all_ok && !rep.undecided;
  rep.max_deviation = Scalar::sqrt(max_dev_sq).to_decimal(precision, 8);
  if (rep.undecided)
    rep.message = "precision insufficient to decide some particle";
  else
    rep.message = rep.pass ? "all particles within eps" : "some particle exceeds eps";
  return rep;
}

BfsResult bfs_reachable(const std::vector<long>& initial_flat, size_t particles,
                        size_t dim, long box, size_t move_cap, size_t state_cap) {
  if (initial_flat.size() != particles * dim)
    throw std::invalid_argument("bfs_reachable: shape mismatch");
  BfsResult out;
  auto in_box = [&](const std::vector<long>& s) {
    return std::all_of(s.begin(), s.end(),
                       [&](long x) { return x >= -box && x <= box; });
  };
  if (!in_box(initial_flat)) return out;
  out.states.insert(initial_flat);
  std::deque<std::vector<long>> frontier{initial_flat};
  size_t depth = 0;
  while (!frontier.empty() && depth < move_cap) {
    std::deque<std::vector<long>> next;
    for (const auto& s : frontier) {
      for (size_t a = 0; a < particles; ++a) {
        for (size_t b = 0; b < particles; ++b) {
          if (a == b) continue;
          std::vector<long> t = s;
          bool ok = true;
          for (size_t i = 0; i < dim; ++i) {
            long v = 2 * s[b * dim + i] - s[a * dim + i];
            if (v < -box || v > box) {
              ok = false;
              break;
            }
            t[a * dim + i] = v;
          }
          if (!ok) continue;
          if (out.states.size() >= state_cap) {
            out.overflowed = true;
            return out;
          }
          if (out.states.insert(t).second) next.push_back(std::move(t));
        }
      }
    }
    frontier = std::move(next);
    ++depth;
  }
  out.hit_move_cap = !frontier.empty();
  return out;
}

}  // namespace jumplan
