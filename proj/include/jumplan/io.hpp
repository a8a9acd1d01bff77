// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include "jumplan/kinematics.hpp"

namespace jumplan {

/// On-disk problem instance. Positions are absolute (particle 0 included);
/// every number is an expression string in the scalar grammar.
struct Instance {
  size_t d = 0, n = 0;
  Configuration positions;
  std::optional<RealMatrix> targets;  // d x (n+1), absolute
  Scalar eps{mpq_class(1, 1000)};
  Effort effort;
  long precision = kDefaultPrecision;
  unsigned long seed = 0;
};

Instance instance_from_json(const nlohmann::json& j);
Instance load_instance(const std::string& path);

/// Columns p_i - p_0 (the paper's P).
RealMatrix relative_matrix(const Instance& inst);

IntMatrix int_matrix_from_json(const nlohmann::json& j);
IntMatrix load_int_matrix(const std::string& path);
nlohmann::json int_matrix_to_json(const IntMatrix& m);

nlohmann::json verdict_to_json(const DensityVerdict& v, long precision);
nlohmann::json certificate_to_json(const PlanCertificate& cert);
PlanCertificate certificate_from_json(const nlohmann::json& j);
nlohmann::json step_list_to_json(const StepList& steps);
StepList step_list_from_json(const nlohmann::json& j, int n);

/// Writes the plan file: a single JSON document with a "header" object and a
/// streamed "moves" array.
void write_plan_file(const std::string& path, const Plan& plan, const Instance& inst);

struct PlanHeader {
  size_t n = 0, d = 0;
  Scalar eps;
  long precision = kDefaultPrecision;
  size_t move_count = 0;
  Configuration initial;
  RealMatrix predicted;  // absolute
  std::optional<RealMatrix> targets;
  PlanCertificate cert;
  std::vector<PlanSegment> segments;
};

/// Streams a plan file: the header is parsed up front, then on_move is
/// invoked once per move without materializing the array.
PlanHeader read_plan_file(const std::string& path,
                          const std::function<void(const Move&)>& on_move);
/// Header only; does not touch the move array.
PlanHeader read_plan_header(const std::string& path);

/// Trajectory export: step 0 lists every particle, then one row per move
/// with the moved particle's new coordinates.
class CsvTrajectoryWriter {
 public:
  CsvTrajectoryWriter(const std::string& path, const Configuration& initial,
                      long precision, size_t digits = 12);
  void on_move(size_t step, const Move& m, const Configuration& c);
  void close();
  ~CsvTrajectoryWriter();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// d = 2 only: one polyline per particle.
class SvgTrajectoryWriter {
 public:
  SvgTrajectoryWriter(const Configuration& initial, long precision);
  void on_move(size_t step, const Move& m, const Configuration& c);
  void write(const std::string& path);

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace jumplan
