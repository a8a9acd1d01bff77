// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace jumplan::cli {

// exit codes shared with scripts
inline constexpr int kExitDense = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotDense = 2;
inline constexpr int kExitUnknown = 3;
inline constexpr int kExitEffort = 4;

struct Options {
  std::optional<std::string> eps;
  std::optional<long> precision;
  std::optional<long> effort_radius;
  std::optional<int> effort_steps;
  std::optional<unsigned long> seed;
  int jobs = 1;
};

int cmd_check(const std::vector<std::string>& instance_paths, const Options& opt,
              std::ostream& out, std::ostream& err);
int cmd_plan(const std::string& instance_path, const std::string& out_path,
             const Options& opt, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::string& plan_path, const std::string& export_kind,
                 const std::string& export_path, const Options& opt, std::ostream& out,
                 std::ostream& err);
int cmd_factor(const std::string& matrix_path, const Options& opt, std::ostream& out,
               std::ostream& err);

int run_main(int argc, char** argv);

}  // namespace jumplan::cli
