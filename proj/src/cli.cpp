// SPDX-License-Identifier: Apache-2.0

#include "jumplan/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <iostream>
#include <mutex>
#include <thread>

#include "jumplan/io.hpp"

namespace jumplan::cli {

namespace {

using nlohmann::json;

void apply_overrides(Instance& inst, const Options& opt) {
  if (opt.eps) inst.eps = parse_scalar(*opt.eps);
  if (opt.precision) {
    inst.precision = *opt.precision;
    inst.effort.precision_bits = *opt.precision;
  }
  if (opt.effort_radius) inst.effort.enum_radius = *opt.effort_radius;
  if (opt.effort_steps) inst.effort.scale_attempts = *opt.effort_steps;
  if (opt.seed) inst.seed = *opt.seed;
}

int verdict_exit(const DensityVerdict& v) {
  switch (v.kind) {
    case DensityVerdict::Kind::Dense:
      return kExitDense;
    case DensityVerdict::Kind::NotDense:
      return kExitNotDense;
    case DensityVerdict::Kind::Unknown:
      return kExitUnknown;
  }
  return kExitError;
}

}  // namespace

int cmd_check(const std::vector<std::string>& instance_paths, const Options& opt,
              std::ostream& out, std::ostream& err) {
  struct Row {
    json payload;
    int code = kExitError;
  };
  std::vector<Row> rows(instance_paths.size());
  std::atomic<size_t> next{0};
  std::mutex err_mutex;

  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= instance_paths.size()) return;
      Row& row = rows[i];
      try {
        Instance inst = load_instance(instance_paths[i]);
        apply_overrides(inst, opt);
        RealMatrix P = relative_matrix(inst);
        DensityVerdict v = density_certificate(P, inst.effort, inst.eps);
        row.payload = verdict_to_json(v, inst.precision);
        row.payload["instance"] = instance_paths[i];
        row.code = verdict_exit(v);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(err_mutex);
        err << "error: " << instance_paths[i] << ": " << e.what() << "\n";
        row.payload = json{{"instance", instance_paths[i]}, {"error", e.what()}};
        row.code = kExitError;
      }
    }
  };

  size_t nthreads = std::max(1, std::min<int>(opt.jobs, static_cast<int>(instance_paths.size())));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  int code = kExitDense;
  for (const auto& row : rows) {
    out << row.payload.dump() << "\n";
    if (row.code == kExitError) return kExitError;
    if (row.code == kExitUnknown) code = kExitUnknown;
    if (row.code == kExitNotDense && code != kExitUnknown) code = kExitNotDense;
  }
  return code;
}

int cmd_plan(const std::string& instance_path, const std::string& out_path,
             const Options& opt, std::ostream& out, std::ostream& err) {
  try {
    Instance inst = load_instance(instance_path);
    apply_overrides(inst, opt);
    if (!inst.targets) {
      err << "error: instance has no targets\n";
      return kExitError;
    }
    RealMatrix P = relative_matrix(inst);
    Validation val = validate_instance(P);
    if (!val.ok) {
      err << "error: instance rejected: " << val.reason << "\n";
      return kExitNotDense;
    }

    // zero-based targets: q_i - p_0
    const RealVector& p0 = inst.positions.pos[0];
    RealMatrix targets0(inst.d, inst.n + 1);
    for (size_t j = 0; j <= inst.n; ++j)
      for (size_t i = 0; i < inst.d; ++i)
        targets0.at(i, j) = inst.targets->at(i, j) - p0[i];

    PlannerOptions popts;
    popts.precision = inst.precision;
    PlanCertificate cert = plan_certificate(P, targets0, inst.eps, inst.effort, popts);

    json pre;
    auto est = estimated_move_count(cert, inst.n);
    pre["estimated_moves"] = est ? json(*est) : json(nullptr);
    out << pre.dump() << "\n";

    Plan plan = compile_plan(P, cert, inst.effort, p0);
    write_plan_file(out_path, plan, inst);

    json summary;
    summary["plan"] = out_path;
    summary["moves"] = plan.moves.size();
    summary["eps"] = cert.eps.to_expression();
    {
      json w0 = json::array(), wp = json::array();
      for (const auto& x : cert.w0) w0.push_back(x.get_str());
      for (const auto& x : cert.wprime) wp.push_back(x.get_str());
      summary["w0"] = std::move(w0);
      summary["wprime"] = std::move(wp);
    }
    summary["stationary_steps"] = cert.a0_steps.size();
    summary["replay"] = "exact";
    out << summary.dump() << "\n";
    return 0;
  } catch (const EffortExhausted& e) {
    err << "error: effort exhausted: " << e.what() << "\n";
    return kExitEffort;
  } catch (const std::length_error& e) {
    err << "error: move budget exceeded while factoring the plan (" << e.what()
        << "); raise effort.move_budget or loosen eps\n";
    return kExitEffort;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

int cmd_simulate(const std::string& plan_path, const std::string& export_kind,
                 const std::string& export_path, const Options& opt, std::ostream& out,
                 std::ostream& err) {
  try {
    // first pass over the header only, to set up the simulation state
    PlanHeader probe = read_plan_header(plan_path);
    long precision = opt.precision.value_or(probe.precision);

    Configuration state = probe.initial;
    std::unique_ptr<CsvTrajectoryWriter> csv;
    std::unique_ptr<SvgTrajectoryWriter> svg;
    if (export_kind == "csv") {
      csv = std::make_unique<CsvTrajectoryWriter>(export_path, state, precision);
    } else if (export_kind == "svg") {
      svg = std::make_unique<SvgTrajectoryWriter>(state, precision);
    } else if (!export_kind.empty()) {
      err << "error: unknown export format: " << export_kind << "\n";
      return kExitError;
    }

    size_t step = 0;
    read_plan_file(plan_path, [&](const Move& m) {
      apply_move_inplace(state, m);
      if (csv) csv->on_move(step, m, state);
      if (svg) svg->on_move(step, m, state);
      ++step;
    });
    if (csv) csv->close();
    if (svg) svg->write(export_path);

    // exact replay against the predicted finals
    bool replay_exact = true;
    for (size_t j = 0; j <= probe.n && replay_exact; ++j) {
      for (size_t i = 0; i < probe.d; ++i) {
        Scalar diff = state.pos[j][i] - probe.predicted.at(i, j);
        if (diff.form()) {
          if (!diff.form()->is_zero()) replay_exact = false;
        } else {
          try {
            if (diff.sign(1024) != 0) replay_exact = false;
          } catch (const PrecisionExhausted&) {
          }
        }
      }
    }

    const RealMatrix& targets = probe.targets ? *probe.targets : probe.predicted;
    Scalar eps = opt.eps ? parse_scalar(*opt.eps) : probe.eps;
    VerifyReport rep = verify(state, targets, eps, precision);

    json j;
    j["plan"] = plan_path;
    j["moves"] = step;
    j["replay_exact"] = replay_exact;
    j["verified_against"] = probe.targets ? "targets" : "predicted_finals";
    j["eps"] = eps.to_expression();
    j["pass"] = rep.pass;
    j["undecided"] = rep.undecided;
    j["max_deviation"] = rep.max_deviation;
    j["per_particle_deviation"] = rep.deviations;
    if (!export_kind.empty()) j["export"] = export_path;
    out << j.dump() << "\n";
    if (rep.undecided) return kExitUnknown;
    return rep.pass && replay_exact ? 0 : kExitNotDense;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

int cmd_factor(const std::string& matrix_path, const Options&, std::ostream& out,
               std::ostream& err) {
  try {
    IntMatrix m = load_int_matrix(matrix_path);
    json j;
    if (!is_good(m)) {
      j["good"] = false;
      j["message"] = "not good";
      out << j.dump() << "\n";
      return kExitNotDense;
    }
    StepList steps = factor_good(m);
    j["good"] = true;
    j["steps"] = step_list_to_json(steps);
    j["count"] = steps.size();
    out << j.dump() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

int run_main(int argc, char** argv) {
  CLI::App app{"decide density of G(P) and synthesize jump-move plans"};
  app.require_subcommand(1);

  Options opt;
  std::string eps_str, export_kind, out_path;
  std::vector<std::string> instances;
  std::string instance, plan_path, matrix_path;
  long precision = 0, radius = 0;
  int steps = 0;
  unsigned long seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--eps", eps_str, "tolerance (expression, e.g. 1/1000)");
    sub->add_option("--precision", precision, "working precision in bits");
    sub->add_option("--effort-radius", radius, "enumeration radius");
    sub->add_option("--effort-steps", steps, "search escalation attempts");
    sub->add_option("--seed", seed, "seed recorded for reproducibility");
    sub->add_option("--jobs", opt.jobs, "parallel jobs for batch commands");
  };

  CLI::App* check = app.add_subcommand("check", "density certificate for instances");
  check->add_option("instance", instances, "instance JSON file(s)")->required();
  add_common(check);

  CLI::App* plan = app.add_subcommand("plan", "synthesize a move plan");
  plan->add_option("instance", instance, "instance JSON file")->required();
  plan->add_option("--out", out_path, "output plan file")->required();
  add_common(plan);

  CLI::App* sim = app.add_subcommand("simulate", "replay and verify a plan");
  sim->add_option("plan", plan_path, "plan JSON file")->required();
  sim->add_option("--export", export_kind, "trajectory export: csv or svg");
  sim->add_option("--out", out_path, "export output path");
  add_common(sim);

  CLI::App* factor = app.add_subcommand("factor", "factor a good matrix into steps");
  factor->add_option("matrix", matrix_path, "matrix JSON file")->required();
  add_common(factor);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (!eps_str.empty()) opt.eps = eps_str;
  if (precision > 0) opt.precision = precision;
  if (radius > 0) opt.effort_radius = radius;
  if (steps > 0) opt.effort_steps = steps;
  if (seed != 0) opt.seed = seed;

  if (check->parsed()) return cmd_check(instances, opt, std::cout, std::cerr);
  if (plan->parsed()) return cmd_plan(instance, out_path, opt, std::cout, std::cerr);
  if (sim->parsed()) {
    std::string export_out = out_path;
    if (!export_kind.empty() && export_out.empty())
      export_out = plan_path + "." + export_kind;
    return cmd_simulate(plan_path, export_kind, export_out, opt, std::cout, std::cerr);
  }
  if (factor->parsed()) return cmd_factor(matrix_path, opt, std::cout, std::cerr);
  return kExitError;
}

}  // namespace jumplan::cli
