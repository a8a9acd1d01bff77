// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "jumplan/cli.hpp"
#include "jumplan/io.hpp"

using namespace jumplan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("jumplan_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

const char* kInstance1d = R"json({
  "d": 1, "n": 2,
  "positions": [["0"], ["1"], ["sqrt(2)"]],
  "targets": [["4"], ["6"], ["17/2"]],
  "eps": "1/100"
})json";

}  // namespace

TEST_CASE("instance parsing") {
  Instance inst = instance_from_json(nlohmann::json::parse(kInstance1d));
  CHECK(inst.d == 1);
  CHECK(inst.n == 2);
  CHECK(inst.positions.pos.size() == 3);
  REQUIRE(inst.targets.has_value());
  CHECK(inst.eps.equals_exact(Scalar(mpq_class(1, 100))));
  RealMatrix P = relative_matrix(inst);
  CHECK(P.at(0, 0).equals_exact(Scalar(1)));
  CHECK((P.at(0, 1) - parse_scalar("sqrt(2)")).sign() == 0);

  CHECK_THROWS(instance_from_json(nlohmann::json::parse(R"json({"d":1,"n":2,"positions":[["0"]]})json")));
}

TEST_CASE("matrix json round trip") {
  IntMatrix m(2, 2);
  m.at(0, 0) = 1;
  m.at(0, 1) = 2;
  m.at(1, 0) = 2;
  m.at(1, 1) = 5;
  nlohmann::json j = int_matrix_to_json(m);
  CHECK(int_matrix_from_json(j) == m);
  // wrapped form with big entries
  nlohmann::json wrapped;
  wrapped["matrix"] = nlohmann::json::array(
      {nlohmann::json::array({"123456789012345678901234567890", "0"}),
       nlohmann::json::array({"0", "1"})});
  IntMatrix big = int_matrix_from_json(wrapped);
  CHECK(big.at(0, 0) == mpz_class("123456789012345678901234567890"));
}

TEST_CASE("plan file round trip with streaming reader") {
  TempDir tmp;
  Instance inst = instance_from_json(nlohmann::json::parse(kInstance1d));
  RealMatrix P = relative_matrix(inst);
  Effort eff;
  PlannerOptions opts;

  RealMatrix targets0(1, 3);
  for (size_t j = 0; j < 3; ++j) targets0.at(0, j) = inst.targets->at(0, j);
  PlanCertificate cert = plan_certificate(P, targets0, inst.eps, eff, opts);
  RealVector p0(1, Scalar(0));
  Plan plan = compile_plan(P, cert, eff, p0);

  std::string path = tmp.file("plan.json");
  write_plan_file(path, plan, inst);

  std::vector<Move> replayed;
  PlanHeader h = read_plan_file(path, [&](const Move& m) { replayed.push_back(m); });
  CHECK(h.n == 2);
  CHECK(h.d == 1);
  CHECK(h.move_count == plan.moves.size());
  CHECK(replayed.size() == plan.moves.size());
  for (size_t i = 0; i < replayed.size(); ++i) CHECK(replayed[i] == plan.moves[i]);
  CHECK(h.cert.A0 == cert.A0);
  CHECK(h.cert.w0 == cert.w0);
  CHECK(h.cert.wprime == cert.wprime);
  REQUIRE(h.cert.steps_tracked);
  CHECK(product_in_order(h.cert.a0_steps, 2) == cert.A0);
  // predicted finals survive the expression round trip exactly
  for (size_t j = 0; j < 3; ++j)
    CHECK((h.predicted.at(0, j) - plan.predicted.at(0, j)).sign() == 0);
}

TEST_CASE("cli round trip: plan then simulate") {
  TempDir tmp;
  std::string inst_path = tmp.file("inst.json");
  std::string plan_path = tmp.file("plan.json");
  write_file(inst_path, kInstance1d);

  cli::Options opt;
  std::ostringstream out, err;
  int rc = cli::cmd_plan(inst_path, plan_path, opt, out, err);
  CHECK(rc == 0);
  INFO(err.str());
  // two JSON lines: the estimate and the summary
  std::istringstream lines(out.str());
  std::string line1, line2;
  std::getline(lines, line1);
  std::getline(lines, line2);
  auto est = nlohmann::json::parse(line1);
  CHECK(est.contains("estimated_moves"));
  auto summary = nlohmann::json::parse(line2);
  CHECK(summary.at("replay") == "exact");
  CHECK(est.at("estimated_moves").get<size_t>() == summary.at("moves").get<size_t>());

  std::ostringstream out2, err2;
  rc = cli::cmd_simulate(plan_path, "csv", tmp.file("traj.csv"), opt, out2, err2);
  CHECK(rc == 0);
  auto rep = nlohmann::json::parse(out2.str());
  CHECK(rep.at("pass").get<bool>());
  CHECK(rep.at("replay_exact").get<bool>());
  CHECK(fs::exists(tmp.file("traj.csv")));
  // csv rows: header + 3 initial + one per move
  std::ifstream csv(tmp.file("traj.csv"));
  size_t rows = 0;
  std::string row;
  while (std::getline(csv, row)) ++rows;
  CHECK(rows == 1 + 3 + rep.at("moves").get<size_t>());

  SUBCASE("tampered plan fails verification") {
    // swap a move's pivot: replay no longer matches the predictions
    std::ifstream in(plan_path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    size_t pos = text.find("{\"jumper\":1,\"over\":0}");
    if (pos == std::string::npos) pos = text.find("{\"jumper\":2,\"over\":0}");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 21, "{\"jumper\":1,\"over\":2}");
    write_file(plan_path, text);
    std::ostringstream out3, err3;
    rc = cli::cmd_simulate(plan_path, "", "", opt, out3, err3);
    CHECK(rc != 0);
  }
}

TEST_CASE("cli check exit codes") {
  TempDir tmp;
  cli::Options opt;

  std::string rational = tmp.file("rational.json");
  write_file(rational, R"json({"d":1,"n":2,"positions":[["0"],["1/2"],["1/3"]]})json");
  std::ostringstream o1, e1;
  CHECK(cli::cmd_check({rational}, opt, o1, e1) == cli::kExitNotDense);
  auto v1 = nlohmann::json::parse(o1.str());
  CHECK(v1.at("verdict") == "not_dense");
  CHECK(v1.at("exact").get<bool>());

  std::string surd = tmp.file("surd.json");
  write_file(surd, R"json({"d":1,"n":2,"positions":[["0"],["1"],["sqrt(2)"]]})json");
  std::ostringstream o2, e2;
  CHECK(cli::cmd_check({surd}, opt, o2, e2) == cli::kExitDense);

  std::string small = tmp.file("small.json");
  write_file(small, R"json({"d":1,"n":1,"positions":[["0"],["1"]]})json");
  std::ostringstream o3, e3;
  CHECK(cli::cmd_check({small}, opt, o3, e3) == cli::kExitNotDense);

  // batch with --jobs: all three, worst verdict wins
  cli::Options jopt;
  jopt.jobs = 3;
  std::ostringstream o4, e4;
  CHECK(cli::cmd_check({rational, surd, small}, jopt, o4, e4) == cli::kExitNotDense);
  std::istringstream lines(o4.str());
  std::string line;
  size_t count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 3);
}

TEST_CASE("cli factor") {
  TempDir tmp;
  cli::Options opt;

  std::string good = tmp.file("good.json");
  write_file(good, R"json([["1","2"],["2","5"]])json");
  std::ostringstream o1, e1;
  CHECK(cli::cmd_factor(good, opt, o1, e1) == 0);
  auto j1 = nlohmann::json::parse(o1.str());
  CHECK(j1.at("good").get<bool>());
  CHECK(j1.at("count").get<size_t>() == 2);

  std::string id = tmp.file("id.json");
  write_file(id, R"json([["1","0"],["0","1"]])json");
  std::ostringstream o2, e2;
  CHECK(cli::cmd_factor(id, opt, o2, e2) == 0);
  CHECK(nlohmann::json::parse(o2.str()).at("count").get<size_t>() == 0);

  std::string bad = tmp.file("bad.json");
  write_file(bad, R"json([["1","1"],["0","1"]])json");
  std::ostringstream o3, e3;
  CHECK(cli::cmd_factor(bad, opt, o3, e3) == cli::kExitNotDense);
  auto j3 = nlohmann::json::parse(o3.str());
  CHECK(!j3.at("good").get<bool>());
  CHECK(j3.at("message") == "not good");
}

TEST_CASE("svg export for a toy 2D trajectory") {
  TempDir tmp;
  Configuration c;
  c.dim = 2;
  c.pos = {RealVector{Scalar(0), Scalar(0)}, RealVector{Scalar(1), Scalar(0)},
           RealVector{Scalar(0), Scalar(1)}};
  SvgTrajectoryWriter svg(c, 64);
  Configuration c2 = apply_move(c, Move{1, 0});
  svg.on_move(0, Move{1, 0}, c2);
  std::string path = tmp.file("traj.svg");
  svg.write(path);
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str().find("<svg") != std::string::npos);
  CHECK(buf.str().find("polyline") != std::string::npos);
}
