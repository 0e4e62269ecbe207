#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "entrolp/entrolp.hpp"
#include "test_support.hpp"

using namespace entrolp;

TEST_CASE("instance JSON round trip is exact") {
  ProblemInstance inst = testsupport::random_instance(19, 3, 4, 2);
  nlohmann::json j = instance_to_json(inst);
  ProblemInstance back = instance_from_json(j);
  CHECK(back.cost == inst.cost);
  CHECK(back.prior == inst.prior);
  CHECK(back.num_a == 3);
  CHECK(back.num_b == 4);
  CHECK(back.num_s == 2);

  // and through a serialized string as well
  ProblemInstance again = instance_from_json(nlohmann::json::parse(j.dump()));
  CHECK(again.cost == inst.cost);
}

TEST_CASE("instance JSON rejects malformed documents") {
  CHECK_THROWS_AS(instance_from_json(nlohmann::json::parse("{}")),
                  SolverError);
  CHECK_THROWS_AS(
      instance_from_json(nlohmann::json::parse(R"({"p":[1.0]})")),
      SolverError);
  // ragged cost rows
  CHECK_THROWS_AS(instance_from_json(nlohmann::json::parse(
                      R"({"p":[1.0],"cost":[[[0,1],[2]]]})")),
                  SolverError);
  // non-numeric entry
  CHECK_THROWS_AS(instance_from_json(nlohmann::json::parse(
                      R"({"p":[1.0],"cost":[[[0,"x"],[2,3]]]})")),
                  SolverError);
  // prior length mismatch
  CHECK_THROWS_AS(instance_from_json(nlohmann::json::parse(
                      R"({"p":[0.5,0.5],"cost":[[[0,1],[2,3]]]})")),
                  SolverError);
}

TEST_CASE("load_instance reads files and reports unreadable paths") {
  std::string path = "io_test_instance.json";
  {
    std::ofstream out(path);
    out << instance_to_json(ghn_instance()).dump();
  }
  ProblemInstance inst = load_instance(path);
  CHECK(inst.cost == ghn_instance().cost);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_instance("does_not_exist.json"), SolverError);

  {
    std::ofstream out(path);
    out << "{not json";
  }
  CHECK_THROWS_AS(load_instance(path), SolverError);
  std::remove(path.c_str());
}

TEST_CASE("report JSON carries exactly the published fields") {
  SolveReport report = full_solve(ghn_instance());
  nlohmann::json j = report_to_json(report);

  CHECK(j.size() == 8);
  for (const char* key :
       {"value", "lambda", "g", "phase", "outer_iterations",
        "inner_iterations_total", "elapsed_s", "policy"})
    CHECK(j.contains(key));

  CHECK(j["phase"] == "Active");
  CHECK(j["policy"].size() == 2);
  CHECK(j["policy"][0].size() == 2);
  CHECK(j["policy"][0][0].size() == 2);
  CHECK(j["value"].get<double>() == report.value);

  SECTION("timing can be suppressed for reproducible output") {
    nlohmann::json quiet = report_to_json(report, false);
    CHECK(quiet["elapsed_s"] == 0.0);
  }
}

TEST_CASE("trace CSV headers and shapes") {
  SolveReport report = full_solve(ghn_instance());

  std::ostringstream outer;
  write_outer_trace_csv(outer, report, false);
  std::istringstream outer_in(outer.str());
  std::string line;
  REQUIRE(std::getline(outer_in, line));
  CHECK(line == "k,lambda,value,g,residual,elapsed_s");
  int rows = 0;
  while (std::getline(outer_in, line)) ++rows;
  CHECK(rows == report.outer_iterations);

  std::ostringstream inner;
  write_inner_trace_csv(inner, report, false);
  std::istringstream inner_in(inner.str());
  REQUIRE(std::getline(inner_in, line));
  CHECK(line == "k,n,F,residual,elapsed_s");
  long inner_rows = 0;
  while (std::getline(inner_in, line)) ++inner_rows;
  CHECK(inner_rows == report.inner_iterations_total);

  SECTION("timing suppression is deterministic") {
    std::ostringstream again;
    write_outer_trace_csv(again, report, false);
    CHECK(again.str() == outer.str());
  }
}

TEST_CASE("plot txt files are two-column and row-aligned") {
  SolveReport report = full_solve(ghn_instance());
  write_plot_txt("io_test_plot", report, false);
  for (const char* name :
       {"io_test_plot_iter_errorQ.txt", "io_test_plot_time_errorQ.txt"}) {
    std::ifstream in(name);
    REQUIRE(in.good());
    std::string line;
    long rows = 0;
    while (std::getline(in, line)) {
      double x, y;
      std::istringstream row(line);
      CHECK((row >> x >> y));
      ++rows;
    }
    CHECK(rows == report.outer_iterations);
    std::remove(name);
  }
}
