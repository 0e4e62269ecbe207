#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "entrolp/core.hpp"
#include "entrolp/errors.hpp"
#include "entrolp/lagrange.hpp"

namespace entrolp {

// ---------------------------------------------------------------------------
// Instance schema: { "p": [p_1 .. p_S], "cost": [[[c]]] } with cost[s][a][b]
// ---------------------------------------------------------------------------

inline ProblemInstance instance_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("p") || !j.contains("cost"))
    throw SolverError(ErrorCode::InvalidArgument,
                      "instance JSON needs \"p\" and \"cost\"");
  const auto& p = j.at("p");
  const auto& cost = j.at("cost");
  if (!p.is_array() || p.empty() || !cost.is_array() || cost.empty())
    throw SolverError(ErrorCode::InvalidArgument,
                      "\"p\" and \"cost\" must be nonempty arrays");

  ProblemInstance inst;
  inst.num_s = static_cast<int>(cost.size());
  if (static_cast<int>(p.size()) != inst.num_s)
    throw SolverError(ErrorCode::ShapeMismatch,
                      "\"p\" length must equal the number of cost slices");
  for (const auto& v : p) {
    if (!v.is_number())
      throw SolverError(ErrorCode::InvalidArgument, "prior entry not a number");
    inst.prior.push_back(v.get<double>());
  }

  const auto& first_state = cost.at(0);
  if (!first_state.is_array() || first_state.empty())
    throw SolverError(ErrorCode::InvalidArgument, "cost[s] must be an array");
  inst.num_a = static_cast<int>(first_state.size());
  const auto& first_row = first_state.at(0);
  if (!first_row.is_array() || first_row.empty())
    throw SolverError(ErrorCode::InvalidArgument, "cost[s][a] must be an array");
  inst.num_b = static_cast<int>(first_row.size());

  inst.cost = Tensor3(inst.num_s, inst.num_a, inst.num_b, 0.0);
  for (int s = 0; s < inst.num_s; ++s) {
    const auto& state = cost.at(s);
    if (!state.is_array() || static_cast<int>(state.size()) != inst.num_a)
      throw SolverError(ErrorCode::ShapeMismatch, "ragged cost tensor");
    for (int a = 0; a < inst.num_a; ++a) {
      const auto& row = state.at(a);
      if (!row.is_array() || static_cast<int>(row.size()) != inst.num_b)
        throw SolverError(ErrorCode::ShapeMismatch, "ragged cost tensor");
      for (int b = 0; b < inst.num_b; ++b) {
        const auto& v = row.at(b);
        if (!v.is_number())
          throw SolverError(ErrorCode::NonFiniteCost,
                            "cost entry not a finite number");
        inst.cost.at(s, a, b) = v.get<double>();
      }
    }
  }
  return inst;
}

inline nlohmann::json instance_to_json(const ProblemInstance& inst) {
  nlohmann::json j;
  j["p"] = inst.prior;
  auto cost = nlohmann::json::array();
  for (int s = 0; s < inst.num_s; ++s) {
    auto state = nlohmann::json::array();
    for (int a = 0; a < inst.num_a; ++a) {
      auto row = nlohmann::json::array();
      for (int b = 0; b < inst.num_b; ++b) row.push_back(inst.cost.at(s, a, b));
      state.push_back(std::move(row));
    }
    cost.push_back(std::move(state));
  }
  j["cost"] = std::move(cost);
  return j;
}

inline ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw SolverError(ErrorCode::InvalidArgument, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SolverError(ErrorCode::InvalidArgument,
                      std::string("JSON parse failure: ") + e.what());
  }
  return instance_from_json(j);
}

// ---------------------------------------------------------------------------
// Solve report
// ---------------------------------------------------------------------------

inline nlohmann::json policy_to_json(const JointPolicy& q) {
  auto arr = nlohmann::json::array();
  for (int s = 0; s < q.ns(); ++s) {
    auto state = nlohmann::json::array();
    for (int a = 0; a < q.na(); ++a) {
      auto row = nlohmann::json::array();
      for (int b = 0; b < q.nb(); ++b) row.push_back(q.at(s, a, b));
      state.push_back(std::move(row));
    }
    arr.push_back(std::move(state));
  }
  return arr;
}

inline nlohmann::json report_to_json(const SolveReport& report,
                                     bool include_timing = true) {
  nlohmann::json j;
  j["value"] = report.value;
  j["lambda"] = report.lambda;
  j["g"] = report.g_val;
  j["phase"] = to_string(report.phase);
  j["outer_iterations"] = report.outer_iterations;
  j["inner_iterations_total"] = report.inner_iterations_total;
  j["elapsed_s"] = include_timing ? report.elapsed_s : 0.0;
  j["policy"] = policy_to_json(report.policy);
  return j;
}

// ---------------------------------------------------------------------------
// Convergence traces
// ---------------------------------------------------------------------------

namespace detail {
inline void write_number(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}
}  // namespace detail

/// Outer trace: one row per bisection iteration.
inline void write_outer_trace_csv(std::ostream& os, const SolveReport& report,
                                  bool include_timing = true) {
  os << "k,lambda,value,g,residual,elapsed_s\n";
  for (const auto& rec : report.traces) {
    os << rec.k << ',';
    detail::write_number(os, rec.lambda);
    os << ',';
    detail::write_number(os, rec.value);
    os << ',';
    detail::write_number(os, rec.g_val);
    os << ',';
    detail::write_number(os, rec.residual);
    os << ',';
    detail::write_number(os, include_timing ? rec.elapsed_s : 0.0);
    os << '\n';
  }
}

/// Inner traces stacked with the outer iteration as the leading column.
inline void write_inner_trace_csv(std::ostream& os, const SolveReport& report,
                                  bool include_timing = true) {
  os << "k,n,F,residual,elapsed_s\n";
  for (std::size_t k = 0; k < report.inner_traces.size(); ++k)
    for (const auto& rec : report.inner_traces[k]) {
      os << k << ',' << rec.n << ',';
      detail::write_number(os, rec.objective_F);
      os << ',';
      detail::write_number(os, rec.residual);
      os << ',';
      detail::write_number(os, include_timing ? rec.elapsed_s : 0.0);
      os << '\n';
    }
}

/// Two-column whitespace files for plotting: iteration vs. outer step
/// distance, and elapsed time vs. outer step distance.
inline void write_plot_txt(const std::string& base, const SolveReport& report,
                           bool include_timing = true) {
  std::ofstream by_iter(base + "_iter_errorQ.txt");
  std::ofstream by_time(base + "_time_errorQ.txt");
  for (const auto& rec : report.traces) {
    by_iter << rec.k << ' ';
    detail::write_number(by_iter, rec.residual);
    by_iter << '\n';
    detail::write_number(by_time, include_timing ? rec.elapsed_s : 0.0);
    by_time << ' ';
    detail::write_number(by_time, rec.residual);
    by_time << '\n';
  }
}

}  // namespace entrolp
