#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace adenoise {

struct NelderMeadOptions {
  int max_iter = 2000;
  /// Stop once max f - min f over the simplex drops below this.
  double tol = 1e-12;
  /// Edge length of the initial simplex in unit-cube coordinates.
  double initial_step = 0.1;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
};

/// Vertices and values of the working simplex; vertices always lie in [0, 1]^n.
struct SimplexState {
  std::vector<Eigen::VectorXd> vertices;
  std::vector<double> values;
  int iteration = 0;
};

struct NelderMeadTraceRow {
  int iteration;
  int evaluations;
  double best_value;
  double spread;
};

struct NelderMeadResult {
  Eigen::VectorXd best;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<NelderMeadTraceRow> trace;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// x0 plus one vertex per axis offset by `step`; an offset that would leave
/// the unit cube is taken in the opposite direction instead.
std::vector<Eigen::VectorXd> initial_simplex(const Eigen::VectorXd& x0, double step);

/// Derivative-free minimization over the unit cube. Trial points are clamped
/// to the cube; the best value never increases. Deterministic. Throws
/// NumericError if the objective is non-finite at a vertex of the initial
/// simplex; later non-finite values are treated as +inf.
NelderMeadResult nelder_mead(const Objective& objective, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options = {});

}  // namespace adenoise
