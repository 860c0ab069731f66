#include "adenoise/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adenoise/errors.hpp"

namespace adenoise {

namespace {

Eigen::VectorXd project(Eigen::VectorXd x) { return x.cwiseMax(0.0).cwiseMin(1.0); }

}  // namespace

std::vector<Eigen::VectorXd> initial_simplex(const Eigen::VectorXd& x0, double step) {
  if (x0.size() == 0) throw InvalidArgument("initial_simplex: empty start point");
  if (!(step > 0.0 && step <= 1.0)) throw InvalidArgument("initial_simplex: step must be in (0, 1]");
  std::vector<Eigen::VectorXd> vertices;
  const Eigen::VectorXd start = project(x0);
  vertices.push_back(start);
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    Eigen::VectorXd v = start;
    v[i] = start[i] + step <= 1.0 ? start[i] + step : start[i] - step;
    vertices.push_back(project(v));
  }
  return vertices;
}

NelderMeadResult nelder_mead(const Objective& objective, const Eigen::VectorXd& x0, const NelderMeadOptions& options) {
  NelderMeadResult result;
  int evaluations = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evaluations;
    const double f = objective(x);
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  };

  SimplexState s;
  s.vertices = initial_simplex(x0, options.initial_step);
  const std::size_t n = s.vertices.size() - 1;
  for (const auto& v : s.vertices) {
    ++evaluations;
    const double f = objective(v);
    if (!std::isfinite(f)) throw NumericError("nelder_mead: objective is non-finite on the initial simplex");
    s.values.push_back(f);
  }

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.values[a] < s.values[b]; });
    std::vector<Eigen::VectorXd> vs;
    std::vector<double> fs;
    for (std::size_t i : order) {
      vs.push_back(std::move(s.vertices[i]));
      fs.push_back(s.values[i]);
    }
    s.vertices = std::move(vs);
    s.values = std::move(fs);
  };

  sort_simplex();
  while (true) {
    const double spread = s.values[n] - s.values[0];
    result.trace.push_back({s.iteration, evaluations, s.values[0], spread});
    if (spread < options.tol) {
      result.converged = true;
      break;
    }
    if (s.iteration >= options.max_iter) break;
    ++s.iteration;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(s.vertices[0].size());
    for (std::size_t i = 0; i < n; ++i) centroid += s.vertices[i];
    centroid /= double(n);
    const Eigen::VectorXd& worst = s.vertices[n];

    const Eigen::VectorXd xr = project(centroid + options.reflection * (centroid - worst));
    const double fr = eval(xr);
    bool do_shrink = false;
    if (fr < s.values[0]) {
      const Eigen::VectorXd xe = project(centroid + options.expansion * (xr - centroid));
      const double fe = eval(xe);
      if (fe < fr) {
        s.vertices[n] = xe;
        s.values[n] = fe;
      } else {
        s.vertices[n] = xr;
        s.values[n] = fr;
      }
    } else if (fr < s.values[n - 1]) {
      s.vertices[n] = xr;
      s.values[n] = fr;
    } else if (fr < s.values[n]) {
      const Eigen::VectorXd xc = project(centroid + options.contraction * (xr - centroid));
      const double fc = eval(xc);
      if (fc <= fr) {
        s.vertices[n] = xc;
        s.values[n] = fc;
      } else {
        do_shrink = true;
      }
    } else {
      const Eigen::VectorXd xcc = project(centroid + options.contraction * (worst - centroid));
      const double fcc = eval(xcc);
      if (fcc < s.values[n]) {
        s.vertices[n] = xcc;
        s.values[n] = fcc;
      } else {
        do_shrink = true;
      }
    }
    if (do_shrink) {
      for (std::size_t i = 1; i <= n; ++i) {
        s.vertices[i] = project(s.vertices[0] + options.shrink * (s.vertices[i] - s.vertices[0]));
        s.values[i] = eval(s.vertices[i]);
      }
    }
    sort_simplex();
  }

  result.best = s.vertices[0];
  result.value = s.values[0];
  result.iterations = s.iteration;
  result.evaluations = evaluations;
  return result;
}

}  // namespace adenoise
