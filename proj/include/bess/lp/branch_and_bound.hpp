#pragma once

#include <cmath>
#include <vector>

#include "bess/lp/simplex.hpp"

namespace bess::lp {

struct MilpOptions {
  SimplexOptions simplex;
  double integrality_tol = 1e-6;
  /// A node is pruned once its bound cannot beat the incumbent by more than
  /// absolute_gap + relative_gap * |incumbent|. The default proves exact optimality.
  double absolute_gap = 1e-9;
  double relative_gap = 0.0;
  int max_nodes = 200000;
};

template <typename Scalar = double>
struct MilpResult {
  Status status = Status::infeasible;
  typename LinearProgram<Scalar>::Vector x;
  Scalar objective = 0;
  int nodes = 0;
  int lp_iterations = 0;
};

/// Depth-first branch and bound over the integer-marked variables, branching on the most
/// fractional one and diving first into the side its relaxation value rounds to. Child nodes
/// warm-start from their parent's basis.
template <typename Scalar>
MilpResult<Scalar> branch_and_bound(const LinearProgram<Scalar>& lp, const MilpOptions& options = {}) {
  using Vector = typename LinearProgram<Scalar>::Vector;
  lp.check();
  struct Node {
    Vector lower;
    Vector upper;
    Basis basis;
  };
  const bool maximize = lp.sense == Sense::maximize;
  auto better = [maximize](Scalar a, Scalar b) { return maximize ? a > b : a < b; };

  MilpResult<Scalar> best;
  bool have_incumbent = false;
  bool hit_limit = false;
  bool unbounded = false;
  std::vector<Node> stack;
  stack.push_back(Node{lp.lower, lp.upper, {}});
  // Integer variables get integral bounds up front.
  for (Eigen::Index j = 0; j < lp.variables(); ++j)
    if (lp.integer[static_cast<std::size_t>(j)]) {
      stack.back().lower(j) = std::ceil(lp.lower(j) - Scalar(options.integrality_tol));
      stack.back().upper(j) = std::floor(lp.upper(j) + Scalar(options.integrality_tol));
    }

  while (!stack.empty()) {
    if (best.nodes >= options.max_nodes) {
      hit_limit = true;
      break;
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    ++best.nodes;
    const auto relax = solve_lp(lp, node.lower, node.upper, options.simplex, node.basis.empty() ? nullptr : &node.basis);
    best.lp_iterations += relax.iterations;
    if (relax.status == Status::infeasible) continue;
    if (relax.status == Status::unbounded) {
      unbounded = true;
      break;
    }
    if (relax.status != Status::optimal) {
      hit_limit = true;
      continue;
    }
    if (have_incumbent) {
      const Scalar margin = Scalar(options.absolute_gap) + Scalar(options.relative_gap) * std::abs(best.objective);
      if (!better(relax.objective, maximize ? best.objective + margin : best.objective - margin)) continue;
    }
    Eigen::Index branch = -1;
    Scalar most = Scalar(options.integrality_tol);
    for (Eigen::Index j = 0; j < lp.variables(); ++j) {
      if (!lp.integer[static_cast<std::size_t>(j)]) continue;
      const Scalar frac = std::abs(relax.x(j) - std::round(relax.x(j)));
      if (frac > most) {
        most = frac;
        branch = j;
      }
    }
    if (branch < 0) {
      if (!have_incumbent || better(relax.objective, best.objective)) {
        best.x = relax.x;
        for (Eigen::Index j = 0; j < lp.variables(); ++j)
          if (lp.integer[static_cast<std::size_t>(j)]) best.x(j) = std::round(best.x(j));
        best.objective = lp.objective.dot(best.x);
        have_incumbent = true;
      }
      continue;
    }
    const Scalar v = relax.x(branch);
    Node down{node.lower, node.upper, relax.basis};
    down.upper(branch) = std::floor(v);
    Node up{std::move(node.lower), std::move(node.upper), relax.basis};
    up.lower(branch) = std::ceil(v);
    // The side pushed last is explored first.
    if (v - std::floor(v) >= Scalar(0.5)) {
      stack.push_back(std::move(down));
      stack.push_back(std::move(up));
    } else {
      stack.push_back(std::move(up));
      stack.push_back(std::move(down));
    }
  }

  if (unbounded)
    best.status = Status::unbounded;
  else if (have_incumbent)
    best.status = hit_limit ? Status::node_limit : Status::optimal;
  else
    best.status = hit_limit ? Status::node_limit : Status::infeasible;
  return best;
}

}  // namespace bess::lp
