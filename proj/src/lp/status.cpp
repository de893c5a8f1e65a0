#include "bess/lp/linear_program.hpp"

namespace bess::lp {

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
    case Status::node_limit: return "node_limit";
  }
  return "?";
}

}  // namespace bess::lp
