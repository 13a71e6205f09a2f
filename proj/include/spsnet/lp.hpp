#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "spsnet/tagset.hpp"

namespace spsnet {

/// maximize c^T x  s.t.  A x <= b,  x >= 0, with b >= 0 so that the origin
/// is a feasible starting vertex.
struct LinearProgram {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
};

enum class LpStatus { Optimal, Unbounded, IterationLimit };

struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    Eigen::VectorXd x;
    double objective = 0.0;
    int iterations = 0;
};

class LpError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense tableau simplex. Dantzig pricing, falling back to Bland's
/// smallest-index rule during degenerate stretches (no cycling).
LpSolution simplex_maximize(const LinearProgram& lp, int max_iterations = 200000, double eps = 1e-11);

/// Wrap-up problem over a tag matrix T (rows r, nodes i):
///   maximize  sum_r |t_r| b_r   s.t.  0 <= sum_r b_r t_{r,i} <= 1  for every node i,
/// with b free.
struct LpProblem {
    int n = 0;
    std::vector<TagSet> tags;

    std::vector<double> objective_weights() const;
};

struct LpResult {
    std::vector<double> b;
    double objective = 0.0;
    int iterations = 0;
};

/// Throws LpError if the solver reports an unbounded or non-terminating
/// problem; neither can happen for a well-formed LpProblem.
LpResult solve_lp(const LpProblem& problem);

}  // namespace spsnet
