#include "spsnet/lp.hpp"

#include <cmath>
#include <map>
#include <string>

namespace spsnet {

namespace {

// Recomputes B^-1 [A I b] and the reduced costs from the original data, which
// discards the rounding error accumulated by successive pivots.
void rebuild_tableau(const LinearProgram& lp, const std::vector<int>& basis, Eigen::MatrixXd& t) {
    const int rows = static_cast<int>(lp.A.rows());
    const int vars = static_cast<int>(lp.A.cols());
    const int cols = vars + rows + 1;
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(rows, cols);
    full.leftCols(vars) = lp.A;
    full.block(0, vars, rows, rows).setIdentity();
    full.col(cols - 1) = lp.b;
    Eigen::MatrixXd b_mat(rows, rows);
    Eigen::VectorXd c_b(rows);
    for (int i = 0; i < rows; ++i) {
        const int v = basis[static_cast<std::size_t>(i)];
        b_mat.col(i) = full.col(v);
        c_b[i] = v < vars ? lp.c[v] : 0.0;
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(b_mat);
    t.topRows(rows) = lu.solve(full);
    Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(cols);
    cost.head(vars) = lp.c.transpose();
    t.row(rows) = c_b.transpose() * t.topRows(rows) - cost;
}

}  // namespace

LpSolution simplex_maximize(const LinearProgram& lp, int max_iterations, double eps) {
    const int rows = static_cast<int>(lp.A.rows());
    const int vars = static_cast<int>(lp.A.cols());
    if (lp.b.size() != rows || lp.c.size() != vars) throw LpError("simplex: inconsistent LP dimensions");
    for (int i = 0; i < rows; ++i)
        if (lp.b[i] < 0.0) throw LpError("simplex: right-hand side must be nonnegative");

    // Tableau columns: structural vars, slacks, rhs. Last row holds reduced costs (-c).
    const int cols = vars + rows + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(rows + 1, cols);
    t.topLeftCorner(rows, vars) = lp.A;
    t.block(0, vars, rows, rows).setIdentity();
    t.col(cols - 1).head(rows) = lp.b;
    t.row(rows).head(vars) = -lp.c.transpose();
    std::vector<int> basis(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) basis[static_cast<std::size_t>(i)] = vars + i;

    // Tolerances scale with the objective coefficients.
    const double cost_eps = eps * std::max(1.0, lp.c.cwiseAbs().maxCoeff());
    const double pivot_eps = std::max(eps, 1e-9);
    constexpr int kRefreshEvery = 64;

    // Dantzig pricing while the objective moves; after a run of degenerate
    // pivots, Bland's rule takes over until the next strict improvement, which
    // rules out cycling.
    constexpr int kDegenerateLimit = 16;
    int degenerate_run = 0;
    int since_refresh = 0;
    bool fresh = true;
    LpSolution sol;
    for (int it = 0;; ++it) {
        if (it >= max_iterations) {
            sol.status = LpStatus::IterationLimit;
            sol.iterations = it;
            return sol;
        }
        if (since_refresh >= kRefreshEvery) {
            rebuild_tableau(lp, basis, t);
            since_refresh = 0;
            fresh = true;
        }
        const bool bland = degenerate_run >= kDegenerateLimit;
        int enter = -1;
        double most_negative = -cost_eps;
        for (int j = 0; j < vars + rows; ++j) {
            if (t(rows, j) < most_negative) {
                enter = j;
                if (bland) break;
                most_negative = t(rows, j);
            }
        }
        if (enter < 0) {
            // certify optimality on a freshly computed tableau
            if (!fresh) {
                since_refresh = kRefreshEvery;
                continue;
            }
            sol.iterations = it;
            break;
        }
        // ratio test; ties broken by smallest basic variable index
        int leave = -1;
        double best = 0.0;
        for (int i = 0; i < rows; ++i) {
            const double a = t(i, enter);
            if (a <= pivot_eps) continue;
            const double ratio = std::max(0.0, t(i, cols - 1)) / a;
            if (leave < 0 || ratio < best - eps ||
                (ratio <= best + eps && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                leave = i;
                best = ratio;
            }
        }
        if (leave < 0) {
            if (!fresh) {
                since_refresh = kRefreshEvery;
                continue;
            }
            sol.status = LpStatus::Unbounded;
            sol.iterations = it;
            return sol;
        }
        degenerate_run = best <= eps ? degenerate_run + 1 : 0;
        const double pivot = t(leave, enter);
        t.row(leave) /= pivot;
        for (int i = 0; i <= rows; ++i) {
            if (i == leave) continue;
            const double f = t(i, enter);
            if (f != 0.0) t.row(i) -= f * t.row(leave);
        }
        basis[static_cast<std::size_t>(leave)] = enter;
        ++since_refresh;
        fresh = false;
    }

    sol.status = LpStatus::Optimal;
    sol.x = Eigen::VectorXd::Zero(vars);
    for (int i = 0; i < rows; ++i) {
        const int v = basis[static_cast<std::size_t>(i)];
        if (v < vars) sol.x[v] = std::max(0.0, t(i, cols - 1));
    }
    sol.objective = lp.c.dot(sol.x);
    return sol;
}

std::vector<double> LpProblem::objective_weights() const {
    std::vector<double> w;
    w.reserve(tags.size());
    for (const auto& t : tags) w.push_back(static_cast<double>(t.count()));
    return w;
}

LpResult solve_lp(const LpProblem& problem) {
    const int r_count = static_cast<int>(problem.tags.size());
    LpResult out;
    out.b.assign(static_cast<std::size_t>(r_count), 0.0);
    if (r_count == 0) return out;
    for (const auto& t : problem.tags)
        if (t.size() != problem.n) throw LpError("solve_lp: tag width does not match N");

    // Nodes with the same row-membership pattern give identical constraints;
    // nodes covered by no row give 0 <= 0 <= 1 and are dropped.
    std::map<std::vector<int>, int> patterns;
    std::vector<std::vector<int>> constraint_rows;
    for (int i = 0; i < problem.n; ++i) {
        std::vector<int> pattern;
        for (int r = 0; r < r_count; ++r)
            if (problem.tags[static_cast<std::size_t>(r)].test(i)) pattern.push_back(r);
        if (pattern.empty()) continue;
        if (patterns.emplace(pattern, static_cast<int>(constraint_rows.size())).second)
            constraint_rows.push_back(std::move(pattern));
    }

    const int k = static_cast<int>(constraint_rows.size());
    // b = b_plus - b_minus; constraints  T'b <= 1  and  -T'b <= 0
    LinearProgram lp;
    lp.A = Eigen::MatrixXd::Zero(2 * k, 2 * r_count);
    lp.b = Eigen::VectorXd::Zero(2 * k);
    lp.c = Eigen::VectorXd::Zero(2 * r_count);
    for (int c = 0; c < k; ++c) {
        for (int r : constraint_rows[static_cast<std::size_t>(c)]) {
            lp.A(c, r) = 1.0;
            lp.A(c, r_count + r) = -1.0;
            lp.A(k + c, r) = -1.0;
            lp.A(k + c, r_count + r) = 1.0;
        }
        lp.b[c] = 1.0;
    }
    const auto w = problem.objective_weights();
    for (int r = 0; r < r_count; ++r) {
        lp.c[r] = w[static_cast<std::size_t>(r)];
        lp.c[r_count + r] = -w[static_cast<std::size_t>(r)];
    }

    const LpSolution sol = simplex_maximize(lp);
    if (sol.status == LpStatus::Unbounded) throw LpError("solve_lp: solver reported an unbounded wrap-up LP");
    if (sol.status == LpStatus::IterationLimit) throw LpError("solve_lp: iteration limit reached");
    for (int r = 0; r < r_count; ++r) out.b[static_cast<std::size_t>(r)] = sol.x[r] - sol.x[r_count + r];
    out.objective = sol.objective;
    out.iterations = sol.iterations;
    return out;
}

}  // namespace spsnet
