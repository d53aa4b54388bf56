#pragma once

#include <Eigen/Dense>
#include <functional>

namespace dsvs {

// Objective callback: fills the gradient and returns the value.
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LbfgsOptions {
    int max_iter = 300;
    int memory = 8;
    double grad_tol = 1e-9;
    double f_rel_tol = 1e-12;
    double armijo_c1 = 1e-4;
    int max_backtracks = 40;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd gradient;
    int iterations = 0;
    bool converged = false;
};

// Limited-memory BFGS with Armijo backtracking. Deterministic for a
// deterministic objective.
LbfgsResult minimize_lbfgs(const ObjectiveFn& objective, const Eigen::VectorXd& x0,
                           const LbfgsOptions& options = {});

}  // namespace dsvs
