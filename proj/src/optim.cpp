#include "dsvs/optim.hpp"

#include <cmath>
#include <deque>

namespace dsvs {

LbfgsResult minimize_lbfgs(const ObjectiveFn& objective, const Eigen::VectorXd& x0,
                           const LbfgsOptions& options) {
    LbfgsResult res;
    res.x = x0;
    res.gradient.resize(x0.size());
    res.f = objective(res.x, res.gradient);

    struct Pair {
        Eigen::VectorXd s, y;
        double rho;
    };
    std::deque<Pair> history;

    for (int iter = 0; iter < options.max_iter; ++iter) {
        res.iterations = iter;
        if (res.gradient.lpNorm<Eigen::Infinity>() < options.grad_tol) {
            res.converged = true;
            return res;
        }

        // Two-loop recursion.
        Eigen::VectorXd q = res.gradient;
        std::vector<double> alpha(history.size());
        for (int i = static_cast<int>(history.size()) - 1; i >= 0; --i) {
            alpha[i] = history[i].rho * history[i].s.dot(q);
            q -= alpha[i] * history[i].y;
        }
        if (!history.empty()) {
            const auto& last = history.back();
            q *= last.s.dot(last.y) / last.y.squaredNorm();
        }
        for (size_t i = 0; i < history.size(); ++i) {
            const double beta = history[i].rho * history[i].y.dot(q);
            q += (alpha[i] - beta) * history[i].s;
        }
        Eigen::VectorXd direction = -q;
        double slope = res.gradient.dot(direction);
        if (slope >= 0.0) {
            direction = -res.gradient;
            slope = -res.gradient.squaredNorm();
            history.clear();
        }

        // Armijo with one-ulp slack so plateau steps are not rejected on ties.
        double step = 1.0;
        Eigen::VectorXd x_new;
        Eigen::VectorXd g_new(res.x.size());
        double f_new = res.f;
        bool accepted = false;
        const double tie_slack = 1e-16 * std::max(1.0, std::abs(res.f));
        for (int bt = 0; bt < options.max_backtracks; ++bt) {
            x_new = res.x + step * direction;
            f_new = objective(x_new, g_new);
            if (std::isfinite(f_new) &&
                f_new <= res.f + options.armijo_c1 * step * slope + tie_slack) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) return res;  // line search exhausted; best point so far

        Pair pair;
        pair.s = x_new - res.x;
        pair.y = g_new - res.gradient;
        const double sy = pair.s.dot(pair.y);
        if (sy > 1e-12 * pair.s.norm() * pair.y.norm()) {
            pair.rho = 1.0 / sy;
            history.push_back(std::move(pair));
            if (static_cast<int>(history.size()) > options.memory) history.pop_front();
        }

        const double f_change = std::abs(res.f - f_new);
        res.x = std::move(x_new);
        res.gradient = std::move(g_new);
        res.f = f_new;
        if (f_change < options.f_rel_tol * std::max(1.0, std::abs(res.f))) {
            res.converged = true;
            res.iterations = iter + 1;
            return res;
        }
    }
    res.iterations = options.max_iter;
    return res;
}

}  // namespace dsvs
