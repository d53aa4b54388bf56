#include "dsvs/fdm.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

namespace dsvs {

double LocallyWeightedTranslation::kernel(const Vec3& z) const {
    return std::exp(-(z - center).squaredNorm() / (2.0 * width * width));
}

Vec3 LocallyWeightedTranslation::apply(const Vec3& z) const {
    return z + translation * kernel(z);
}

Mat3 LocallyWeightedTranslation::jacobian(const Vec3& z) const {
    const double k = kernel(z);
    return Mat3::Identity() - (k / (width * width)) * (translation * (z - center).transpose());
}

double LocallyWeightedTranslation::max_translation(double width, double margin) {
    // sup ||grad kernel|| = exp(-1/2) / width
    return margin * width * std::exp(0.5);
}

Vec3 LocallyWeightedTranslation::invert(const Vec3& y) const {
    constexpr double tol = 1e-13;
    Vec3 x = y;
    for (int iter = 0; iter < 200; ++iter) {
        const Vec3 next = y - translation * kernel(x);
        const double delta = (next - x).norm();
        x = next;
        if (delta < tol) return x;
    }
    // Slow contraction right at the margin: polish with Newton.
    for (int iter = 0; iter < 50; ++iter) {
        const Vec3 residual = apply(x) - y;
        if (residual.norm() < tol) return x;
        x -= jacobian(x).partialPivLu().solve(residual);
    }
    if ((apply(x) - y).norm() < tol) return x;
    throw InverseDiverged("locally weighted translation inverse did not converge");
}

DiffeoMap::DiffeoMap(std::vector<LocallyWeightedTranslation> steps) : steps_(std::move(steps)) {}

Vec3 DiffeoMap::apply(const Vec3& z) const {
    Vec3 x = z;
    for (const auto& step : steps_) x = step.apply(x);
    return x;
}

Mat3 DiffeoMap::jacobian(const Vec3& z) const {
    Mat3 j = Mat3::Identity();
    Vec3 x = z;
    for (const auto& step : steps_) {
        j = step.jacobian(x) * j;
        x = step.apply(x);
    }
    return j;
}

Vec3 DiffeoMap::inverse(const Vec3& eps) const {
    Vec3 x = eps;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) x = it->invert(x);
    return x;
}

nlohmann::json DiffeoMap::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& step : steps_) {
        nlohmann::json js;
        js["center"] = {step.center.x(), step.center.y(), step.center.z()};
        js["translation"] = {step.translation.x(), step.translation.y(), step.translation.z()};
        js["width"] = step.width;
        j.push_back(js);
    }
    return j;
}

DiffeoMap DiffeoMap::from_json(const nlohmann::json& j) {
    std::vector<LocallyWeightedTranslation> steps;
    for (const auto& js : j) {
        LocallyWeightedTranslation step;
        const auto c = js.at("center").get<std::vector<double>>();
        const auto t = js.at("translation").get<std::vector<double>>();
        step.center = Vec3(c[0], c[1], c[2]);
        step.translation = Vec3(t[0], t[1], t[2]);
        step.width = js.at("width").get<double>();
        steps.push_back(step);
    }
    return DiffeoMap(std::move(steps));
}

FdmMatchResult fast_diffeo_match(const FdmTraining& training, int k_max,
                                 const FdmMatchConfig& config) {
    const auto t_start = std::chrono::steady_clock::now();
    const int n = training.set.size();
    if (n < 1) throw Error("fast_diffeo_match: empty training set");

    // The straight-line reference is the source; the averaged demo the target.
    std::vector<Vec3> src(training.set.outputs);
    const std::vector<Vec3>& tgt = training.set.inputs;

    auto max_mismatch = [&](const std::vector<Vec3>& pts, int* arg = nullptr) {
        double worst = -1.0;
        for (int i = 0; i < n; ++i) {
            const double d = (pts[i] - tgt[i]).norm();
            if (d > worst) {
                worst = d;
                if (arg) *arg = i;
            }
        }
        return worst;
    };

    FdmMatchResult result;
    int worst_idx = 0;
    double residual = max_mismatch(src, &worst_idx);
    result.residual_history.push_back(residual);

    std::vector<LocallyWeightedTranslation> steps;
    std::vector<Vec3> candidate(n);
    int stalled_steps = 0;
    while (static_cast<int>(steps.size()) < k_max && residual >= config.stop_tol) {
        LocallyWeightedTranslation step;
        step.center = src[worst_idx];
        if (config.fixed_width > 0.0) {
            step.width = config.fixed_width;
        } else {
            double nn = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) {
                if (i == worst_idx) continue;
                nn = std::min(nn, (src[i] - step.center).norm());
            }
            step.width = std::max(config.width_factor * nn, 1e-9);
        }
        const Vec3 full_translation = config.step_fraction * (tgt[worst_idx] - src[worst_idx]);
        const double base_width = step.width;

        // Back off translation and kernel width together until the worst
        // mismatch no longer grows; narrower kernels drag neighbors less.
        double new_residual = residual;
        int new_worst = worst_idx;
        bool accepted = false;
        for (int tries = 0; tries < 14; ++tries) {
            step.width = base_width * std::pow(0.5, tries / 2);
            step.translation = full_translation * std::pow(0.5, (tries + 1) / 2);
            const double bound = LocallyWeightedTranslation::max_translation(step.width);
            if (step.translation.norm() > bound)
                step.translation *= bound / step.translation.norm();
            for (int i = 0; i < n; ++i) candidate[i] = step.apply(src[i]);
            new_residual = max_mismatch(candidate, &new_worst);
            if (new_residual <= residual) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            ++stalled_steps;
            if (stalled_steps >= 10)
                throw Stalled("fast_diffeo_match: no residual progress for 10 steps");
            continue;
        }

        steps.push_back(step);
        src.swap(candidate);
        if (residual - new_residual < 1e-12) {
            if (++stalled_steps >= 10)
                throw Stalled("fast_diffeo_match: no residual progress for 10 steps");
        } else {
            stalled_steps = 0;
        }
        residual = new_residual;
        worst_idx = new_worst;
        result.residual_history.push_back(residual);
    }

    result.map = DiffeoMap(std::move(steps));
    result.final_residual = residual;
    result.steps = result.map.size();
    const auto t_end = std::chrono::steady_clock::now();
    result.training_time_ms = std::chrono::duration<double, std::milli>(t_end - t_start).count();
    return result;
}

JacobianAt jacobian_at_from_string(const std::string& name) {
    if (name == "epsilon") return JacobianAt::Epsilon;
    if (name == "preimage") return JacobianAt::Preimage;
    throw ConfigError("jacobian_at must be 'epsilon' or 'preimage', got '" + name + "'");
}

std::string to_string(JacobianAt at) {
    return at == JacobianAt::Epsilon ? "epsilon" : "preimage";
}

FdmController::FdmController(DiffeoMap psi, Vec3 initial_mean, int n_samples, double T,
                             JacobianAt jacobian_at)
    : psi_(std::move(psi)),
      eps1_norm_(initial_mean.norm()),
      n_(n_samples),
      T_(T),
      jacobian_at_(jacobian_at) {
    if (eps1_norm_ <= 0.0) throw Error("FdmController: initial mean error must be nonzero");
    if (n_ < 2) throw Error("FdmController: need at least 2 samples");
    if (T_ <= 0.0) throw Error("FdmController: T must be positive");
}

bool FdmController::low_gain_branch(const Vec3& eps) const {
    return eps.norm() < eps1_norm_ / n_;
}

double FdmController::gamma(const Vec3& eps) const {
    const double norm = eps.norm();
    if (norm >= eps1_norm_ / n_) return eps1_norm_ / (n_ * T_ * norm);
    return eps1_norm_ / n_;
}

Vec3 FdmController::velocity(const Vec3& eps) const {
    if (eps.norm() == 0.0) return Vec3::Zero();
    // The law inverts the Jacobian of the error-to-reference map, i.e. the
    // regression direction of the training pairs. That map is the inverse of
    // the fitted composition, so solving with its Jacobian amounts to applying
    // the forward composition Jacobian, taken at the preimage or at eps.
    const Vec3 at = jacobian_at_ == JacobianAt::Epsilon ? eps : psi_.inverse(eps);
    const Mat3 j = psi_.jacobian(at);
    const Eigen::JacobiSVD<Mat3> svd(j);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0 || smax / smin > 1e12)
        throw SingularJacobian("fdm_velocity: Jacobian condition number exceeds 1e12");
    return -gamma(eps) * (j * eps);
}

}  // namespace dsvs
