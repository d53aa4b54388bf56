#include "dsvs/clfdm.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "dsvs/optim.hpp"

namespace dsvs {
namespace {

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

constexpr int kFactorParams = 6;  // lower triangle of a 3x3 factor

Mat3 unpack_factor(const Eigen::VectorXd& theta, int offset) {
    Mat3 c = Mat3::Zero();
    c(0, 0) = theta(offset + 0);
    c(1, 0) = theta(offset + 1);
    c(1, 1) = theta(offset + 2);
    c(2, 0) = theta(offset + 3);
    c(2, 1) = theta(offset + 4);
    c(2, 2) = theta(offset + 5);
    return c;
}

void pack_factor(const Mat3& c, Eigen::VectorXd& theta, int offset) {
    theta(offset + 0) = c(0, 0);
    theta(offset + 1) = c(1, 0);
    theta(offset + 2) = c(1, 1);
    theta(offset + 3) = c(2, 0);
    theta(offset + 4) = c(2, 1);
    theta(offset + 5) = c(2, 2);
}

void accumulate_factor_grad(const Mat3& unconstrained, const Mat3& factor, double weight,
                            Eigen::VectorXd& grad, int offset) {
    const Mat3 gc = weight * (unconstrained + unconstrained.transpose()) * factor;
    grad(offset + 0) += gc(0, 0);
    grad(offset + 1) += gc(1, 0);
    grad(offset + 2) += gc(1, 1);
    grad(offset + 3) += gc(2, 0);
    grad(offset + 4) += gc(2, 1);
    grad(offset + 5) += gc(2, 2);
}

ClfModel model_from_theta(const Eigen::VectorXd& theta, int asym_count, double floor) {
    const Mat3 c0 = unpack_factor(theta, 0);
    std::vector<ClfModel::AsymComponent> asym(asym_count);
    for (int l = 0; l < asym_count; ++l) {
        const int base = kFactorParams + l * (kFactorParams + 3);
        asym[l].factor = unpack_factor(theta, base);
        asym[l].center = theta.segment<3>(base + kFactorParams);
    }
    return ClfModel(c0, std::move(asym), floor);
}

// V is identifiable only up to a positive scale; the runtime correction rate
// rho/||grad V|| is not. Pin the mean quadratic scale over the training
// inputs so the stabilizer behaves uniformly across fits. The sign pattern of
// V-dot is unchanged.
ClfModel normalize_scale(const ClfModel& model, const TrainingSet& training,
                         double target_scale) {
    double num = 0.0, den = 0.0;
    for (const auto& eps : training.inputs) {
        num += model.value(eps);
        den += eps.squaredNorm();
    }
    if (num <= 0.0 || den <= 0.0) return model;
    const double gain = target_scale * den / num;  // multiplies V
    std::vector<ClfModel::AsymComponent> asym = model.asym();
    for (auto& a : asym) a.factor *= std::pow(gain, 0.25);
    return ClfModel(std::sqrt(gain) * model.base_factor(), std::move(asym), model.spd_floor());
}

}  // namespace

ClfModel::ClfModel() : ClfModel(Mat3::Identity(), {}, 1e-8) {}

ClfModel::ClfModel(Mat3 base_factor, std::vector<AsymComponent> asym, double spd_floor)
    : base_factor_(std::move(base_factor)), asym_(std::move(asym)), floor_(spd_floor) {
    p_base_ = base_factor_ * base_factor_.transpose() + floor_ * Mat3::Identity();
    p_asym_.reserve(asym_.size());
    for (const auto& a : asym_) {
        p_asym_.push_back(a.factor * a.factor.transpose() + floor_ * Mat3::Identity());
    }
}

double ClfModel::value(const Vec3& eps) const { return value_and_grad(eps).value; }

Vec3 ClfModel::gradient(const Vec3& eps) const { return value_and_grad(eps).gradient; }

ClfModel::ValueGrad ClfModel::value_and_grad(const Vec3& eps) const {
    ValueGrad out;
    out.value = eps.dot(p_base_ * eps);
    out.gradient = 2.0 * (p_base_ * eps);
    for (size_t l = 0; l < asym_.size(); ++l) {
        const Vec3 pe = p_asym_[l] * eps;
        const double g = eps.dot(pe) - eps.dot(p_asym_[l] * asym_[l].center);
        if (g > 0.0) {
            out.value += g * g;
            out.gradient += 2.0 * g * (2.0 * pe - p_asym_[l] * asym_[l].center);
        }
    }
    return out;
}

double ClfModel::decrease_rate(const Vec3& eps, const Vec3& flow) const {
    return gradient(eps).dot(flow);
}

nlohmann::json ClfModel::to_json() const {
    auto mat_to_vec = [](const Mat3& m) {
        std::vector<double> v(9);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) v[r * 3 + c] = m(r, c);
        return v;
    };
    nlohmann::json j;
    j["base_factor"] = mat_to_vec(base_factor_);
    j["spd_floor"] = floor_;
    j["asym"] = nlohmann::json::array();
    for (const auto& a : asym_) {
        nlohmann::json ja;
        ja["factor"] = mat_to_vec(a.factor);
        ja["center"] = std::vector<double>{a.center.x(), a.center.y(), a.center.z()};
        j["asym"].push_back(ja);
    }
    return j;
}

ClfModel ClfModel::from_json(const nlohmann::json& j) {
    auto vec_to_mat = [](const std::vector<double>& v) {
        Mat3 m;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) m(r, c) = v[r * 3 + c];
        return m;
    };
    const Mat3 c0 = vec_to_mat(j.at("base_factor").get<std::vector<double>>());
    std::vector<AsymComponent> asym;
    for (const auto& ja : j.at("asym")) {
        AsymComponent a;
        a.factor = vec_to_mat(ja.at("factor").get<std::vector<double>>());
        const auto center = ja.at("center").get<std::vector<double>>();
        a.center = Vec3(center[0], center[1], center[2]);
        asym.push_back(a);
    }
    return ClfModel(c0, std::move(asym), j.value("spd_floor", 1e-8));
}

double clf_violation_fraction(const ClfModel& model, const TrainingSet& training) {
    if (training.size() == 0) return 0.0;
    int violations = 0;
    for (int n = 0; n < training.size(); ++n) {
        if (model.decrease_rate(training.inputs[n], training.outputs[n]) >= 0.0) ++violations;
    }
    return static_cast<double>(violations) / training.size();
}

ClfLearnResult learn_clf(const TrainingSet& training, int asym_count, std::uint64_t seed,
                         const ClfLearnConfig& config) {
    if (training.size() == 0) throw Error("learn_clf: empty training set");
    if (asym_count < 0) throw Error("learn_clf: negative component count");

    const auto t_start = std::chrono::steady_clock::now();
    const int m = training.size();
    const int n_params = kFactorParams + asym_count * (kFactorParams + 3);

    double eps_rms = 0.0;
    for (const auto& eps : training.inputs) eps_rms += eps.squaredNorm();
    eps_rms = std::sqrt(eps_rms / m);
    const double scale = 1.0 / std::max(eps_rms, 1e-6);
    const double spd_floor = config.base_floor_fraction * scale * scale;

    // Smooth surrogate of the violation count and its analytic gradient.
    auto objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) -> double {
        grad.setZero(n_params);
        const Mat3 c0 = unpack_factor(theta, 0);
        const Mat3 p0 = c0 * c0.transpose() + spd_floor * Mat3::Identity();
        std::vector<Mat3> cl(asym_count), pl(asym_count);
        std::vector<Vec3> mu(asym_count);
        for (int l = 0; l < asym_count; ++l) {
            const int base = kFactorParams + l * (kFactorParams + 3);
            cl[l] = unpack_factor(theta, base);
            pl[l] = cl[l] * cl[l].transpose() + spd_floor * Mat3::Identity();
            mu[l] = theta.segment<3>(base + kFactorParams);
        }

        double total = 0.0;
        for (int n = 0; n < m; ++n) {
            const Vec3& eps = training.inputs[n];
            const Vec3& f = training.outputs[n];
            double vdot = 2.0 * eps.dot(p0 * f);
            std::vector<double> g_l(asym_count, 0.0), gdot_l(asym_count, 0.0);
            for (int l = 0; l < asym_count; ++l) {
                g_l[l] = eps.dot(pl[l] * (eps - mu[l]));
                if (g_l[l] > 0.0) {
                    gdot_l[l] = (2.0 * eps - mu[l]).dot(pl[l] * f);
                    vdot += 2.0 * g_l[l] * gdot_l[l];
                }
            }
            total += softplus(vdot + config.margin);
            const double w = sigmoid(vdot + config.margin);

            accumulate_factor_grad(2.0 * eps * f.transpose(), c0, w, grad, 0);
            for (int l = 0; l < asym_count; ++l) {
                if (g_l[l] <= 0.0) continue;
                const int base = kFactorParams + l * (kFactorParams + 3);
                const Mat3 gp = 2.0 * gdot_l[l] * eps * (eps - mu[l]).transpose() +
                                2.0 * g_l[l] * (2.0 * eps - mu[l]) * f.transpose();
                accumulate_factor_grad(gp, cl[l], w, grad, base);
                grad.segment<3>(base + kFactorParams) +=
                    w * (-2.0 * gdot_l[l] * (pl[l] * eps) - 2.0 * g_l[l] * (pl[l] * f));
            }
        }
        return total;
    };

    ClfLearnResult best;
    bool have_best = false;
    for (int restart = 0; restart < std::max(1, config.restarts); ++restart) {
        std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ull * restart);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::uniform_real_distribution<double> pos(0.4, 1.1);

        Eigen::VectorXd theta(n_params);
        Mat3 c0 = scale * Mat3::Identity();
        if (restart > 0) {
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c <= r; ++c) c0(r, c) += 0.1 * scale * unit(rng);
        }
        pack_factor(c0, theta, 0);
        for (int l = 0; l < asym_count; ++l) {
            const int base = kFactorParams + l * (kFactorParams + 3);
            Mat3 cl = 0.4 * scale * Mat3::Identity();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c <= r; ++c) cl(r, c) += 0.05 * scale * unit(rng);
            pack_factor(cl, theta, base);
            const int anchor = static_cast<int>((unit(rng) * 0.5 + 0.5) * m) % m;
            theta.segment<3>(base + kFactorParams) = pos(rng) * training.inputs[anchor];
        }

        // Fixed optimization budget: keeps the restarts comparable and the
        // wall-clock deterministic instead of exiting on surrogate plateaus.
        LbfgsOptions opts;
        opts.max_iter = config.max_iter;
        opts.grad_tol = 0.0;
        opts.f_rel_tol = 0.0;
        const LbfgsResult fit = minimize_lbfgs(objective, theta, opts);

        const ClfModel model = model_from_theta(fit.x, asym_count, spd_floor);
        const double violations = clf_violation_fraction(model, training);
        if (!have_best || violations < best.violation_fraction ||
            (violations == best.violation_fraction && fit.f < best.objective)) {
            best.model = model;
            best.violation_fraction = violations;
            best.objective = fit.f;
            best.restarts_used = restart + 1;
            have_best = true;
        }
    }

    best.model = normalize_scale(best.model, training, config.quadratic_scale);
    // The un-scaled floor shifts V-dot signs marginally; report the fraction
    // of the model actually returned.
    best.violation_fraction = clf_violation_fraction(best.model, training);

    const auto t_end = std::chrono::steady_clock::now();
    best.training_time_ms = std::chrono::duration<double, std::milli>(t_end - t_start).count();
    if (best.violation_fraction > config.violation_ceiling) {
        throw OptimizationFailed("learn_clf: violation fraction " +
                                 std::to_string(best.violation_fraction) + " exceeds ceiling " +
                                 std::to_string(config.violation_ceiling));
    }
    return best;
}

ClfdmController::ClfdmController(GmrModel flow_model, ClfModel clf, double rho0,
                                 double fallback_lambda)
    : flow_model_(std::move(flow_model)),
      clf_(std::move(clf)),
      rho0_(rho0),
      fallback_lambda_(fallback_lambda) {
    if (rho0_ <= 0.0) throw Error("ClfdmController: rho0 must be positive");
    if (flow_model_.input_dim() != 3 || flow_model_.output_dim() != 3)
        throw Error("ClfdmController: flow model must map R3 -> R3");
}

Vec3 ClfdmController::correction(const Vec3& eps, const Vec3& f_hat) const {
    if (eps.norm() <= 1e-12) return -f_hat;
    const auto vg = clf_.value_and_grad(eps);
    const double r = rho(eps);
    const double vdot = vg.gradient.dot(f_hat);
    if (vdot <= -r) return Vec3::Zero();
    const double grad_norm = vg.gradient.norm();
    if (grad_norm < 1e-12) {
        throw VanishingGradient("u_clf: flat Lyapunov gradient at ||eps||=" +
                                std::to_string(eps.norm()));
    }
    return -((vdot + r) / (grad_norm * grad_norm)) * vg.gradient;
}

Vec3 ClfdmController::velocity(const Vec3& eps, bool* fallback_used) const {
    if (fallback_used) *fallback_used = false;
    const Vec3 f_hat = flow(eps);
    try {
        return f_hat + correction(eps, f_hat);
    } catch (const VanishingGradient&) {
        if (fallback_used) *fallback_used = true;
        return -fallback_lambda_ * eps;
    }
}

}  // namespace dsvs
