#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dsvs/dataset.hpp"
#include "dsvs/gmr.hpp"
#include "dsvs/types.hpp"

namespace dsvs {

// Weighted sum of asymmetric quadratic functions:
//   V(eps) = eps'*P0*eps + sum_l [g_l > 0] * g_l^2,  g_l = eps'*P_l*(eps - mu_l).
// The SPD blocks are stored through their generating factors, P = C*C' + floor*I,
// so every parameter setting is feasible.
class ClfModel {
  public:
    struct AsymComponent {
        Mat3 factor = Mat3::Zero();
        Vec3 center = Vec3::Zero();
    };

    ClfModel();
    ClfModel(Mat3 base_factor, std::vector<AsymComponent> asym, double spd_floor = 1e-8);

    double value(const Vec3& eps) const;
    Vec3 gradient(const Vec3& eps) const;
    struct ValueGrad {
        double value;
        Vec3 gradient;
    };
    ValueGrad value_and_grad(const Vec3& eps) const;

    // Rate of V along a flow sample.
    double decrease_rate(const Vec3& eps, const Vec3& flow) const;

    const Mat3& base() const { return p_base_; }
    const Mat3& base_factor() const { return base_factor_; }
    int asym_count() const { return static_cast<int>(asym_.size()); }
    const std::vector<AsymComponent>& asym() const { return asym_; }
    double spd_floor() const { return floor_; }

    nlohmann::json to_json() const;
    static ClfModel from_json(const nlohmann::json& j);

  private:
    Mat3 base_factor_;
    std::vector<AsymComponent> asym_;
    double floor_ = 1e-8;

    Mat3 p_base_;             // derived: C0*C0' + floor*I
    std::vector<Mat3> p_asym_;
};

struct ClfLearnConfig {
    int restarts = 5;
    int max_iter = 500;
    double margin = 1e-4;             // pushed into the softplus surrogate
    double violation_ceiling = 0.25;  // hard count that still passes
    // Floor on every SPD block, as a fraction of the data scale 1/rms(eps)^2.
    // Keeps the bowl round enough near the origin for tame corrections.
    double base_floor_fraction = 0.05;
    double quadratic_scale = 25.0;    // mean V(eps)/||eps||^2 after fitting
};

struct ClfLearnResult {
    ClfModel model;
    double violation_fraction = 0.0;  // share of samples with dV/dt >= 0
    double objective = 0.0;
    double training_time_ms = 0.0;
    int restarts_used = 0;
};

// Fit the Lyapunov parameters by minimizing the softplus surrogate of the
// decrease-rate violations over the training pairs. Multi-start keeps the
// restart with the fewest hard violations. Throws OptimizationFailed when the
// best restart still violates more than the ceiling.
ClfLearnResult learn_clf(const TrainingSet& training, int asym_count, std::uint64_t seed,
                         const ClfLearnConfig& config = {});

// Exact objective/violation evaluation used by the trainer and by tests.
double clf_violation_fraction(const ClfModel& model, const TrainingSet& training);

// Runtime stabilizer around a learned flow model.
class ClfdmController {
  public:
    ClfdmController(GmrModel flow_model, ClfModel clf, double rho0, double fallback_lambda);

    // Minimal decrease rate demanded at this state (class-K in ||eps||).
    double rho(const Vec3& eps) const { return rho0_ * eps.norm(); }

    // Stabilizing correction for a given flow estimate. Throws
    // VanishingGradient on a flat spot of V away from the origin.
    Vec3 correction(const Vec3& eps, const Vec3& f_hat) const;

    Vec3 flow(const Vec3& eps) const { return flow_model_.predict(eps).mean; }

    // v = f(eps) + u(eps); fallback_used reports the -lambda*eps fallback.
    Vec3 velocity(const Vec3& eps, bool* fallback_used = nullptr) const;

    const GmrModel& flow_model() const { return flow_model_; }
    const ClfModel& clf() const { return clf_; }
    double rho0() const { return rho0_; }

  private:
    GmrModel flow_model_;
    ClfModel clf_;
    double rho0_;
    double fallback_lambda_;
};

}  // namespace dsvs
