#include "dsvs/rds.hpp"

#include <cmath>

namespace dsvs {

double ClockSignal::value(double t) const {
    if (t < 0.0) throw Error("clock_value: negative time");
    if (t <= t0) return 1.0;
    return std::exp(-(t - t0) / decay_tau);
}

RdsController::RdsController(GmrModel model, double lambda, ClockSignal clock)
    : model_(std::move(model)), lambda_(lambda), clock_(clock) {
    if (lambda_ <= 0.0) throw Error("RdsController: lambda must be positive");
    if (clock_.t0 < 0.0 || clock_.decay_tau <= 0.0)
        throw Error("RdsController: invalid clock parameters");
    if (model_.input_dim() != 3 || model_.output_dim() != 3)
        throw Error("RdsController: model must map R3 -> R3");
}

Vec3 RdsController::reshaping(const Vec3& eps) const { return model_.predict(eps).mean; }

Vec3 RdsController::velocity(const Vec3& eps, double t) const {
    const double h = clock_.value(t);
    Vec3 v = -lambda_ * eps;
    if (h > 0.0) v += h * reshaping(eps);
    return v;
}

}  // namespace dsvs
