#pragma once

#include "dsvs/gmr.hpp"
#include "dsvs/types.hpp"

namespace dsvs {

// Scalar gate for the learned reshaping term: full activation until t0, then
// exponential decay so the base law takes over.
struct ClockSignal {
    double t0 = 3.0;
    double decay_tau = 0.5;

    double value(double t) const;
};

// Reshaped servoing law v = -lambda * eps + h(t) * u(eps).
class RdsController {
  public:
    RdsController(GmrModel model, double lambda, ClockSignal clock);

    Vec3 velocity(const Vec3& eps, double t) const;
    Vec3 reshaping(const Vec3& eps) const;

    const GmrModel& model() const { return model_; }
    double lambda() const { return lambda_; }
    const ClockSignal& clock() const { return clock_; }

  private:
    GmrModel model_;
    double lambda_;
    ClockSignal clock_;
};

}  // namespace dsvs
