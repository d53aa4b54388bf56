#include "dsvs/synthetic.hpp"

#include <cmath>

namespace dsvs {
namespace {

// Base curves parameterized by s in [1, 0]: s = 1 is the start, s = 0 the
// goal. Handwriting-like strokes that approach the goal cleanly.
Eigen::Vector2d base_curve(const std::string& name, double s) {
    if (name == "sshape") {
        return {0.34 * s, 0.16 * std::sin(2.0 * M_PI * s) * s + 0.08 * s};
    }
    if (name == "jshape") {
        // Cubic Bezier descent with a left hook into the goal.
        const double u = 1.0 - s;
        const Eigen::Vector2d p0(0.26, 0.40), p1(0.30, 0.06), p2(-0.10, 0.16), p3(0.0, 0.0);
        const double b = 1.0 - u;
        return b * b * b * p0 + 3.0 * b * b * u * p1 + 3.0 * b * u * u * p2 + u * u * u * p3;
    }
    if (name == "spiral") {
        const double angle = 0.9 + 2.4 * (1.0 - s);
        return 0.34 * s * Eigen::Vector2d(std::cos(angle), std::sin(angle));
    }
    throw Error("unknown synthetic class '" + name + "'");
}

}  // namespace

std::vector<std::string> synthetic_class_names() { return {"sshape", "jshape", "spiral"}; }

std::vector<PlanarTrajectory> generate_synthetic_class(const std::string& name, int demos,
                                                       int samples, double duration) {
    if (demos < 1 || samples < 2) throw Error("generate_synthetic_class: bad demo/sample count");

    std::vector<PlanarTrajectory> out;
    out.reserve(demos);
    for (int d = 0; d < demos; ++d) {
        // Per-demo variation that keeps the shared goal at the origin.
        const double spread = demos > 1 ? (d - 0.5 * (demos - 1)) / (0.5 * (demos - 1)) : 0.0;
        const double scale = 1.0 + 0.08 * spread;
        const double angle = 0.08 * spread;
        Eigen::Rotation2Dd rot(angle);

        PlanarTrajectory traj;
        traj.t.resize(samples);
        traj.xy.resize(samples);
        for (int i = 0; i < samples; ++i) {
            const double w = static_cast<double>(i) / (samples - 1);
            // Hermite progress profile: gentle start, deep ease-out so the
            // goal neighborhood is densely sampled, as recorded strokes are.
            const double m0 = 0.8, m1 = 0.04;
            const double u = (w * w * w - 2.0 * w * w + w) * m0 +
                             (-2.0 * w * w * w + 3.0 * w * w) +
                             (w * w * w - w * w) * m1;
            traj.t[i] = duration * w;
            traj.xy[i] = scale * (rot * base_curve(name, 1.0 - u));
        }
        traj.xy.back().setZero();
        out.push_back(std::move(traj));
    }
    return out;
}

}  // namespace dsvs
