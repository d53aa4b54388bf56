#include "dsvs/vision.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <sstream>

namespace dsvs {

std::array<Vec3, kPatternPoints> camera_frame_points(const CameraState& camera,
                                                     const TargetPattern& pattern) {
    std::array<Vec3, kPatternPoints> out;
    const Mat3 world_to_camera = camera.orientation.transpose();
    for (int i = 0; i < kPatternPoints; ++i) {
        out[i] = world_to_camera * (pattern.points[i] - camera.position);
    }
    return out;
}

Vec8 project(const CameraState& camera, const TargetPattern& pattern,
             const CameraIntrinsics& intrinsics) {
    const auto pts = camera_frame_points(camera, pattern);
    Vec8 s;
    for (int i = 0; i < kPatternPoints; ++i) {
        const Vec3& p = pts[i];
        if (p.z() <= 0.0) {
            std::ostringstream msg;
            msg << "pattern point " << i << " has non-positive depth Z=" << p.z();
            throw NonPositiveDepth(msg.str());
        }
        s(2 * i) = intrinsics.focal * p.x() / p.z() + intrinsics.principal_point.x();
        s(2 * i + 1) = intrinsics.focal * p.y() / p.z() + intrinsics.principal_point.y();
    }
    return s;
}

Vec4 feature_depths(const CameraState& camera, const TargetPattern& pattern) {
    const auto pts = camera_frame_points(camera, pattern);
    Vec4 z;
    for (int i = 0; i < kPatternPoints; ++i) z(i) = pts[i].z();
    return z;
}

Mat83 interaction_matrix(const Vec8& features, const Vec4& depths) {
    Mat83 L;
    for (int i = 0; i < kPatternPoints; ++i) {
        const double Z = depths(i);
        if (Z <= 0.0) {
            std::ostringstream msg;
            msg << "interaction matrix needs positive depth, got Z=" << Z << " at point " << i;
            throw NonPositiveDepth(msg.str());
        }
        const double x = features(2 * i);
        const double y = features(2 * i + 1);
        L.row(2 * i) << -1.0 / Z, 0.0, x / Z;
        L.row(2 * i + 1) << 0.0, -1.0 / Z, y / Z;
    }
    return L;
}

PseudoinverseResult pseudoinverse(const Mat83& L) {
    Eigen::JacobiSVD<Mat83> svd(L, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double tol =
        8.0 * std::numeric_limits<double>::epsilon() * (sv.size() > 0 ? sv(0) : 0.0);

    PseudoinverseResult res;
    Eigen::Matrix3d sigma_inv = Eigen::Matrix3d::Zero();
    for (int i = 0; i < sv.size(); ++i) {
        if (sv(i) > tol) {
            sigma_inv(i, i) = 1.0 / sv(i);
            ++res.rank;
        }
    }
    res.pinv = svd.matrixV() * sigma_inv * svd.matrixU().leftCols<3>().transpose();
    res.rank_deficient = res.rank < 3;
    return res;
}

Vec3 cartesian_error(const Mat38& target_pinv, const Vec8& e) { return target_pinv * e; }

Vec3 vs_baseline(const Vec3& eps, double lambda) { return -lambda * eps; }

CameraState integrate_step(const CameraState& camera, const Vec3& v, double T) {
    CameraState next = camera;
    next.position += v * T;
    return next;
}

Scene::Scene(TargetPattern pattern, CameraIntrinsics intrinsics, Mat3 camera_orientation,
             Vec3 target_position)
    : pattern_(std::move(pattern)),
      intrinsics_(intrinsics),
      orientation_(std::move(camera_orientation)),
      target_position_(std::move(target_position)) {
    const CameraState target = camera_at(target_position_);
    desired_features_ = project(target, pattern_, intrinsics_);
    target_interaction_ = interaction_world_at(target_position_);
    target_pinv_ = pseudoinverse(target_interaction_).pinv;
}

CameraState Scene::camera_at(const Vec3& position) const {
    return CameraState{position, orientation_};
}

Vec8 Scene::features_at(const Vec3& position) const {
    return project(camera_at(position), pattern_, intrinsics_);
}

Vec8 Scene::error_at(const Vec3& position) const {
    return features_at(position) - desired_features_;
}

Vec3 Scene::cartesian_error_of(const Vec8& e) const { return target_pinv_ * e; }

Mat83 Scene::interaction_world_at(const Vec3& position) const {
    const CameraState cam = camera_at(position);
    const Vec8 s = project(cam, pattern_, intrinsics_);
    const Vec4 z = feature_depths(cam, pattern_);
    // Features respond to camera-frame velocity; fold in the fixed rotation so
    // the matrix acts on world-frame velocity directly.
    return interaction_matrix(s, z) * orientation_.transpose();
}

Scene Scene::make_default(double pattern_half_side, double target_height, double target_x,
                          double target_y) {
    TargetPattern pattern;
    pattern.points[0] = Vec3(pattern_half_side, pattern_half_side, 0.0);
    pattern.points[1] = Vec3(-pattern_half_side, pattern_half_side, 0.0);
    pattern.points[2] = Vec3(-pattern_half_side, -pattern_half_side, 0.0);
    pattern.points[3] = Vec3(pattern_half_side, -pattern_half_side, 0.0);

    // Optical axis along world -z: the camera hovers above the pattern plane
    // and approaches it as its z position decreases.
    Mat3 orientation;
    orientation << 1, 0, 0, 0, -1, 0, 0, 0, -1;

    return Scene(pattern, CameraIntrinsics{}, orientation,
                 Vec3(target_x, target_y, target_height));
}

Trajectory simulate(const ControllerFn& controller, const CameraState& init, const Scene& scene,
                    const SimulationConfig& config) {
    if (config.T <= 0.0) throw Error("simulate: T must be positive");
    if ((init.orientation - scene.camera_orientation()).norm() > 1e-12) {
        throw Error("simulate: camera orientation must match the scene orientation");
    }

    Trajectory traj;
    CameraState camera = init;
    for (int step = 0; step <= config.max_steps; ++step) {
        StepContext ctx;
        ctx.step = step;
        ctx.t = step * config.T;
        ctx.camera = camera;
        ctx.s = project(camera, scene.pattern(), scene.intrinsics());
        ctx.e = ctx.s - scene.desired_features();
        ctx.depths = feature_depths(camera, scene.pattern());

        TrajectoryRecord rec;
        rec.step = step;
        rec.t = ctx.t;
        rec.position = camera.position;
        rec.s = ctx.s;
        rec.e = ctx.e;
        rec.eps = scene.cartesian_error_of(ctx.e);

        const double err_norm = ctx.e.norm();
        if (err_norm < config.convergence_tol) {
            traj.records.push_back(rec);
            traj.converged = true;
            traj.steps = step;
            return traj;
        }
        if (err_norm > config.divergence_bound) {
            traj.records.push_back(rec);
            traj.diverged = true;
            traj.steps = step;
            return traj;
        }
        if (step == config.max_steps) {
            traj.records.push_back(rec);
            traj.steps = step;
            return traj;
        }

        Vec3 v = controller(ctx);
        if (config.velocity_clamp > 0.0 && v.norm() > config.velocity_clamp) {
            v *= config.velocity_clamp / v.norm();
        }
        rec.v = v;
        traj.records.push_back(rec);
        camera = integrate_step(camera, v, config.T);
    }
    return traj;  // unreachable
}

}  // namespace dsvs
