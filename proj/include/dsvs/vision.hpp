#pragma once

#include <array>
#include <functional>
#include <vector>

#include "dsvs/types.hpp"

namespace dsvs {

// Normalized pinhole model. With focal = 1 and zero principal point the
// features are metric normalized coordinates X/Z, Y/Z.
struct CameraIntrinsics {
    double focal = 1.0;
    Eigen::Vector2d principal_point = Eigen::Vector2d::Zero();
};

// Free-flying camera. The orientation is fixed for the whole run; only the
// position is controlled.
struct CameraState {
    Vec3 position = Vec3::Zero();
    Mat3 orientation = Mat3::Identity();  // camera-to-world rotation
};

struct TargetPattern {
    std::array<Vec3, kPatternPoints> points;  // world frame, meters
};

struct PseudoinverseResult {
    Mat38 pinv = Mat38::Zero();
    int rank = 0;
    bool rank_deficient = false;
};

// Points of the pattern expressed in the camera frame.
std::array<Vec3, kPatternPoints> camera_frame_points(const CameraState& camera,
                                                     const TargetPattern& pattern);

// Perspective projection of the 4 pattern points, stacked (x1,y1,...,x4,y4).
// Throws NonPositiveDepth if any point has Z <= 0 in the camera frame.
Vec8 project(const CameraState& camera, const TargetPattern& pattern,
             const CameraIntrinsics& intrinsics = {});

// Depths Z_i of the pattern points in the camera frame (same order as project).
Vec4 feature_depths(const CameraState& camera, const TargetPattern& pattern);

// Translational point-feature interaction matrix: row pair i is
// [-1/Z, 0, x/Z; 0, -1/Z, y/Z]. Maps camera-frame linear velocity to
// feature rates. Throws NonPositiveDepth.
Mat83 interaction_matrix(const Vec8& features, const Vec4& depths);

// Moore-Penrose pseudoinverse via SVD. Singular values below
// max_dim * eps * sigma_max are truncated; rank < 3 sets the flag.
PseudoinverseResult pseudoinverse(const Mat83& L);

// Cartesian error from the visual error through the fixed target pseudoinverse.
Vec3 cartesian_error(const Mat38& target_pinv, const Vec8& e);

// Classical law v = -lambda * eps.
Vec3 vs_baseline(const Vec3& eps, double lambda);

// Explicit Euler step; orientation is untouched.
CameraState integrate_step(const CameraState& camera, const Vec3& v, double T);

// Target geometry bundle: pattern, intrinsics, fixed camera orientation and
// desired camera position, plus everything derived from the target
// configuration (desired features, fixed interaction matrix and its
// pseudoinverse, all in world-velocity coordinates).
class Scene {
  public:
    Scene(TargetPattern pattern, CameraIntrinsics intrinsics, Mat3 camera_orientation,
          Vec3 target_position);

    const TargetPattern& pattern() const { return pattern_; }
    const CameraIntrinsics& intrinsics() const { return intrinsics_; }
    const Mat3& camera_orientation() const { return orientation_; }
    const Vec3& target_position() const { return target_position_; }
    const Vec8& desired_features() const { return desired_features_; }
    const Mat83& target_interaction() const { return target_interaction_; }
    const Mat38& target_pinv() const { return target_pinv_; }

    CameraState camera_at(const Vec3& position) const;
    Vec8 features_at(const Vec3& position) const;
    Vec8 error_at(const Vec3& position) const;
    Vec3 cartesian_error_of(const Vec8& e) const;

    // Interaction matrix in world-velocity coordinates at an arbitrary camera
    // position (the camera-frame matrix rotated by the fixed orientation).
    Mat83 interaction_world_at(const Vec3& position) const;

    // Default desk-scale scene: 0.2 m square pattern in the z = 0 plane,
    // camera looking straight down, target pose 0.5 m above the pattern.
    static Scene make_default(double pattern_half_side = 0.1, double target_height = 0.5,
                              double target_x = 0.0, double target_y = 0.0);

  private:
    TargetPattern pattern_;
    CameraIntrinsics intrinsics_;
    Mat3 orientation_;
    Vec3 target_position_;
    Vec8 desired_features_;
    Mat83 target_interaction_;
    Mat38 target_pinv_;
};

struct StepContext {
    int step = 0;
    double t = 0.0;
    CameraState camera;
    Vec8 s = Vec8::Zero();
    Vec8 e = Vec8::Zero();
    Vec4 depths = Vec4::Zero();
};

// Velocity policy queried once per control step.
using ControllerFn = std::function<Vec3(const StepContext&)>;

struct TrajectoryRecord {
    int step = 0;
    double t = 0.0;
    Vec3 position = Vec3::Zero();
    Vec8 s = Vec8::Zero();
    Vec8 e = Vec8::Zero();
    Vec3 eps = Vec3::Zero();  // fixed-target cartesian error, recorded at every step
    Vec3 v = Vec3::Zero();    // commanded velocity (zero on the terminal record)
};

struct SimulationConfig {
    double T = 0.03;
    int max_steps = 1000;
    double convergence_tol = 1e-3;   // on ||e||
    double divergence_bound = 10.0;  // on ||e||
    double velocity_clamp = 0.0;     // 0 disables clamping
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    bool converged = false;
    bool diverged = false;
    int steps = 0;
};

// Closed loop: project -> error -> controller -> integrate until ||e|| drops
// below tolerance or the step budget runs out. NonPositiveDepth propagates;
// divergence is flagged on the trajectory, not thrown.
Trajectory simulate(const ControllerFn& controller, const CameraState& init, const Scene& scene,
                    const SimulationConfig& config);

}  // namespace dsvs
