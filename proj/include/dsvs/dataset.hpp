#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dsvs/types.hpp"
#include "dsvs/vision.hpp"

namespace dsvs {

struct PlanarTrajectory {
    std::vector<double> t;
    std::vector<Eigen::Vector2d> xy;
    std::optional<std::vector<Eigen::Vector2d>> velocities;

    int size() const { return static_cast<int>(t.size()); }
};

struct DemoSample {
    double t = 0.0;
    Vec3 position = Vec3::Zero();
    Vec8 s = Vec8::Zero();
    Vec8 e = Vec8::Zero();
    Vec3 v = Vec3::Zero();
};

// A demonstration recorded against a fixed scene: camera path, projected
// features, visual errors and the velocities that realize the path.
struct Demonstration {
    std::string class_name;
    int demo_index = 0;
    double T = 0.0;
    std::vector<DemoSample> samples;

    int size() const { return static_cast<int>(samples.size()); }
};

enum class TrainingKind { RDS, CLF, FDM };

struct TrainingSet {
    TrainingKind kind = TrainingKind::RDS;
    std::vector<Vec3> inputs;
    std::vector<Vec3> outputs;

    int size() const { return static_cast<int>(inputs.size()); }
};

struct FdmTraining {
    TrainingSet set;          // inputs = averaged demo errors, outputs = linear reference
    Vec3 initial_mean = Vec3::Zero();  // average of the demo initial errors
    int n_samples = 0;
};

// CSV blocks of `t,x,y` rows, one block per demonstration.
std::vector<PlanarTrajectory> load_planar_trajectories(const std::string& path);
void write_planar_trajectories(const std::string& path,
                               const std::vector<PlanarTrajectory>& trajectories);

// Uniformly scale a class of trajectories about their common goal (the final
// sample) so the joint bounding box fits the given square box.
void scale_planar_to_box(std::vector<PlanarTrajectory>& trajectories, double box_size);

// Lift a planar trajectory to a camera demonstration: x-y from the planar
// motion translated to end at the scene target, z linear from z_start to
// z_end, features projected per sample, velocities from forward position
// differences (final sample at rest).
Demonstration augment(const PlanarTrajectory& planar, double z_start, double z_end,
                      const Scene& scene, const std::string& class_name = "", int demo_index = 0);

// Retime to n uniformly spaced samples, re-projecting features from the
// interpolated camera path. Endpoints are preserved exactly.
Demonstration resample(const Demonstration& demo, int n, const Scene& scene);

TrainingSet build_rds_training(const std::vector<Demonstration>& demos, double lambda,
                               const Mat38& target_pinv);
TrainingSet build_clf_training(const std::vector<Demonstration>& demos,
                               const Mat38& target_pinv);
FdmTraining build_fdm_training(const std::vector<Demonstration>& demos,
                               const Mat38& target_pinv);

// Joint (input; output) columns for mixture fitting.
Eigen::MatrixXd to_joint_matrix(const TrainingSet& set);

void write_demonstrations_csv(const std::string& path,
                              const std::vector<Demonstration>& demos);
std::vector<Demonstration> read_demonstrations_csv(const std::string& path);

}  // namespace dsvs
