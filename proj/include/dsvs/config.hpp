#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dsvs/types.hpp"
#include "dsvs/vision.hpp"

namespace dsvs {

constexpr int kConfigVersion = 1;

struct DatasetConfig {
    std::string source = "synthetic";  // synthetic | csv
    std::vector<std::string> classes;  // empty = all synthetic classes / all csv files
    std::string planar_dir;            // csv source directory
    int demos_per_class = 3;
    int samples = 100;                 // resampled demonstration length
    int raw_samples = 400;             // synthetic generator resolution
    double duration = 2.97;            // seconds, (samples-1) * T
    double scale_box = 0.5;            // meters, planar bounding box
    double z_start = 1.0;
    double z_end = 0.5;
};

struct SceneConfig {
    double pattern_half_side = 0.1;
    Vec3 target = Vec3(0.0, 0.0, 0.5);
    double focal = 1.0;
    double pixels_per_unit = 500.0;  // reporting conversion for s_RMS
};

struct ControlConfig {
    double lambda = 1.0;
    double T = 0.03;
    int max_steps = 1000;
    double convergence_tol = 1e-3;
    double divergence_bound = 10.0;
    // Caps commanded speed in closed loop; learned terms can extrapolate
    // violently once a run leaves the demonstrated region. 0 disables.
    double velocity_clamp = 1.0;
};

struct RdsConfig {
    std::vector<int> k_grid = {7, 11};
    int clock_t0_steps = 100;
    double clock_decay_tau = 0.5;
    bool hold_clock_in_eval = true;  // h = 1 for the whole reproduction
};

struct ClfdmConfig {
    std::vector<int> k_grid = {7, 11};
    int asym_count = 2;
    double rho0_factor = 0.1;  // rho0 = factor * lambda
    double violation_ceiling = 0.25;
    int restarts = 5;
    int max_iter = 500;
    double margin = 1e-4;
};

struct FdmConfig {
    std::vector<int> k_grid = {50, 150};
    double step_fraction = 0.9;
    double width_factor = 2.0;
    double stop_tol = 1e-4;
    std::string jacobian_at = "preimage";  // or "epsilon"
};

struct GmmConfig {
    int max_iter = 500;
    double tol = 1e-8;
    // Covariance floor (times the data trace scale). Larger than the library
    // default: demonstration tails cluster within millimeters of the goal and
    // a floor this size lets the goal component keep usable reach.
    double reg = 1e-4;
};

struct EvalConfig {
    int perturbed_starts = 5;
    double perturb_radius_fraction = 0.1;  // of the mean demo path length
};

struct ExperimentConfig {
    int config_version = kConfigVersion;
    std::uint64_t seed = 42;
    std::string out_dir = "out";
    DatasetConfig dataset;
    SceneConfig scene;
    ControlConfig control;
    RdsConfig rds;
    ClfdmConfig clfdm;
    FdmConfig fdm;
    GmmConfig gmm;
    EvalConfig eval;

    Scene make_scene() const;
    SimulationConfig make_sim_config() const;

    // Throws ConfigError on out-of-range or inconsistent settings.
    void validate() const;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    void save(const std::string& path) const;
};

}  // namespace dsvs
