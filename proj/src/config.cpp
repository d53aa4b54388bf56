#include "dsvs/config.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace dsvs {
namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& value) {
    if (j.contains(key)) value = j.at(key).get<T>();
}

void read_vec3(const nlohmann::json& j, const char* key, Vec3& value) {
    if (j.contains(key)) {
        const auto v = j.at(key).get<std::vector<double>>();
        if (v.size() != 3) throw ConfigError(std::string(key) + " must have 3 entries");
        value = Vec3(v[0], v[1], v[2]);
    }
}

}  // namespace

Scene ExperimentConfig::make_scene() const {
    return Scene::make_default(scene.pattern_half_side, scene.target.z(), scene.target.x(),
                               scene.target.y());
}

SimulationConfig ExperimentConfig::make_sim_config() const {
    SimulationConfig sim;
    sim.T = control.T;
    sim.max_steps = control.max_steps;
    sim.convergence_tol = control.convergence_tol;
    sim.divergence_bound = control.divergence_bound;
    sim.velocity_clamp = control.velocity_clamp;
    return sim;
}

void ExperimentConfig::validate() const {
    if (config_version != kConfigVersion)
        throw ConfigError("unsupported config_version " + std::to_string(config_version));
    if (control.lambda <= 0.0) throw ConfigError("control.lambda must be positive");
    if (control.T <= 0.0) throw ConfigError("control.T must be positive");
    if (control.max_steps < 1) throw ConfigError("control.max_steps must be at least 1");
    if (dataset.samples < 2) throw ConfigError("dataset.samples must be at least 2");
    if (dataset.demos_per_class < 1) throw ConfigError("dataset.demos_per_class must be >= 1");
    if (dataset.source != "synthetic" && dataset.source != "csv")
        throw ConfigError("dataset.source must be 'synthetic' or 'csv'");
    if (dataset.source == "csv" && dataset.planar_dir.empty())
        throw ConfigError("dataset.planar_dir required for csv source");
    if (std::abs(dataset.z_end - scene.target.z()) > 1e-9)
        throw ConfigError("dataset.z_end must equal scene.target z");
    if (std::abs(dataset.duration - (dataset.samples - 1) * control.T) > 1e-9)
        throw ConfigError("dataset.duration must equal (samples-1) * control.T");
    if (rds.k_grid.empty() || clfdm.k_grid.empty() || fdm.k_grid.empty())
        throw ConfigError("k grids must be non-empty");
    for (int k : rds.k_grid)
        if (k < 1) throw ConfigError("rds.k_grid entries must be positive");
    for (int k : clfdm.k_grid)
        if (k < 1) throw ConfigError("clfdm.k_grid entries must be positive");
    for (int k : fdm.k_grid)
        if (k < 1) throw ConfigError("fdm.k_grid entries must be positive");
    if (clfdm.asym_count < 0) throw ConfigError("clfdm.asym_count must be >= 0");
    if (clfdm.rho0_factor <= 0.0) throw ConfigError("clfdm.rho0_factor must be positive");
    if (fdm.step_fraction <= 0.0 || fdm.step_fraction > 1.0)
        throw ConfigError("fdm.step_fraction must be in (0, 1]");
    if (fdm.jacobian_at != "preimage" && fdm.jacobian_at != "epsilon")
        throw ConfigError("fdm.jacobian_at must be 'preimage' or 'epsilon'");
    if (eval.perturbed_starts < 0) throw ConfigError("eval.perturbed_starts must be >= 0");
    if (scene.pixels_per_unit <= 0.0) throw ConfigError("scene.pixels_per_unit must be positive");
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["config_version"] = config_version;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["dataset"] = {{"source", dataset.source},
                    {"classes", dataset.classes},
                    {"planar_dir", dataset.planar_dir},
                    {"demos_per_class", dataset.demos_per_class},
                    {"samples", dataset.samples},
                    {"raw_samples", dataset.raw_samples},
                    {"duration", dataset.duration},
                    {"scale_box", dataset.scale_box},
                    {"z_start", dataset.z_start},
                    {"z_end", dataset.z_end}};
    j["scene"] = {{"pattern_half_side", scene.pattern_half_side},
                  {"target", {scene.target.x(), scene.target.y(), scene.target.z()}},
                  {"focal", scene.focal},
                  {"pixels_per_unit", scene.pixels_per_unit}};
    j["control"] = {{"lambda", control.lambda},
                    {"T", control.T},
                    {"max_steps", control.max_steps},
                    {"convergence_tol", control.convergence_tol},
                    {"divergence_bound", control.divergence_bound},
                    {"velocity_clamp", control.velocity_clamp}};
    j["rds"] = {{"k_grid", rds.k_grid},
                {"clock_t0_steps", rds.clock_t0_steps},
                {"clock_decay_tau", rds.clock_decay_tau},
                {"hold_clock_in_eval", rds.hold_clock_in_eval}};
    j["clfdm"] = {{"k_grid", clfdm.k_grid},
                  {"asym_count", clfdm.asym_count},
                  {"rho0_factor", clfdm.rho0_factor},
                  {"violation_ceiling", clfdm.violation_ceiling},
                  {"restarts", clfdm.restarts},
                  {"max_iter", clfdm.max_iter},
                  {"margin", clfdm.margin}};
    j["fdm"] = {{"k_grid", fdm.k_grid},
                {"step_fraction", fdm.step_fraction},
                {"width_factor", fdm.width_factor},
                {"stop_tol", fdm.stop_tol},
                {"jacobian_at", fdm.jacobian_at}};
    j["gmm"] = {{"max_iter", gmm.max_iter}, {"tol", gmm.tol}, {"reg", gmm.reg}};
    j["eval"] = {{"perturbed_starts", eval.perturbed_starts},
                 {"perturb_radius_fraction", eval.perturb_radius_fraction}};
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    read_if(j, "config_version", c.config_version);
    read_if(j, "seed", c.seed);
    read_if(j, "out_dir", c.out_dir);
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        read_if(d, "source", c.dataset.source);
        read_if(d, "classes", c.dataset.classes);
        read_if(d, "planar_dir", c.dataset.planar_dir);
        read_if(d, "demos_per_class", c.dataset.demos_per_class);
        read_if(d, "samples", c.dataset.samples);
        read_if(d, "raw_samples", c.dataset.raw_samples);
        read_if(d, "duration", c.dataset.duration);
        read_if(d, "scale_box", c.dataset.scale_box);
        read_if(d, "z_start", c.dataset.z_start);
        read_if(d, "z_end", c.dataset.z_end);
    }
    if (j.contains("scene")) {
        const auto& s = j.at("scene");
        read_if(s, "pattern_half_side", c.scene.pattern_half_side);
        read_vec3(s, "target", c.scene.target);
        read_if(s, "focal", c.scene.focal);
        read_if(s, "pixels_per_unit", c.scene.pixels_per_unit);
    }
    if (j.contains("control")) {
        const auto& ctl = j.at("control");
        read_if(ctl, "lambda", c.control.lambda);
        read_if(ctl, "T", c.control.T);
        read_if(ctl, "max_steps", c.control.max_steps);
        read_if(ctl, "convergence_tol", c.control.convergence_tol);
        read_if(ctl, "divergence_bound", c.control.divergence_bound);
        read_if(ctl, "velocity_clamp", c.control.velocity_clamp);
    }
    if (j.contains("rds")) {
        const auto& r = j.at("rds");
        read_if(r, "k_grid", c.rds.k_grid);
        read_if(r, "clock_t0_steps", c.rds.clock_t0_steps);
        read_if(r, "clock_decay_tau", c.rds.clock_decay_tau);
        read_if(r, "hold_clock_in_eval", c.rds.hold_clock_in_eval);
    }
    if (j.contains("clfdm")) {
        const auto& cl = j.at("clfdm");
        read_if(cl, "k_grid", c.clfdm.k_grid);
        read_if(cl, "asym_count", c.clfdm.asym_count);
        read_if(cl, "rho0_factor", c.clfdm.rho0_factor);
        read_if(cl, "violation_ceiling", c.clfdm.violation_ceiling);
        read_if(cl, "restarts", c.clfdm.restarts);
        read_if(cl, "max_iter", c.clfdm.max_iter);
        read_if(cl, "margin", c.clfdm.margin);
    }
    if (j.contains("fdm")) {
        const auto& f = j.at("fdm");
        read_if(f, "k_grid", c.fdm.k_grid);
        read_if(f, "step_fraction", c.fdm.step_fraction);
        read_if(f, "width_factor", c.fdm.width_factor);
        read_if(f, "stop_tol", c.fdm.stop_tol);
        read_if(f, "jacobian_at", c.fdm.jacobian_at);
    }
    if (j.contains("gmm")) {
        const auto& g = j.at("gmm");
        read_if(g, "max_iter", c.gmm.max_iter);
        read_if(g, "tol", c.gmm.tol);
        read_if(g, "reg", c.gmm.reg);
    }
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        read_if(e, "perturbed_starts", c.eval.perturbed_starts);
        read_if(e, "perturb_radius_fraction", c.eval.perturb_radius_fraction);
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c = from_json(j);
    c.validate();
    return c;
}

void ExperimentConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write config file: " + path);
    out << to_json().dump(2) << "\n";
}

}  // namespace dsvs
