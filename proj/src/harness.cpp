#include "dsvs/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dsvs/synthetic.hpp"

namespace fs = std::filesystem;

namespace dsvs {
namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt_cell(double mean, double stddev) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f \xC2\xB1 %.1f", mean, stddev);
    return buf;
}

const std::vector<std::string> kMethods = {"baseline", "rds", "clfdm", "fdm"};

void require_method(const std::string& method) {
    if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end())
        throw ConfigError("unknown method '" + method + "'");
}

std::uint64_t class_seed(std::uint64_t base, const std::string& class_name) {
    std::uint64_t h = base ^ 0xcbf29ce484222325ull;
    for (char c : class_name) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ull;
    return h;
}

}  // namespace

AggregateMetric aggregate(const std::vector<double>& values) {
    AggregateMetric m;
    if (values.empty()) return m;
    for (double v : values) m.mean += v;
    m.mean /= values.size();
    for (double v : values) m.stddev += (v - m.mean) * (v - m.mean);
    m.stddev = std::sqrt(m.stddev / values.size());
    return m;
}

double demo_path_length(const Demonstration& demo) {
    double length = 0.0;
    for (int i = 0; i + 1 < demo.size(); ++i)
        length += (demo.samples[i + 1].position - demo.samples[i].position).norm();
    return length;
}

double demo_feature_excursion(const Demonstration& demo) {
    double worst = 0.0;
    for (const auto& sample : demo.samples) worst = std::max(worst, sample.e.norm());
    return worst;
}

RunMetrics compare_to_demo(const Trajectory& traj, const Demonstration& demo,
                           double convergence_tol) {
    RunMetrics out;
    out.converged = traj.converged;
    out.diverged = traj.diverged;
    const int n = demo.size();
    const int last = static_cast<int>(traj.records.size()) - 1;
    out.diverged_in_window = traj.diverged && traj.steps < n;
    if (out.diverged_in_window) return out;

    double p2 = 0.0, v2 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& rec = traj.records[std::min(i, last)];
        const auto& ref = demo.samples[i];
        p2 += (rec.position - ref.position).squaredNorm();
        v2 += (rec.v - ref.v).squaredNorm();
        s2 += (rec.e - ref.e).squaredNorm();
    }
    out.p_rms_m = std::sqrt(p2 / n);
    out.v_rms_m_s = std::sqrt(v2 / n);
    out.s_rms_units = std::sqrt(s2 / n);

    if (!traj.converged && !traj.diverged && last >= 50) {
        const double tail = traj.records[last].e.norm();
        const double before = traj.records[last - 50].e.norm();
        out.stalled = tail > convergence_tol && std::abs(tail - before) < 1e-6;
    }
    return out;
}

Harness::Harness(ExperimentConfig config)
    : config_(std::move(config)), scene_(config_.make_scene()) {
    config_.validate();
}

std::vector<ClassDemos> Harness::build_dataset() const {
    std::vector<ClassDemos> dataset;
    const auto& dc = config_.dataset;

    if (dc.source == "synthetic") {
        std::vector<std::string> classes = dc.classes;
        if (classes.empty()) classes = synthetic_class_names();
        for (const auto& name : classes) {
            ClassDemos cd;
            cd.name = name;
            const auto planars =
                generate_synthetic_class(name, dc.demos_per_class, dc.raw_samples, dc.duration);
            int idx = 0;
            for (const auto& planar : planars) {
                Demonstration demo = augment(planar, dc.z_start, dc.z_end, scene_, name, idx++);
                cd.demos.push_back(resample(demo, dc.samples, scene_));
            }
            dataset.push_back(std::move(cd));
        }
        return dataset;
    }

    // CSV ingestion: one file per class, demonstration blocks inside.
    if (!fs::is_directory(dc.planar_dir))
        throw ParseError("planar_dir does not exist: " + dc.planar_dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dc.planar_dir)) {
        if (entry.path().extension() == ".csv") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ParseError("no .csv files in " + dc.planar_dir);

    for (const auto& file : files) {
        const std::string name = fs::path(file).stem().string();
        if (!dc.classes.empty() &&
            std::find(dc.classes.begin(), dc.classes.end(), name) == dc.classes.end())
            continue;
        auto planars = load_planar_trajectories(file);
        if (static_cast<int>(planars.size()) > dc.demos_per_class)
            planars.resize(dc.demos_per_class);
        scale_planar_to_box(planars, dc.scale_box);

        ClassDemos cd;
        cd.name = name;
        int idx = 0;
        for (const auto& planar : planars) {
            Demonstration demo = augment(planar, dc.z_start, dc.z_end, scene_, name, idx++);
            cd.demos.push_back(resample(demo, dc.samples, scene_));
        }
        dataset.push_back(std::move(cd));
    }
    if (dataset.empty()) throw ParseError("no matching classes in " + dc.planar_dir);
    return dataset;
}

void Harness::generate() const {
    const auto dataset = build_dataset();
    const fs::path dir = fs::path(config_.out_dir) / "dataset";
    fs::create_directories(dir);

    nlohmann::json manifest;
    manifest["classes"] = nlohmann::json::array();
    for (const auto& cd : dataset) {
        write_demonstrations_csv((dir / (cd.name + ".csv")).string(), cd.demos);
        manifest["classes"].push_back(cd.name);
    }
    manifest["demos_per_class"] = config_.dataset.demos_per_class;
    manifest["samples"] = config_.dataset.samples;
    manifest["scene"] = {
        {"pattern_half_side", config_.scene.pattern_half_side},
        {"target",
         {config_.scene.target.x(), config_.scene.target.y(), config_.scene.target.z()}},
        {"z_start", config_.dataset.z_start},
        {"z_end", config_.dataset.z_end},
        {"scale_box", config_.dataset.scale_box}};
    manifest["config"] = config_.to_json();

    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << "\n";
}

std::vector<ClassDemos> Harness::load_dataset() const {
    const fs::path dir = fs::path(config_.out_dir) / "dataset";
    std::ifstream in(dir / "manifest.json");
    if (!in)
        throw Error("dataset manifest not found under " + dir.string() + "; run generate first");
    nlohmann::json manifest;
    in >> manifest;

    std::vector<ClassDemos> dataset;
    for (const auto& name : manifest.at("classes")) {
        ClassDemos cd;
        cd.name = name.get<std::string>();
        cd.demos = read_demonstrations_csv((dir / (cd.name + ".csv")).string());
        for (auto& demo : cd.demos) demo.class_name = cd.name;
        dataset.push_back(std::move(cd));
    }
    return dataset;
}

std::string Harness::model_path(const std::string& method, const std::string& class_name,
                                int k) const {
    return (fs::path(config_.out_dir) / "models" /
            (method + "_" + class_name + "_k" + std::to_string(k) + ".json"))
        .string();
}

std::string Harness::report_path(const std::string& method, int k) const {
    return (fs::path(config_.out_dir) / "reports" /
            (method + "_k" + std::to_string(k) + "_report.json"))
        .string();
}

std::string Harness::train_summary_path(const std::string& method) const {
    return (fs::path(config_.out_dir) / "models" / ("train_" + method + ".json")).string();
}

std::vector<int> Harness::grid_for(const std::string& method) const {
    require_method(method);
    if (method == "rds") return config_.rds.k_grid;
    if (method == "clfdm") return config_.clfdm.k_grid;
    if (method == "fdm") return config_.fdm.k_grid;
    return {0};  // baseline has no hyper-parameter
}

TrainSummary Harness::train(const std::string& method, std::optional<int> k_only) const {
    require_method(method);
    if (method == "baseline") throw ConfigError("baseline has nothing to train");
    const auto dataset = load_dataset();
    fs::create_directories(fs::path(config_.out_dir) / "models");

    TrainSummary summary;
    summary.method = method;
    std::vector<int> grid = grid_for(method);
    if (k_only) grid = {*k_only};

    GmmFitConfig gmm_config;
    gmm_config.max_iter = config_.gmm.max_iter;
    gmm_config.tol = config_.gmm.tol;
    gmm_config.reg = config_.gmm.reg;

    for (int k : grid) {
        for (const auto& cd : dataset) {
            TrainRecord record;
            record.class_name = cd.name;
            record.k = k;
            const std::uint64_t seed = class_seed(config_.seed, cd.name);
            try {
                nlohmann::json model;
                if (method == "rds") {
                    const auto training =
                        build_rds_training(cd.demos, config_.control.lambda, scene_.target_pinv());
                    const auto fit = fit_gmm(to_joint_matrix(training), 3, k, seed, gmm_config);
                    record.tau_ms = fit.training_time_ms;
                    model["type"] = "rds";
                    model["k"] = k;
                    model["lambda"] = config_.control.lambda;
                    model["clock_t0"] = config_.rds.clock_t0_steps * config_.control.T;
                    model["clock_decay_tau"] = config_.rds.clock_decay_tau;
                    model["gmr"] = fit.model.to_json();
                } else if (method == "clfdm") {
                    const auto training = build_clf_training(cd.demos, scene_.target_pinv());
                    const auto fit = fit_gmm(to_joint_matrix(training), 3, k, seed, gmm_config);
                    ClfLearnConfig clf_config;
                    clf_config.restarts = config_.clfdm.restarts;
                    clf_config.max_iter = config_.clfdm.max_iter;
                    clf_config.margin = config_.clfdm.margin;
                    clf_config.violation_ceiling = config_.clfdm.violation_ceiling;
                    const auto clf = learn_clf(training, config_.clfdm.asym_count, seed, clf_config);
                    record.tau_ms = fit.training_time_ms + clf.training_time_ms;
                    record.clf_violation_fraction = clf.violation_fraction;
                    model["type"] = "clfdm";
                    model["k"] = k;
                    model["rho0"] = config_.clfdm.rho0_factor * config_.control.lambda;
                    model["lambda"] = config_.control.lambda;
                    model["flow"] = fit.model.to_json();
                    model["clf"] = clf.model.to_json();
                    model["violation_fraction"] = clf.violation_fraction;
                } else {  // fdm
                    const auto training = build_fdm_training(cd.demos, scene_.target_pinv());
                    FdmMatchConfig match_config;
                    match_config.step_fraction = config_.fdm.step_fraction;
                    match_config.width_factor = config_.fdm.width_factor;
                    match_config.stop_tol = config_.fdm.stop_tol;
                    const auto match = fast_diffeo_match(training, k, match_config);
                    record.tau_ms = match.training_time_ms;
                    record.fdm_residual = match.final_residual;
                    model["type"] = "fdm";
                    model["k"] = k;
                    model["jacobian_at"] = config_.fdm.jacobian_at;
                    model["initial_mean"] = {training.initial_mean.x(), training.initial_mean.y(),
                                             training.initial_mean.z()};
                    model["n_samples"] = training.n_samples;
                    model["T"] = cd.demos.front().T;
                    model["final_residual"] = match.final_residual;
                    model["map"] = match.map.to_json();
                }
                std::ofstream out(model_path(method, cd.name, k));
                out << model.dump(2) << "\n";
            } catch (const Error& e) {
                // Per-class failure is recorded, the sweep continues.
                record.tau_ms = -1.0;
                record.error = e.what();
            }
            summary.records.push_back(std::move(record));
        }
    }

    nlohmann::json j;
    j["method"] = method;
    j["records"] = nlohmann::json::array();
    for (const auto& r : summary.records) {
        nlohmann::json jr = {{"class", r.class_name}, {"k", r.k}, {"tau_ms", r.tau_ms}};
        if (r.clf_violation_fraction >= 0.0)
            jr["clf_violation_fraction"] = r.clf_violation_fraction;
        if (r.fdm_residual >= 0.0) jr["fdm_residual"] = r.fdm_residual;
        if (!r.error.empty()) jr["error"] = r.error;
        j["records"].push_back(jr);
    }
    std::ofstream out(train_summary_path(method));
    out << j.dump(2) << "\n";
    return summary;
}

AggregateMetric TrainSummary::tau_for_k(int k) const {
    std::vector<double> taus;
    for (const auto& r : records) {
        if (r.k == k && r.tau_ms >= 0.0) taus.push_back(r.tau_ms);
    }
    return aggregate(taus);
}

RdsController Harness::load_rds(const std::string& class_name, int k) const {
    std::ifstream in(model_path("rds", class_name, k));
    if (!in) throw Error("missing rds model for class " + class_name + ", k=" + std::to_string(k));
    nlohmann::json j;
    in >> j;
    ClockSignal clock{j.at("clock_t0").get<double>(), j.at("clock_decay_tau").get<double>()};
    return RdsController(GmrModel::from_json(j.at("gmr")), j.at("lambda").get<double>(), clock);
}

ClfdmController Harness::load_clfdm(const std::string& class_name, int k) const {
    std::ifstream in(model_path("clfdm", class_name, k));
    if (!in)
        throw Error("missing clfdm model for class " + class_name + ", k=" + std::to_string(k));
    nlohmann::json j;
    in >> j;
    return ClfdmController(GmrModel::from_json(j.at("flow")), ClfModel::from_json(j.at("clf")),
                           j.at("rho0").get<double>(), j.at("lambda").get<double>());
}

FdmController Harness::load_fdm(const std::string& class_name, int k) const {
    std::ifstream in(model_path("fdm", class_name, k));
    if (!in) throw Error("missing fdm model for class " + class_name + ", k=" + std::to_string(k));
    nlohmann::json j;
    in >> j;
    const auto mean = j.at("initial_mean").get<std::vector<double>>();
    return FdmController(DiffeoMap::from_json(j.at("map")), Vec3(mean[0], mean[1], mean[2]),
                         j.at("n_samples").get<int>(), j.at("T").get<double>(),
                         jacobian_at_from_string(j.at("jacobian_at").get<std::string>()));
}

namespace {

// Per-run controller wrapper plus the CSV extras (h, V, gamma columns).
struct MethodRuntime {
    ControllerFn controller;
    std::function<std::array<std::string, 3>(const TrajectoryRecord&)> extras;
    std::shared_ptr<int> fallback_counter;
    std::shared_ptr<int> crossing_counter;
};

}  // namespace

std::vector<MethodEvaluation> Harness::evaluate(const std::string& method,
                                                std::optional<int> k_only) const {
    require_method(method);
    const auto dataset = load_dataset();
    fs::create_directories(fs::path(config_.out_dir) / "reports");
    fs::create_directories(fs::path(config_.out_dir) / "trajectories");

    std::vector<int> grid = grid_for(method);
    if (k_only) grid = {*k_only};

    std::vector<MethodEvaluation> evals;
    for (int k : grid) {
        MethodEvaluation eval = evaluate_one(method, k, dataset);
        std::ofstream out(report_path(method, k));
        out << eval.to_json(config_).dump(2) << "\n";
        evals.push_back(std::move(eval));
    }
    return evals;
}

MethodEvaluation Harness::evaluate_one(const std::string& method, int k,
                                       const std::vector<ClassDemos>& dataset) const {
    MethodEvaluation eval;
    eval.method = method;
    eval.k = k;
    const SimulationConfig sim = config_.make_sim_config();
    const double lambda = config_.control.lambda;
    const double px = config_.scene.pixels_per_unit;
    const bool hold_clock = config_.rds.hold_clock_in_eval;

    for (const auto& cd : dataset) {
        ClassEvaluation ce;
        ce.class_name = cd.name;
        for (const auto& demo : cd.demos) {
            if (std::abs(demo.T - config_.control.T) > 1e-9)
                throw ConfigError("demonstration sampling period " + std::to_string(demo.T) +
                                  " does not match control.T");
            ce.mean_path_length_m += demo_path_length(demo);
            ce.mean_feature_excursion += demo_feature_excursion(demo);
        }
        ce.mean_path_length_m /= cd.demos.size();
        ce.mean_feature_excursion /= cd.demos.size();

        // Shared immutable controllers for this class; closures below only
        // track per-run counters.
        std::shared_ptr<RdsController> rds_ctrl;
        std::shared_ptr<ClfdmController> clfdm_ctrl;
        std::shared_ptr<FdmController> fdm_ctrl;
        if (method == "rds") rds_ctrl = std::make_shared<RdsController>(load_rds(cd.name, k));
        if (method == "clfdm")
            clfdm_ctrl = std::make_shared<ClfdmController>(load_clfdm(cd.name, k));
        if (method == "fdm") fdm_ctrl = std::make_shared<FdmController>(load_fdm(cd.name, k));

        auto make_runtime = [&]() -> MethodRuntime {
            MethodRuntime rt;
            if (method == "baseline") {
                rt.controller = [this, lambda](const StepContext& ctx) {
                    return vs_baseline(scene_.cartesian_error_of(ctx.e), lambda);
                };
                rt.extras = [](const TrajectoryRecord&) {
                    return std::array<std::string, 3>{"", "", ""};
                };
            } else if (method == "rds") {
                rt.controller = [this, rds_ctrl, hold_clock](const StepContext& ctx) {
                    const Vec3 eps = scene_.cartesian_error_of(ctx.e);
                    if (hold_clock)
                        return Vec3(-rds_ctrl->lambda() * eps + rds_ctrl->reshaping(eps));
                    return rds_ctrl->velocity(eps, ctx.t);
                };
                rt.extras = [rds_ctrl, hold_clock](const TrajectoryRecord& rec) {
                    const double h = hold_clock ? 1.0 : rds_ctrl->clock().value(rec.t);
                    return std::array<std::string, 3>{fmt(h), "", ""};
                };
            } else if (method == "clfdm") {
                auto fallbacks = std::make_shared<int>(0);
                rt.controller = [this, clfdm_ctrl, fallbacks](const StepContext& ctx) {
                    bool fell_back = false;
                    const Vec3 v =
                        clfdm_ctrl->velocity(scene_.cartesian_error_of(ctx.e), &fell_back);
                    if (fell_back) ++(*fallbacks);
                    return v;
                };
                rt.extras = [clfdm_ctrl](const TrajectoryRecord& rec) {
                    return std::array<std::string, 3>{"", fmt(clfdm_ctrl->clf().value(rec.eps)),
                                                      ""};
                };
                rt.fallback_counter = fallbacks;
            } else {
                auto crossings = std::make_shared<int>(0);
                auto prev_branch = std::make_shared<int>(-1);
                rt.controller = [this, fdm_ctrl, crossings, prev_branch](const StepContext& ctx) {
                    const Vec3 eps = scene_.cartesian_error_of(ctx.e);
                    const int branch = fdm_ctrl->low_gain_branch(eps) ? 1 : 0;
                    if (*prev_branch >= 0 && branch != *prev_branch) ++(*crossings);
                    *prev_branch = branch;
                    return fdm_ctrl->velocity(eps);
                };
                rt.extras = [fdm_ctrl](const TrajectoryRecord& rec) {
                    return std::array<std::string, 3>{"", "", fmt(fdm_ctrl->gamma(rec.eps))};
                };
                rt.crossing_counter = crossings;
            }
            return rt;
        };

        auto run_and_record = [&](const Vec3& start, const std::string& tag,
                                  const Demonstration* reference) {
            MethodRuntime rt = make_runtime();
            const Trajectory traj = simulate(rt.controller, scene_.camera_at(start), scene_, sim);
            const fs::path csv = fs::path(config_.out_dir) / "trajectories" /
                                 (method + "_" + cd.name + "_k" + std::to_string(k) + "_" + tag +
                                  ".csv");
            std::ofstream out(csv);
            out << "step,t,px,py,pz,s1,s2,s3,s4,s5,s6,s7,s8,e1,e2,e3,e4,e5,e6,e7,e8,vx,vy,vz,"
                   "h,V,gamma\n";
            for (const auto& rec : traj.records) {
                out << rec.step << "," << fmt(rec.t);
                for (int c = 0; c < 3; ++c) out << "," << fmt(rec.position(c));
                for (int c = 0; c < 8; ++c) out << "," << fmt(rec.s(c));
                for (int c = 0; c < 8; ++c) out << "," << fmt(rec.e(c));
                for (int c = 0; c < 3; ++c) out << "," << fmt(rec.v(c));
                const auto extras = rt.extras(rec);
                out << "," << extras[0] << "," << extras[1] << "," << extras[2] << "\n";
            }
            if (rt.fallback_counter) ce.fallback_steps += *rt.fallback_counter;
            if (rt.crossing_counter) ce.gamma_crossings += *rt.crossing_counter;

            if (reference) {
                const RunMetrics metrics =
                    compare_to_demo(traj, *reference, sim.convergence_tol);
                ++ce.demo_runs;
                if (metrics.converged) ++ce.demo_converged;
                if (metrics.diverged_in_window) {
                    ++ce.demo_diverged;
                } else {
                    if (metrics.diverged) ++ce.demo_diverged_late;
                    ce.p_rms_mm += metrics.p_rms_m * 1000.0;
                    ce.v_rms_mm_s += metrics.v_rms_m_s * 1000.0;
                    ce.s_rms_px += metrics.s_rms_units * px;
                }
                if (metrics.stalled) ++ce.stalled_runs;
            } else {
                ++ce.perturbed_runs;
                if (traj.converged) ++ce.perturbed_converged;
                if (traj.diverged) ++ce.perturbed_diverged;
            }
        };

        for (size_t d = 0; d < cd.demos.size(); ++d) {
            run_and_record(cd.demos[d].samples.front().position, "demo" + std::to_string(d),
                           &cd.demos[d]);
        }

        std::mt19937_64 rng(class_seed(config_.seed, cd.name) ^ 0x5bd1e995u);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double radius = config_.eval.perturb_radius_fraction * ce.mean_path_length_m;
        for (int i = 0; i < config_.eval.perturbed_starts; ++i) {
            const auto& base = cd.demos[i % cd.demos.size()].samples.front().position;
            Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
            dir.normalize();
            const Vec3 start = base + radius * std::cbrt(unit(rng)) * dir;
            run_and_record(start, "pert" + std::to_string(i), nullptr);
        }

        const int counted = ce.demo_runs - ce.demo_diverged;
        if (counted > 0) {
            ce.p_rms_mm /= counted;
            ce.v_rms_mm_s /= counted;
            ce.s_rms_px /= counted;
        }
        eval.classes.push_back(std::move(ce));
    }

    std::vector<double> p, v, s;
    for (const auto& ce : eval.classes) {
        p.push_back(ce.p_rms_mm);
        v.push_back(ce.v_rms_mm_s);
        s.push_back(ce.s_rms_px);
    }
    eval.p_rms_mm = aggregate(p);
    eval.v_rms_mm_s = aggregate(v);
    eval.s_rms_px = aggregate(s);
    return eval;
}

nlohmann::json MethodEvaluation::to_json(const ExperimentConfig& config) const {
    nlohmann::json j;
    j["method"] = method;
    j["k"] = k;
    j["aggregate"] = {{"p_rms_mm", {{"mean", p_rms_mm.mean}, {"std", p_rms_mm.stddev}}},
                      {"v_rms_mm_s", {{"mean", v_rms_mm_s.mean}, {"std", v_rms_mm_s.stddev}}},
                      {"s_rms_px", {{"mean", s_rms_px.mean}, {"std", s_rms_px.stddev}}}};
    j["classes"] = nlohmann::json::array();
    for (const auto& ce : classes) {
        j["classes"].push_back({{"class", ce.class_name},
                                {"p_rms_mm", ce.p_rms_mm},
                                {"v_rms_mm_s", ce.v_rms_mm_s},
                                {"s_rms_px", ce.s_rms_px},
                                {"demo_runs", ce.demo_runs},
                                {"demo_converged", ce.demo_converged},
                                {"perturbed_runs", ce.perturbed_runs},
                                {"perturbed_converged", ce.perturbed_converged},
                                {"demo_diverged", ce.demo_diverged},
                                {"demo_diverged_late", ce.demo_diverged_late},
                                {"perturbed_diverged", ce.perturbed_diverged},
                                {"stalled_runs", ce.stalled_runs},
                                {"fallback_steps", ce.fallback_steps},
                                {"gamma_crossings", ce.gamma_crossings},
                                {"mean_path_length_m", ce.mean_path_length_m},
                                {"mean_feature_excursion", ce.mean_feature_excursion}});
    }
    j["config"] = config.to_json();
    return j;
}

std::string Harness::report() const {
    const fs::path reports_dir = fs::path(config_.out_dir) / "reports";
    std::vector<fs::path> report_files;
    if (fs::is_directory(reports_dir)) {
        for (const auto& entry : fs::directory_iterator(reports_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.size() > 12 && name.substr(name.size() - 12) == "_report.json")
                report_files.push_back(entry.path());
        }
    }
    std::sort(report_files.begin(), report_files.end());
    if (report_files.empty())
        throw ConfigError("no evaluation reports under " + reports_dir.string() +
                          "; run evaluate first");

    struct Row {
        std::string method;
        int k;
        AggregateMetric p, v, s, tau;
        bool has_tau = false;
    };
    std::vector<Row> rows;
    for (const auto& file : report_files) {
        std::ifstream in(file);
        nlohmann::json j;
        in >> j;
        Row row;
        row.method = j.at("method").get<std::string>();
        row.k = j.at("k").get<int>();
        row.p = {j["aggregate"]["p_rms_mm"]["mean"], j["aggregate"]["p_rms_mm"]["std"]};
        row.v = {j["aggregate"]["v_rms_mm_s"]["mean"], j["aggregate"]["v_rms_mm_s"]["std"]};
        row.s = {j["aggregate"]["s_rms_px"]["mean"], j["aggregate"]["s_rms_px"]["std"]};

        const fs::path tau_file = fs::path(config_.out_dir) / "models" /
                                  ("train_" + row.method + ".json");
        if (fs::exists(tau_file)) {
            std::ifstream tin(tau_file);
            nlohmann::json tj;
            tin >> tj;
            std::vector<double> taus;
            for (const auto& r : tj.at("records")) {
                if (r.at("k").get<int>() == row.k && r.at("tau_ms").get<double>() >= 0.0)
                    taus.push_back(r.at("tau_ms").get<double>());
            }
            if (!taus.empty()) {
                row.tau = aggregate(taus);
                row.has_tau = true;
            }
        }
        rows.push_back(std::move(row));
    }

    std::ostringstream table;
    table << "approach    k     p_rms[mm]        v_rms[mm/s]      s_rms[px]        tau[ms]\n";
    std::ofstream csv(reports_dir / "summary.csv");
    csv << "method,k,p_rms_mean_mm,p_rms_std_mm,v_rms_mean_mm_s,v_rms_std_mm_s,"
           "s_rms_mean_px,s_rms_std_px,tau_mean_ms,tau_std_ms\n";
    for (const auto& row : rows) {
        char line[256];
        std::snprintf(line, sizeof(line), "%-10s  %-4d  %-15s  %-15s  %-15s  %s\n",
                      row.method.c_str(), row.k, fmt_cell(row.p.mean, row.p.stddev).c_str(),
                      fmt_cell(row.v.mean, row.v.stddev).c_str(),
                      fmt_cell(row.s.mean, row.s.stddev).c_str(),
                      row.has_tau ? fmt_cell(row.tau.mean, row.tau.stddev).c_str() : "-");
        table << line;
        csv << row.method << "," << row.k << "," << fmt(row.p.mean) << "," << fmt(row.p.stddev)
            << "," << fmt(row.v.mean) << "," << fmt(row.v.stddev) << "," << fmt(row.s.mean) << ","
            << fmt(row.s.stddev) << ",";
        if (row.has_tau)
            csv << fmt(row.tau.mean) << "," << fmt(row.tau.stddev) << "\n";
        else
            csv << ",\n";
    }
    return table.str();
}

}  // namespace dsvs
