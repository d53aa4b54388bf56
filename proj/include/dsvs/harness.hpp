#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dsvs/clfdm.hpp"
#include "dsvs/config.hpp"
#include "dsvs/dataset.hpp"
#include "dsvs/fdm.hpp"
#include "dsvs/gmr.hpp"
#include "dsvs/rds.hpp"
#include "dsvs/vision.hpp"

namespace dsvs {

struct ClassDemos {
    std::string name;
    std::vector<Demonstration> demos;
};

struct AggregateMetric {
    double mean = 0.0;
    double stddev = 0.0;
};

AggregateMetric aggregate(const std::vector<double>& values);

struct ClassEvaluation {
    std::string class_name;
    double p_rms_mm = 0.0;
    double v_rms_mm_s = 0.0;
    double s_rms_px = 0.0;
    int demo_runs = 0;
    int demo_converged = 0;
    int perturbed_runs = 0;
    int perturbed_converged = 0;
    int demo_diverged = 0;       // diverged inside the comparison window
    int demo_diverged_late = 0;  // diverged after it (metrics still counted)
    int perturbed_diverged = 0;
    int stalled_runs = 0;      // hit the step budget with a flat error plateau
    int fallback_steps = 0;    // clfdm vanishing-gradient fallbacks
    int gamma_crossings = 0;   // fdm gain-branch boundary crossings
    double mean_path_length_m = 0.0;
    double mean_feature_excursion = 0.0;  // normalized units
};

struct MethodEvaluation {
    std::string method;
    int k = 0;
    std::vector<ClassEvaluation> classes;
    AggregateMetric p_rms_mm;
    AggregateMetric v_rms_mm_s;
    AggregateMetric s_rms_px;

    nlohmann::json to_json(const ExperimentConfig& config) const;
};

struct TrainRecord {
    std::string class_name;
    int k = 0;
    double tau_ms = 0.0;                   // -1 when training failed
    double clf_violation_fraction = -1.0;  // clfdm only
    double fdm_residual = -1.0;            // fdm only
    std::string error;
};

struct TrainSummary {
    std::string method;
    std::vector<TrainRecord> records;

    AggregateMetric tau_for_k(int k) const;
};

// Per-run closed-loop result against the reference demonstration. A run that
// diverges inside the demo window carries no usable metrics.
struct RunMetrics {
    double p_rms_m = 0.0;
    double v_rms_m_s = 0.0;
    double s_rms_units = 0.0;
    bool converged = false;
    bool diverged = false;
    bool diverged_in_window = false;
    bool stalled = false;
};

RunMetrics compare_to_demo(const Trajectory& traj, const Demonstration& demo,
                           double convergence_tol);

double demo_path_length(const Demonstration& demo);
double demo_feature_excursion(const Demonstration& demo);

// File-driven experiment pipeline matching the CLI verbs.
class Harness {
  public:
    explicit Harness(ExperimentConfig config);

    const ExperimentConfig& config() const { return config_; }
    const Scene& scene() const { return scene_; }

    // Dataset (in memory, deterministic for a given config).
    std::vector<ClassDemos> build_dataset() const;

    // Verb: write dataset CSVs plus a manifest under out_dir/dataset.
    void generate() const;
    std::vector<ClassDemos> load_dataset() const;

    // Verb: fit models for every k in the method grid, write model files and
    // a timing summary under out_dir/models.
    TrainSummary train(const std::string& method, std::optional<int> k_only = {}) const;

    // Verb: closed-loop evaluation of trained models; writes the report JSON
    // and per-run trajectory CSVs. Pass k to restrict the grid.
    std::vector<MethodEvaluation> evaluate(const std::string& method,
                                           std::optional<int> k_only = {}) const;

    // Verb: merge all report/timing files into a comparison table; also
    // writes out_dir/reports/summary.csv. Throws when no reports exist.
    std::string report() const;

    // Controllers reconstructed from model files.
    RdsController load_rds(const std::string& class_name, int k) const;
    ClfdmController load_clfdm(const std::string& class_name, int k) const;
    FdmController load_fdm(const std::string& class_name, int k) const;

    std::string model_path(const std::string& method, const std::string& class_name,
                           int k) const;
    std::string report_path(const std::string& method, int k) const;
    std::string train_summary_path(const std::string& method) const;

  private:
    std::vector<int> grid_for(const std::string& method) const;
    MethodEvaluation evaluate_one(const std::string& method, int k,
                                  const std::vector<ClassDemos>& dataset) const;

    ExperimentConfig config_;
    Scene scene_;
};

}  // namespace dsvs
