#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dsvs/harness.hpp"

namespace {

dsvs::ExperimentConfig resolve_config(const std::string& config_path,
                                      const std::string& out_dir_override,
                                      std::optional<std::uint64_t> seed_override) {
    dsvs::ExperimentConfig config;
    if (!config_path.empty()) config = dsvs::ExperimentConfig::load(config_path);
    if (!out_dir_override.empty()) config.out_dir = out_dir_override;
    if (seed_override) config.seed = *seed_override;
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamical-systems controllers for image-based visual servoing"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string method = "all";
    std::optional<std::uint64_t> seed;
    std::optional<int> k;

    auto add_common = [&](CLI::App* cmd, bool with_method) {
        cmd->add_option("--config", config_path, "JSON experiment config (defaults built in)");
        cmd->add_option("--out-dir", out_dir, "output directory override");
        cmd->add_option("--seed", seed, "seed override");
        if (with_method)
            cmd->add_option("--method", method, "baseline | rds | clfdm | fdm | all");
    };

    auto* generate = app.add_subcommand("generate", "build the demonstration dataset");
    add_common(generate, false);

    auto* train = app.add_subcommand("train", "fit models over the k grid");
    add_common(train, true);
    train->add_option("--k", k, "restrict the grid to a single k");

    auto* evaluate = app.add_subcommand("evaluate", "closed-loop evaluation of trained models");
    add_common(evaluate, true);
    evaluate->add_option("--k", k, "restrict the grid to a single k");

    auto* report = app.add_subcommand("report", "print the comparison table");
    add_common(report, false);

    CLI11_PARSE(app, argc, argv);

    try {
        const dsvs::ExperimentConfig config = resolve_config(config_path, out_dir, seed);
        dsvs::Harness harness(config);

        if (generate->parsed()) {
            harness.generate();
            std::cout << "dataset written to " << config.out_dir << "/dataset\n";
            return 0;
        }

        std::vector<std::string> methods;
        if (method == "all") {
            methods = {"rds", "clfdm", "fdm"};
        } else {
            methods = {method};
        }

        if (train->parsed()) {
            for (const auto& m : methods) {
                if (m == "baseline") continue;
                const auto summary = harness.train(m, k);
                for (const auto& r : summary.records) {
                    std::cout << m << " class=" << r.class_name << " k=" << r.k;
                    if (r.tau_ms >= 0.0)
                        std::cout << " tau=" << r.tau_ms << " ms";
                    else
                        std::cout << " FAILED: " << r.error;
                    if (r.clf_violation_fraction >= 0.0)
                        std::cout << " violations=" << r.clf_violation_fraction;
                    if (r.fdm_residual >= 0.0) std::cout << " residual=" << r.fdm_residual;
                    std::cout << "\n";
                }
            }
            return 0;
        }

        if (evaluate->parsed()) {
            if (method == "all") methods.insert(methods.begin(), "baseline");
            for (const auto& m : methods) {
                for (const auto& eval : harness.evaluate(m, k)) {
                    std::cout << m << " k=" << eval.k << " p_rms=" << eval.p_rms_mm.mean
                              << " mm, v_rms=" << eval.v_rms_mm_s.mean
                              << " mm/s, s_rms=" << eval.s_rms_px.mean << " px\n";
                }
            }
            std::cout << "reports written to " << config.out_dir << "/reports\n";
            return 0;
        }

        if (report->parsed()) {
            std::cout << harness.report();
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
