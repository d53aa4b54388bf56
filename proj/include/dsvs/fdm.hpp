#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dsvs/dataset.hpp"
#include "dsvs/types.hpp"

namespace dsvs {

// One composition step x -> x + a * exp(-||x - c||^2 / (2 w^2)). Invertible as
// long as ||a|| < w * sqrt(e); construction clips against that bound.
struct LocallyWeightedTranslation {
    Vec3 center = Vec3::Zero();
    Vec3 translation = Vec3::Zero();
    double width = 1.0;

    double kernel(const Vec3& z) const;
    Vec3 apply(const Vec3& z) const;
    Mat3 jacobian(const Vec3& z) const;
    Vec3 invert(const Vec3& y) const;

    // ||translation|| bound that keeps the step a diffeomorphism.
    static double max_translation(double width, double margin = 0.99);
};

class DiffeoMap {
  public:
    DiffeoMap() = default;
    explicit DiffeoMap(std::vector<LocallyWeightedTranslation> steps);

    int size() const { return static_cast<int>(steps_.size()); }
    const std::vector<LocallyWeightedTranslation>& steps() const { return steps_; }

    Vec3 apply(const Vec3& z) const;
    Mat3 jacobian(const Vec3& z) const;   // chain-rule product along the composition
    Vec3 inverse(const Vec3& eps) const;  // step-by-step reversal

    nlohmann::json to_json() const;
    static DiffeoMap from_json(const nlohmann::json& j);

  private:
    std::vector<LocallyWeightedTranslation> steps_;
};

struct FdmMatchConfig {
    double step_fraction = 0.9;
    double width_factor = 2.0;  // times the nearest-neighbor source distance
    double fixed_width = 0.0;   // overrides the width rule when positive
    double stop_tol = 1e-4;     // on the max source/target mismatch
};

struct FdmMatchResult {
    DiffeoMap map;
    std::vector<double> residual_history;  // max mismatch after 0..K steps
    double final_residual = 0.0;
    int steps = 0;
    double training_time_ms = 0.0;
};

// Greedy matching of the straight-line reference onto the averaged
// demonstration: each step translates the worst-matched source image toward
// its target, clipped to the invertibility margin and backed off whenever the
// max mismatch would grow. Throws Stalled when progress dies out.
FdmMatchResult fast_diffeo_match(const FdmTraining& training, int k_max,
                                 const FdmMatchConfig& config = {});

enum class JacobianAt { Epsilon, Preimage };

JacobianAt jacobian_at_from_string(const std::string& name);
std::string to_string(JacobianAt at);

// Servoing law v = -gamma(eps) * J_psi^-1 * eps with the variable gain that
// replays the reference timing.
class FdmController {
  public:
    FdmController(DiffeoMap psi, Vec3 initial_mean, int n_samples, double T,
                  JacobianAt jacobian_at = JacobianAt::Preimage);

    double gamma(const Vec3& eps) const;
    bool low_gain_branch(const Vec3& eps) const;
    Vec3 velocity(const Vec3& eps) const;

    const DiffeoMap& map() const { return psi_; }
    double initial_norm() const { return eps1_norm_; }
    int n_samples() const { return n_; }
    double sample_time() const { return T_; }
    JacobianAt jacobian_at() const { return jacobian_at_; }

  private:
    DiffeoMap psi_;
    double eps1_norm_;
    int n_;
    double T_;
    JacobianAt jacobian_at_;
};

}  // namespace dsvs
