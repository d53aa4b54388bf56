#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dsvs/types.hpp"

namespace dsvs {

struct GaussianComponent {
    double prior = 1.0;
    Eigen::VectorXd mean;        // joint (input, output)
    Eigen::MatrixXd covariance;  // SPD, regularized
};

struct GmmFitConfig {
    int max_iter = 500;
    double tol = 1e-8;  // relative log-likelihood change
    double reg = 1e-6;  // covariance floor, scaled by the data trace
    int kmeans_iters = 50;
};

// Joint Gaussian mixture with conditional regression. Immutable once fitted
// or loaded; safe to query from many threads.
class GmrModel {
  public:
    GmrModel() = default;
    GmrModel(std::vector<GaussianComponent> components, int input_dim, std::uint64_t seed);

    int k() const { return static_cast<int>(components_.size()); }
    int input_dim() const { return input_dim_; }
    int output_dim() const { return dim_ - input_dim_; }
    int dim() const { return dim_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<GaussianComponent>& components() const { return components_; }

    // Input-marginal responsibilities at a query point; they sum to one.
    Eigen::VectorXd responsibilities(const Eigen::VectorXd& input) const;

    struct Prediction {
        Eigen::VectorXd mean;
        Eigen::MatrixXd covariance;
    };
    Prediction predict(const Eigen::VectorXd& input) const;

    nlohmann::json to_json() const;
    static GmrModel from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static GmrModel load(const std::string& path);

  private:
    void finalize();

    std::vector<GaussianComponent> components_;
    int input_dim_ = 0;
    int dim_ = 0;
    std::uint64_t seed_ = 0;

    // Per-component conditional pieces, precomputed at construction.
    struct Prepared {
        Eigen::MatrixXd input_cov_inv;
        Eigen::MatrixXd gain;  // cov_oi * cov_ii^-1
        Eigen::MatrixXd conditional_cov;
        double log_norm = 0.0;  // log of the input-marginal normalizer
    };
    std::vector<Prepared> prepared_;
};

struct GmmFitResult {
    GmrModel model;
    std::vector<double> loglik_history;
    double training_time_ms = 0.0;
    int iterations = 0;
};

// EM over joint columns of `data` (dim x samples), k-means++ start from the
// seed. Throws DegenerateComponent if a component stays collapsed after one
// reseed.
GmmFitResult fit_gmm(const Eigen::MatrixXd& data, int input_dim, int k, std::uint64_t seed,
                     const GmmFitConfig& config = {});

}  // namespace dsvs
