#pragma once

// Test-only numerical oracles, independent of the library implementations
// they are used to check.

#include <Eigen/Dense>
#include <functional>
#include <random>

namespace oracles {

// Central finite-difference gradient of a scalar field.
inline Eigen::Vector3d fd_gradient(const std::function<double(const Eigen::Vector3d&)>& f,
                                   const Eigen::Vector3d& x, double h = 1e-6) {
    Eigen::Vector3d g;
    for (int i = 0; i < 3; ++i) {
        Eigen::Vector3d hi = Eigen::Vector3d::Zero();
        hi(i) = h;
        g(i) = (f(x + hi) - f(x - hi)) / (2.0 * h);
    }
    return g;
}

// Central finite-difference Jacobian of a vector field.
inline Eigen::Matrix3d fd_jacobian(
    const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f, const Eigen::Vector3d& x,
    double h = 1e-6) {
    Eigen::Matrix3d j;
    for (int i = 0; i < 3; ++i) {
        Eigen::Vector3d hi = Eigen::Vector3d::Zero();
        hi(i) = h;
        j.col(i) = (f(x + hi) - f(x - hi)) / (2.0 * h);
    }
    return j;
}

// Normal-equations pseudoinverse, valid for full-column-rank matrices only.
inline Eigen::Matrix<double, 3, 8> normal_equations_pinv(const Eigen::Matrix<double, 8, 3>& L) {
    return (L.transpose() * L).inverse() * L.transpose();
}

// Conditional-Gaussian regression built directly from sample moments of
// (input; output) columns: out = mu_o + S_oi S_ii^-1 (x - mu_i).
struct MomentRegressor {
    Eigen::Vector3d mean_in, mean_out;
    Eigen::Matrix3d gain;

    static MomentRegressor fit(const Eigen::MatrixXd& joint, double ridge = 0.0) {
        MomentRegressor r;
        const Eigen::VectorXd mean = joint.rowwise().mean();
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(6, 6);
        for (int i = 0; i < joint.cols(); ++i) {
            const Eigen::VectorXd d = joint.col(i) - mean;
            cov += d * d.transpose();
        }
        cov /= joint.cols();
        cov += ridge * Eigen::MatrixXd::Identity(6, 6);
        r.mean_in = mean.head<3>();
        r.mean_out = mean.tail<3>();
        r.gain = cov.bottomLeftCorner<3, 3>() * cov.topLeftCorner<3, 3>().inverse();
        return r;
    }

    Eigen::Vector3d predict(const Eigen::Vector3d& x) const {
        return mean_out + gain * (x - mean_in);
    }
};

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Eigen::Vector3d random_vec3(std::mt19937_64& gen, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(gen), u(gen), u(gen)};
}

}  // namespace oracles
