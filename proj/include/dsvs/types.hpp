#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dsvs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec4 = Eigen::Vector4d;

// Stacked normalized image coordinates of the 4-point pattern: (x1,y1,...,x4,y4).
using Vec8 = Eigen::Matrix<double, 8, 1>;
// Translational interaction matrix (feature rate per unit camera velocity).
using Mat83 = Eigen::Matrix<double, 8, 3>;
using Mat38 = Eigen::Matrix<double, 3, 8>;

constexpr int kPatternPoints = 4;
constexpr int kFeatureDim = 2 * kPatternPoints;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A pattern point reached zero or negative depth in the camera frame.
struct NonPositiveDepth : Error {
    explicit NonPositiveDepth(const std::string& msg) : Error(msg) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

struct TooShort : Error {
    explicit TooShort(const std::string& msg) : Error(msg) {}
};

struct UnequalLengths : Error {
    explicit UnequalLengths(const std::string& msg) : Error(msg) {}
};

struct DegenerateComponent : Error {
    explicit DegenerateComponent(const std::string& msg) : Error(msg) {}
};

struct OptimizationFailed : Error {
    explicit OptimizationFailed(const std::string& msg) : Error(msg) {}
};

struct Stalled : Error {
    explicit Stalled(const std::string& msg) : Error(msg) {}
};

struct InverseDiverged : Error {
    explicit InverseDiverged(const std::string& msg) : Error(msg) {}
};

struct SingularJacobian : Error {
    explicit SingularJacobian(const std::string& msg) : Error(msg) {}
};

// Learned Lyapunov gradient is numerically flat away from the origin.
struct VanishingGradient : Error {
    explicit VanishingGradient(const std::string& msg) : Error(msg) {}
};

struct Diverged : Error {
    explicit Diverged(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace dsvs
