#pragma once

#include <string>
#include <vector>

#include "dsvs/dataset.hpp"

namespace dsvs {

// Built-in planar motion classes used when no recorded handwriting data is
// supplied: an S stroke, a J hook and an inward spiral, all converging to the
// origin.
std::vector<std::string> synthetic_class_names();

// Demonstrations of one class: scaled/rotated variants of the base curve with
// an eased speed profile, sampled uniformly over the duration.
std::vector<PlanarTrajectory> generate_synthetic_class(const std::string& name, int demos,
                                                       int samples, double duration);

}  // namespace dsvs
