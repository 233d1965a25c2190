#pragma once

#include <span>
#include <string>

#include "bsmix/toy_diffusion.hpp"

namespace bsmix::svg {

/// Scatter of sample points (first two coordinates) over the 1- and 2-sigma
/// contour ellipses of every concept component. Equal axis scaling.
std::string scatter(std::span<const ToySample> samples,
                    std::span<const GaussianMixtureConcept> concepts, const std::string& title);

/// Line plot with markers and optional symmetric error bars (yerr may be
/// empty).
std::string curve(std::span<const double> x, std::span<const double> y,
                  std::span<const double> yerr, const std::string& title,
                  const std::string& xlabel, const std::string& ylabel);

}  // namespace bsmix::svg
