#pragma once

#include <optional>
#include <string>
#include <vector>

#include "infotraj/dynamics.hpp"
#include "infotraj/sensing.hpp"

namespace infotraj::svg {

/// chi-square quantile with 2 degrees of freedom at 95%.
inline constexpr double kChi2Two95 = 5.991;

struct Ellipse {
  double cx = 0.0, cy = 0.0;
  double rx = 0.0, ry = 0.0;  // semi-axes, m
  double angle_deg = 0.0;     // rotation of the rx axis from +X
};

/// Confidence ellipse {theta : (theta - mean)^T cov^-1 (theta - mean) <= chi2}.
Ellipse confidence_ellipse(const sensing::GaussianPrior& prior, double chi2 = kChi2Two95);

struct Figure {
  std::string title;
  std::vector<dynamics::Trajectory> paths;     // drawn in red
  std::optional<sensing::GaussianPrior> prior;  // 95% ellipse, dashed blue
  int width = 640;
  int height = 640;
};

/// Paths are drawn in the (X, Y) plane when those columns exist, otherwise
/// as the first state against time. Output depends only on the input.
std::string render(const Figure& fig);

}  // namespace infotraj::svg
