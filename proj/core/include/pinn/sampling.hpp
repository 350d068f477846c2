#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace pinn {

struct ProblemSpec;

enum class SamplingScheme { kEquidistant, kSobol };

/// How many points each residual family gets, and how they are laid out.
/// Counts of the spatial boundary are per boundary (two boundaries for the
/// wave problem).
struct SamplingPlan {
  SamplingScheme scheme = SamplingScheme::kEquidistant;
  int n_interior = 0;
  int n_spatial_boundary = 0;
  int n_temporal_boundary = 0;
  std::uint64_t skip = 1;  // Sobol only: leading points dropped

  static SamplingPlan shm_default();
  static SamplingPlan wave_default();
};

/// Point sets with one column per point. Rows are the network inputs of the
/// problem: (t) for the oscillator, (x, t) for the wave equation.
struct PointSet {
  Eigen::MatrixXd interior;
  std::vector<Eigen::MatrixXd> spatial_boundary;
  Eigen::MatrixXd temporal_boundary;

  friend bool operator==(const PointSet& a, const PointSet& b);
};

/// Gray-code ordered 2D Sobol points from the Joe-Kuo direction numbers,
/// indices [skip, skip + n). The first coordinate is the van der Corput
/// sequence in base 2.
std::vector<std::array<double, 2>> sobol_2d(std::size_t n, std::uint64_t skip = 0);

/// `n` points from lo to hi inclusive. Throws UsageError for n < 2.
std::vector<double> equidistant(int n, double lo, double hi);

/// Throws UsageError when the plan does not fit the problem (negative
/// counts, wrong scheme for the dimensionality).
PointSet build_point_set(const SamplingPlan& plan, const ProblemSpec& problem);

/// CSV with header `region,x,t`; the oscillator writes x = 0.
void write_point_set_csv(const PointSet& points, int input_width,
                         const std::filesystem::path& path);

}  // namespace pinn
