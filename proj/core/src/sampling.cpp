#include "pinn/sampling.hpp"

#include "pinn/errors.hpp"
#include "pinn/problems.hpp"

#include <fstream>
#include <string>

namespace pinn {

SamplingPlan SamplingPlan::shm_default() {
  return {SamplingScheme::kEquidistant, 100, 0, 1, 1};
}

SamplingPlan SamplingPlan::wave_default() { return {SamplingScheme::kSobol, 512, 64, 32, 1}; }

bool operator==(const PointSet& a, const PointSet& b) {
  auto same = [](const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
    return p.rows() == q.rows() && p.cols() == q.cols() && p == q;
  };
  if (!same(a.interior, b.interior) || !same(a.temporal_boundary, b.temporal_boundary)) {
    return false;
  }
  if (a.spatial_boundary.size() != b.spatial_boundary.size()) return false;
  for (std::size_t i = 0; i < a.spatial_boundary.size(); ++i) {
    if (!same(a.spatial_boundary[i], b.spatial_boundary[i])) return false;
  }
  return true;
}

namespace {

constexpr int kBits = 32;

// Joe-Kuo primitive-polynomial data for the second dimension: degree s,
// coefficients a, initial direction integers m. The first dimension uses
// m_k = 1 for all k.
struct DirectionData {
  unsigned s;
  unsigned a;
  std::array<std::uint32_t, 1> m;
};
constexpr DirectionData kSecondDimension{1, 0, {1}};

using DirectionTable = std::array<std::array<std::uint32_t, kBits>, 2>;

DirectionTable make_directions() {
  DirectionTable v{};
  for (int k = 0; k < kBits; ++k) v[0][k] = 1u << (kBits - 1 - k);

  const DirectionData& d = kSecondDimension;
  for (unsigned k = 0; k < d.s; ++k) v[1][k] = d.m[k] << (kBits - 1 - k);
  for (unsigned k = d.s; k < kBits; ++k) {
    std::uint32_t x = v[1][k - d.s] ^ (v[1][k - d.s] >> d.s);
    for (unsigned j = 1; j < d.s; ++j) {
      if ((d.a >> (d.s - 1 - j)) & 1u) x ^= v[1][k - j];
    }
    v[1][k] = x;
  }
  return v;
}

const DirectionTable& directions() {
  static const DirectionTable table = make_directions();
  return table;
}

}  // namespace

std::vector<std::array<double, 2>> sobol_2d(std::size_t n, std::uint64_t skip) {
  if (skip + n > (std::uint64_t{1} << kBits)) throw UsageError("sobol_2d: index range too large");
  const DirectionTable& v = directions();
  constexpr double scale = 1.0 / 4294967296.0;

  std::vector<std::array<double, 2>> out;
  out.reserve(n);
  for (std::uint64_t i = skip; i < skip + n; ++i) {
    const std::uint64_t gray = i ^ (i >> 1);
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    for (int k = 0; k < kBits; ++k) {
      if ((gray >> k) & 1u) {
        x ^= v[0][k];
        y ^= v[1][k];
      }
    }
    out.push_back({x * scale, y * scale});
  }
  return out;
}

std::vector<double> equidistant(int n, double lo, double hi) {
  if (n < 2) throw UsageError("equidistant needs at least 2 points");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double h = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + i * h;
  out.back() = hi;
  return out;
}

namespace {

void check_counts(const SamplingPlan& plan) {
  if (plan.n_interior < 0 || plan.n_spatial_boundary < 0 || plan.n_temporal_boundary < 0) {
    throw UsageError("sampling counts must be non-negative");
  }
}

PointSet shm_points(const SamplingPlan& plan, const ShmParams& p) {
  if (plan.n_spatial_boundary != 0) {
    throw UsageError("the oscillator has no spatial boundary; n_spatial_boundary must be 0");
  }
  if (plan.n_temporal_boundary > 1) {
    throw UsageError("the oscillator has a single initial point; n_temporal_boundary must be 0 or 1");
  }
  PointSet ps;
  ps.interior.resize(1, plan.n_interior);
  if (plan.scheme == SamplingScheme::kEquidistant) {
    if (plan.n_interior == 1) throw UsageError("equidistant sampling needs 0 or >= 2 points");
    if (plan.n_interior >= 2) {
      const auto t = equidistant(plan.n_interior, 0.0, p.t_end);
      for (int i = 0; i < plan.n_interior; ++i) ps.interior(0, i) = t[static_cast<std::size_t>(i)];
    }
  } else {
    const auto s = sobol_2d(static_cast<std::size_t>(plan.n_interior), plan.skip);
    for (int i = 0; i < plan.n_interior; ++i) {
      ps.interior(0, i) = p.t_end * s[static_cast<std::size_t>(i)][0];
    }
  }
  ps.temporal_boundary = Eigen::MatrixXd::Zero(1, plan.n_temporal_boundary);
  return ps;
}

PointSet wave_points(const SamplingPlan& plan) {
  if (plan.scheme != SamplingScheme::kSobol) {
    throw UsageError("the wave problem is sampled with Sobol points");
  }
  constexpr double x_end = WaveParams::x_end;
  constexpr double t_end = WaveParams::t_end;
  PointSet ps;

  const auto in = sobol_2d(static_cast<std::size_t>(plan.n_interior), plan.skip);
  ps.interior.resize(2, plan.n_interior);
  for (int i = 0; i < plan.n_interior; ++i) {
    ps.interior(0, i) = x_end * in[static_cast<std::size_t>(i)][0];
    ps.interior(1, i) = t_end * in[static_cast<std::size_t>(i)][1];
  }

  // t in (0, T] on both ends x = 0 and x = pi.
  const auto sb = sobol_2d(static_cast<std::size_t>(plan.n_spatial_boundary), plan.skip);
  for (double x : {0.0, x_end}) {
    Eigen::MatrixXd side(2, plan.n_spatial_boundary);
    for (int i = 0; i < plan.n_spatial_boundary; ++i) {
      side(0, i) = x;
      side(1, i) = t_end * (1.0 - sb[static_cast<std::size_t>(i)][0]);
    }
    ps.spatial_boundary.push_back(std::move(side));
  }

  const auto tb = sobol_2d(static_cast<std::size_t>(plan.n_temporal_boundary), plan.skip);
  ps.temporal_boundary.resize(2, plan.n_temporal_boundary);
  for (int i = 0; i < plan.n_temporal_boundary; ++i) {
    ps.temporal_boundary(0, i) = x_end * tb[static_cast<std::size_t>(i)][1];
    ps.temporal_boundary(1, i) = 0.0;
  }
  return ps;
}

}  // namespace

PointSet build_point_set(const SamplingPlan& plan, const ProblemSpec& problem) {
  check_counts(plan);
  problem.validate();
  if (problem.is_shm()) return shm_points(plan, problem.shm());
  return wave_points(plan);
}

void write_point_set_csv(const PointSet& points, int input_width,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  out.precision(17);
  out << "region,x,t\n";
  auto dump = [&](const char* region, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
      if (input_width == 1) {
        out << region << ",0," << m(0, i) << '\n';
      } else {
        out << region << ',' << m(0, i) << ',' << m(1, i) << '\n';
      }
    }
  };
  dump("interior", points.interior);
  for (std::size_t b = 0; b < points.spatial_boundary.size(); ++b) {
    dump(b == 0 ? "boundary_left" : "boundary_right", points.spatial_boundary[b]);
  }
  dump("initial", points.temporal_boundary);
}

}  // namespace pinn
