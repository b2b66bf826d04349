#pragma once

// Local unstable curves for realised words, affine parameters along them, measure slices
// and the unstable pointwise dimension.

#include <cstddef>
#include <ostream>
#include <utility>
#include <vector>

#include "ergolab/cocycle.hpp"
#include "ergolab/lyapunov.hpp"
#include "ergolab/stationary.hpp"

namespace ergolab {

struct CurveOptions {
  std::size_t points = 512;
  double max_radius = 0.25;
  /// Construction spacing is target_spacing / refine.
  std::size_t refine = 4;
  std::size_t max_fine_points = 1u << 20;
};

/// Arc discretisation of W^u(x) for the past word[0, n_back): x sits at time n_back.
struct UnstableCurve {
  TorusPoint base;
  Word past_word;
  double radius = 0.0;
  double target_spacing = 0.0;
  std::size_t base_index = 0;
  std::vector<TorusPoint> points;
  std::vector<Vec2> offsets;  // lifted displacement from base
  std::vector<Vec2> tangents;  // unit, oriented along increasing index
  std::vector<double> tangent_angles;  // line angles in [0, pi)
  /// log_jacobian[i][j - 1] = log |D f (f^-j z_i) E^u|, j = 1..n_back.
  std::vector<std::vector<double>> log_jacobian;

  std::size_t size() const { return points.size(); }
  std::size_t n_back() const { return past_word.size(); }
};

/// Pulls x back n_back steps, lays a segment along the most expanded direction there and
/// pushes it forward, refining gaps with pushed preimage midpoints and trimming to the
/// max-metric radius at every level. Throws InvalidArgument (n_back < 20, radius <= 0,
/// points < 3), OutOfRange (word too short), ChartOverflow (radius above max_radius or the
/// curve re-enters the chart), PreconditionFail (no expansion).
UnstableCurve unstable_curve(const Family& family, const Word& word, const TorusPoint& x, double radius,
                             std::size_t n_back, const CurveOptions& opts = {});

/// W^s(x) for the future word[0, n_forward): the unstable curve of the inverse family
/// along the reversed word.
UnstableCurve stable_curve(const Family& family, const Word& future, const TorusPoint& x, double radius,
                           std::size_t n_forward, const CurveOptions& opts = {});

/// word[end - n_back, end).
Word past_window(const Word& word, std::size_t end, std::size_t n_back);

struct AffineChart {
  std::size_t truncation = 0;
  std::size_t base_index = 0;
  std::vector<double> rho;  // prod_{j<=K} J(f^-j base) / J(f^-j z)
  std::vector<double> H;    // trapezoid integral of rho over arc length, signed by index

  /// H at a curve point given by segment i and fraction t in [0, 1].
  double at(std::size_t segment, double t) const { return H[segment] + t * (H[segment + 1] - H[segment]); }
};

/// Throws InvalidArgument when K > n_back.
AffineChart affine_parameter(const UnstableCurve& curve, std::size_t K);

struct CurveProjection {
  std::size_t segment = 0;
  double t = 0.0;         // clamped to [0, 1]
  double distance = 0.0;  // Euclidean, to the clamped foot
  bool interior = false;  // foot strictly inside the curve's extent
};

/// Nearest polyline segment to a displacement from the curve base.
CurveProjection project_onto_curve(const UnstableCurve& curve, const Vec2& offset);

struct IntertwiningReport {
  double max_residual = 0.0;
  std::size_t compared = 0;
  double jacobian_base = 0.0;  // |D f(base) E^u|
};

/// Compares |Df|E^u(base)| H(z) with H'(f z), H' the chart at f(base) for word[1, n_back + 1),
/// f = family[word[n_back]], over every curve point whose image lies on the shifted curve.
IntertwiningReport intertwining_check(const Family& family, const Word& word, const TorusPoint& x, double radius,
                                      std::size_t n_back, std::size_t K, const CurveOptions& opts = {});

struct Slice {
  std::vector<double> coords;  // H of each sample in the tube
  double tube_halfwidth = 0.0;
  std::size_t unit_ball_count = 0;  // coordinates with |H| <= 1

  std::size_t count() const { return coords.size(); }
  /// mu^u(W^u_r) / mu^u(W^u_1).
  double normalized_mass(double r) const;
};

/// Samples within tube_halfwidth of the curve (off its ends excluded), reported by the H of
/// their nearest curve point. Throws InvalidArgument (fewer than 1e4 samples),
/// InsufficientSlice (fewer than 200 in the tube).
Slice conditional_slice(const EmpiricalMeasure& mu, const UnstableCurve& curve, const AffineChart& chart,
                        double tube_halfwidth);

struct DimensionOptions {
  /// Radii are log-spaced from spread * 10^min_exponent to spread at per_decade per decade.
  double min_exponent = -4.0;
  std::size_t per_decade = 4;
  /// Fit window relative to the coordinate spread.
  double fit_lo = 1e-3;
  double fit_hi = 1e-1;
};

struct DimensionEstimate {
  double dim = 0.0;
  std::pair<double, double> fit_range;
  std::vector<double> radii;
  std::vector<double> correlation_sums;  // pairs i < j with |c_i - c_j| <= r
  double fit_residual = 0.0;             // RMS of the log-log fit
  std::size_t fit_points = 0;
};

/// Correlation-integral slope. Throws InvalidArgument (fewer than 200 coordinates),
/// Degenerate (fewer than 5 radii with pairs inside the window).
DimensionEstimate dimension_estimate(std::vector<double> coords, const DimensionOptions& opts = {});

struct SrbReport {
  double entropy_u = 0.0;          // lambda_u dim_u
  double entropy_s = 0.0;          // -lambda_s dim_s
  double identity_residual = 0.0;  // |lambda_u dim_u + lambda_s dim_s|
  double tolerance = 0.0;          // dim_tolerance (lambda_u + |lambda_s|)
  bool consistent = false;
  bool srb = false;  // |dim_u - 1| <= dim_tolerance
};

SrbReport srb_consistency(const LyapunovEstimate& est, double dim_u, double dim_s, double dim_tolerance = 0.1);

/// index,x,y,rho,H
void write_curve_csv(std::ostream& os, const UnstableCurve& curve, const AffineChart& chart);
/// r,C
void write_dimension_csv(std::ostream& os, const DimensionEstimate& est);

}  // namespace ergolab
