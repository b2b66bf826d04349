#include "ergolab/unstable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <numeric>
#include <string>

#include "ergolab/errors.hpp"

namespace ergolab {

namespace {

constexpr std::size_t kMinBack = 20;
constexpr std::size_t kMinSliceSamples = 10000;
constexpr std::size_t kMinSliceCount = 200;
constexpr std::size_t kMinDimCoords = 200;
constexpr std::size_t kMinFitRadii = 5;
constexpr int kMaxRefineDepth = 48;
// Singular-value ratio of D f^n_back below which the graph transform is not trusted.
constexpr double kMinLogRatio = 13.815510557964274;  // log 1e6

struct FinePoint {
  Vec2 pos;  // lifted
  Vec2 tan;  // unit
  std::vector<double> hist;
};

Vec2 unit(const Vec2& v) {
  const double n = v.norm();
  return {v.x / n, v.y / n};
}

FinePoint midpoint(const FinePoint& a, const FinePoint& b) {
  FinePoint m;
  m.pos = (a.pos + b.pos) * 0.5;
  m.tan = a.tan == b.tan ? a.tan : unit(a.tan + b.tan);
  m.hist.resize(a.hist.size());
  for (std::size_t j = 0; j < a.hist.size(); ++j) m.hist[j] = (a.hist[j] + b.hist[j]) * 0.5;
  return m;
}

FinePoint lerp(const FinePoint& a, const FinePoint& b, double t) {
  FinePoint m;
  m.pos = a.pos + (b.pos - a.pos) * t;
  m.tan = a.tan == b.tan ? a.tan : unit(a.tan + (b.tan - a.tan) * t);
  m.hist.resize(a.hist.size());
  for (std::size_t j = 0; j < a.hist.size(); ++j) m.hist[j] = a.hist[j] + t * (b.hist[j] - a.hist[j]);
  return m;
}

// One level of the graph transform: pushes points through `map`, shifted by an integer vector.
class Pusher {
 public:
  Pusher(const MapSpec& map, const Vec2& shift, double spacing, std::size_t cap)
      : map_(map), shift_(shift), spacing_(spacing), cap_(cap) {}

  FinePoint push(const FinePoint& p) const {
    FinePoint q;
    q.pos = apply_lifted(map_, p.pos) - shift_;
    const Vec2 v = derivative_lifted(map_, p.pos) * p.tan;
    const double n = v.norm();
    q.tan = {v.x / n, v.y / n};
    q.hist = p.hist;
    q.hist.push_back(std::log(n));
    return q;
  }

  // Appends pushed midpoints strictly between fa = push(a) and fb = push(b).
  void fill(const FinePoint& a, const FinePoint& b, const FinePoint& fa, const FinePoint& fb, int depth,
            std::vector<FinePoint>& out) const {
    if ((fb.pos - fa.pos).norm() <= spacing_) return;
    if (depth >= kMaxRefineDepth || out.size() > cap_) {
      throw PreconditionFail("unstable_curve: refinement did not resolve the pushed curve");
    }
    const FinePoint m = midpoint(a, b);
    const FinePoint fm = push(m);
    fill(a, m, fa, fm, depth + 1, out);
    out.push_back(fm);
    fill(m, b, fm, fb, depth + 1, out);
  }

 private:
  const MapSpec& map_;
  Vec2 shift_;
  double spacing_;
  std::size_t cap_;
};

Vec2 round_vec(const Vec2& v) { return {std::round(v.x), std::round(v.y)}; }

// Keeps the contiguous run around the point nearest `center` within `radius` (max metric),
// plus one point beyond each end. Throws ChartOverflow when another piece re-enters the ball.
std::vector<FinePoint> trim(std::vector<FinePoint> pts, const Vec2& center, double radius) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = (pts[i].pos - center).norm_inf();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  std::size_t lo = best, hi = best;
  while (lo > 0 && (pts[lo].pos - center).norm_inf() <= radius) --lo;
  while (hi + 1 < pts.size() && (pts[hi].pos - center).norm_inf() <= radius) ++hi;
  const TorusPoint c(center);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i >= lo && i <= hi) continue;
    if (torus_distance(TorusPoint(pts[i].pos), c) <= radius) {
      throw ChartOverflow("unstable_curve: curve re-enters the chart; radius too large");
    }
  }
  return {std::make_move_iterator(pts.begin() + std::ptrdiff_t(lo)),
          std::make_move_iterator(pts.begin() + std::ptrdiff_t(hi) + 1)};
}

// Arc parameter where a -> b crosses |.|_inf = radius, given |a| <= radius < |b|.
double crossing(const Vec2& a, const Vec2& b, double radius) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = (lo + hi) / 2;
    if ((a + (b - a) * mid).norm_inf() <= radius) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

// Foot of p on segment a -> b.
CurveProjection project_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  CurveProjection out;
  const Vec2 d = b - a;
  const double len2 = dot(d, d);
  double t = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
  out.interior = t >= 0.0 && t <= 1.0;
  t = std::clamp(t, 0.0, 1.0);
  out.t = t;
  out.distance = (a + d * t - p).norm();
  return out;
}

}  // namespace

Word past_window(const Word& word, std::size_t end, std::size_t n_back) {
  if (end > word.size() || n_back > end) throw OutOfRange("past_window: window outside the word");
  Word out;
  out.seed = word.seed;
  out.entries.assign(word.entries.begin() + std::ptrdiff_t(end - n_back), word.entries.begin() + std::ptrdiff_t(end));
  return out;
}

UnstableCurve unstable_curve(const Family& family, const Word& word, const TorusPoint& x, double radius,
                             std::size_t n_back, const CurveOptions& opts) {
  if (n_back < kMinBack) throw InvalidArgument("unstable_curve: n_back must be >= 20");
  if (!(radius > 0.0)) throw InvalidArgument("unstable_curve: radius must be > 0");
  if (opts.points < 3 || opts.refine < 1) throw InvalidArgument("unstable_curve: need >= 3 points and refine >= 1");
  if (radius > opts.max_radius) throw ChartOverflow("unstable_curve: radius exceeds the chart radius");
  if (word.size() < n_back) throw OutOfRange("unstable_curve: word shorter than n_back");
  for (std::size_t k = 0; k < n_back; ++k) {
    if (word[k] >= family.size()) throw OutOfRange("unstable_curve: word entry outside the family");
  }

  // Backward orbit y_n = x, y_{k} = f_{w_k}^{-1}(y_{k+1}).
  std::vector<TorusPoint> ys(n_back + 1);
  ys[n_back] = x;
  for (std::size_t k = n_back; k-- > 0;) ys[k] = inverse_map(family[word[k]], ys[k + 1]);

  const double target = 2.0 * radius / double(opts.points - 1);
  const double spacing = target / double(opts.refine);
  const double trim_radius = radius + spacing;

  // Level 0: straight segment along the most expanded direction of D f^n at y_0.
  const ScaledMat2 d = cocycle_derivative(family, word, ys[0], n_back);
  const Svd2 sv = svd(d.mat);
  if (!(std::log(sv.s_max) - std::log(sv.s_min) >= kMinLogRatio)) {
    throw PreconditionFail("unstable_curve: cocycle along the word is not hyperbolic enough");
  }
  const Vec2 u0 = unit_vector(sv.right_max_angle);
  const double half = trim_radius / u0.norm_inf();
  const auto m0 = std::size_t(std::ceil(2.0 * half / spacing));
  std::vector<FinePoint> level;
  level.reserve(m0 + 1);
  for (std::size_t i = 0; i <= m0; ++i) {
    const double s = -half + 2.0 * half * double(i) / double(m0);
    level.push_back({ys[0].lift() + u0 * s, u0, {}});
  }

  for (std::size_t k = 0; k < n_back; ++k) {
    const MapSpec& f = family[word[k]];
    const Vec2 shift = round_vec(apply_lifted(f, ys[k].lift()) - ys[k + 1].lift());
    const Pusher pusher(f, shift, spacing, opts.max_fine_points);
    std::vector<FinePoint> pushed;
    pushed.reserve(level.size() * 3);
    FinePoint prev = pusher.push(level[0]);
    pushed.push_back(prev);
    for (std::size_t i = 1; i < level.size(); ++i) {
      FinePoint cur = pusher.push(level[i]);
      pusher.fill(level[i - 1], level[i], prev, cur, 0, pushed);
      pushed.push_back(cur);
      prev = std::move(cur);
    }
    level = trim(std::move(pushed), ys[k + 1].lift(), trim_radius);
  }

  // Offsets from x, arc length, and the foot of x.
  const Vec2 xl = x.lift();
  std::vector<Vec2> off(level.size());
  for (std::size_t i = 0; i < level.size(); ++i) off[i] = level[i].pos - xl;
  if (off.size() < 2) throw PreconditionFail("unstable_curve: curve collapsed");
  std::vector<double> arc(off.size(), 0.0);
  for (std::size_t i = 1; i < off.size(); ++i) arc[i] = arc[i - 1] + (off[i] - off[i - 1]).norm();
  std::size_t seg = 0;
  CurveProjection foot;
  foot.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < off.size(); ++i) {
    const auto pr = project_segment(off[i], off[i + 1], Vec2{});
    if (pr.distance < foot.distance) {
      foot = pr;
      seg = i;
    }
  }
  const double s0 = arc[seg] + foot.t * (arc[seg + 1] - arc[seg]);

  // Extent of the chart ball along the curve, from the foot outwards.
  double s_lo = std::numeric_limits<double>::quiet_NaN(), s_hi = s_lo;
  for (std::size_t i = seg + 1; i < off.size(); ++i) {
    if (off[i].norm_inf() > radius) {
      const double t = crossing(off[i - 1], off[i], radius);
      s_hi = arc[i - 1] + t * (arc[i] - arc[i - 1]);
      break;
    }
  }
  for (std::size_t i = seg + 1; i-- > 0;) {
    if (off[i].norm_inf() > radius) {
      const double t = crossing(off[i + 1], off[i], radius);
      s_lo = arc[i + 1] - t * (arc[i + 1] - arc[i]);
      break;
    }
  }
  if (std::isnan(s_lo) || std::isnan(s_hi)) {
    throw PreconditionFail("unstable_curve: curve does not span the chart; cocycle not expanding");
  }

  // Resample by arc length with x as an exact node.
  const std::size_t n = opts.points;
  const double left = s0 - s_lo, right = s_hi - s0;
  const auto b = std::clamp<std::size_t>(std::size_t(std::llround(double(n - 1) * left / (left + right))), 1, n - 2);
  UnstableCurve out;
  out.base = x;
  out.past_word = past_window(word, n_back, n_back);
  out.radius = radius;
  out.target_spacing = target;
  out.base_index = b;
  std::size_t cursor = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double s = j < b ? s_lo + left * double(j) / double(b)
                           : (j == b ? s0 : s0 + right * double(j - b) / double(n - 1 - b));
    while (cursor + 2 < arc.size() && arc[cursor + 1] < s) ++cursor;
    const double len = arc[cursor + 1] - arc[cursor];
    const double t = len > 0.0 ? std::clamp((s - arc[cursor]) / len, 0.0, 1.0) : 0.0;
    FinePoint p = lerp(level[cursor], level[cursor + 1], t);
    Vec2 o = off[cursor] + (off[cursor + 1] - off[cursor]) * t;
    if (j == b) o = Vec2{};
    out.offsets.push_back(o);
    out.points.emplace_back(xl + o);
    out.tangents.push_back(p.tan);
    out.tangent_angles.push_back(wrap_line_angle(p.tan.angle()));
    std::vector<double> hist(p.hist.rbegin(), p.hist.rend());
    out.log_jacobian.push_back(std::move(hist));
  }
  out.points[b] = x;
  return out;
}

UnstableCurve stable_curve(const Family& family, const Word& future, const TorusPoint& x, double radius,
                           std::size_t n_forward, const CurveOptions& opts) {
  if (future.size() < n_forward) throw OutOfRange("stable_curve: word shorter than n_forward");
  Family inv;
  inv.reserve(family.size());
  for (const auto& f : family) inv.push_back(f.inverse());
  Word rev;
  rev.seed = future.seed;
  rev.entries.assign(future.entries.rbegin() + std::ptrdiff_t(future.size() - n_forward), future.entries.rend());
  return unstable_curve(inv, rev, x, radius, n_forward, opts);
}

AffineChart affine_parameter(const UnstableCurve& curve, std::size_t K) {
  if (K > curve.n_back()) throw InvalidArgument("affine_parameter: K must be <= n_back");
  AffineChart chart;
  chart.truncation = K;
  chart.base_index = curve.base_index;
  const auto& base = curve.log_jacobian[curve.base_index];
  chart.rho.resize(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < K; ++j) s += base[j] - curve.log_jacobian[i][j];
    chart.rho[i] = std::exp(s);
  }
  chart.H.assign(curve.size(), 0.0);
  const std::size_t b = curve.base_index;
  for (std::size_t i = b + 1; i < curve.size(); ++i) {
    const double len = (curve.offsets[i] - curve.offsets[i - 1]).norm();
    chart.H[i] = chart.H[i - 1] + 0.5 * (chart.rho[i] + chart.rho[i - 1]) * len;
  }
  for (std::size_t i = b; i-- > 0;) {
    const double len = (curve.offsets[i + 1] - curve.offsets[i]).norm();
    chart.H[i] = chart.H[i + 1] - 0.5 * (chart.rho[i] + chart.rho[i + 1]) * len;
  }
  return chart;
}

CurveProjection project_onto_curve(const UnstableCurve& curve, const Vec2& offset) {
  CurveProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  const std::size_t last = curve.size() - 2;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    auto pr = project_segment(curve.offsets[i], curve.offsets[i + 1], offset);
    if (pr.distance < best.distance) {
      pr.segment = i;
      // Only the outer ends of the polyline bound the curve.
      pr.interior = !((i == 0 && pr.t == 0.0) || (i == last && pr.t == 1.0));
      best = pr;
    }
  }
  return best;
}

IntertwiningReport intertwining_check(const Family& family, const Word& word, const TorusPoint& x, double radius,
                                      std::size_t n_back, std::size_t K, const CurveOptions& opts) {
  if (word.size() < n_back + 1) throw OutOfRange("intertwining_check: word needs n_back + 1 entries");
  const MapSpec& f = family.at(word[n_back]);
  const UnstableCurve c = unstable_curve(family, word, x, radius, n_back, opts);
  const AffineChart h = affine_parameter(c, K);

  const TorusPoint fx = apply_map(f, x);
  std::vector<Vec2> images(c.size());
  double reach = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    images[i] = torus_delta(apply_map(f, c.points[i]), fx);
    reach = std::max(reach, images[i].norm_inf());
  }
  const double radius2 = std::min(opts.max_radius, reach * 1.02 + c.target_spacing);
  Word shifted;
  shifted.seed = word.seed;
  shifted.entries.assign(word.entries.begin() + 1, word.entries.begin() + std::ptrdiff_t(n_back) + 1);
  const UnstableCurve c2 = unstable_curve(family, shifted, fx, radius2, n_back, opts);
  const AffineChart h2 = affine_parameter(c2, K);

  IntertwiningReport rep;
  const Vec2 image_tangent = derivative(f, x) * c.tangents[c.base_index];
  rep.jacobian_base = image_tangent.norm();
  const double sign = dot(image_tangent, c2.tangents[c2.base_index]) >= 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto pr = project_onto_curve(c2, images[i]);
    if (!pr.interior) continue;
    const double r = std::abs(sign * rep.jacobian_base * h.H[i] - h2.at(pr.segment, pr.t));
    rep.max_residual = std::max(rep.max_residual, r);
    ++rep.compared;
  }
  return rep;
}

double Slice::normalized_mass(double r) const {
  std::size_t k = 0;
  for (double c : coords) k += std::abs(c) <= r ? 1 : 0;
  return unit_ball_count == 0 ? 0.0 : double(k) / double(unit_ball_count);
}

Slice conditional_slice(const EmpiricalMeasure& mu, const UnstableCurve& curve, const AffineChart& chart,
                        double tube_halfwidth) {
  if (mu.size() < kMinSliceSamples) throw InvalidArgument("conditional_slice: need >= 1e4 samples");
  if (!(tube_halfwidth > 0.0)) throw InvalidArgument("conditional_slice: tube half-width must be > 0");
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi = lo * -1.0;
  for (const auto& o : curve.offsets) {
    lo = {std::min(lo.x, o.x), std::min(lo.y, o.y)};
    hi = {std::max(hi.x, o.x), std::max(hi.y, o.y)};
  }
  Slice out;
  out.tube_halfwidth = tube_halfwidth;
  for (const auto& p : mu.samples) {
    const Vec2 o = torus_delta(p, curve.base);
    if (o.x < lo.x - tube_halfwidth || o.x > hi.x + tube_halfwidth || o.y < lo.y - tube_halfwidth ||
        o.y > hi.y + tube_halfwidth) {
      continue;
    }
    const auto pr = project_onto_curve(curve, o);
    if (pr.distance > tube_halfwidth || !pr.interior) continue;
    const double h = chart.at(pr.segment, pr.t);
    out.coords.push_back(h);
    if (std::abs(h) <= 1.0) ++out.unit_ball_count;
  }
  if (out.count() < kMinSliceCount) {
    throw InsufficientSlice("conditional_slice: only " + std::to_string(out.count()) + " samples in the tube");
  }
  return out;
}

DimensionEstimate dimension_estimate(std::vector<double> coords, const DimensionOptions& opts) {
  if (coords.size() < kMinDimCoords) throw InvalidArgument("dimension_estimate: need >= 200 coordinates");
  if (opts.per_decade == 0 || !(opts.min_exponent < 0.0) || !(opts.fit_lo < opts.fit_hi)) {
    throw InvalidArgument("dimension_estimate: bad radius schedule");
  }
  std::sort(coords.begin(), coords.end());
  const double spread = coords.back() - coords.front();
  const double scale = spread > 0.0 ? spread : 1.0;

  DimensionEstimate est;
  est.fit_range = {opts.fit_lo * scale, opts.fit_hi * scale};
  const auto steps = std::size_t(std::llround(-opts.min_exponent * double(opts.per_decade)));
  for (std::size_t i = 0; i <= steps; ++i) {
    const double r = scale * std::pow(10.0, opts.min_exponent + double(i) / double(opts.per_decade));
    std::size_t pairs = 0, j = 0;
    for (std::size_t a = 0; a < coords.size(); ++a) {
      j = std::max(j, a);
      while (j + 1 < coords.size() && coords[j + 1] - coords[a] <= r) ++j;
      pairs += j - a;
    }
    est.radii.push_back(r);
    est.correlation_sums.push_back(double(pairs));
  }

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < est.radii.size(); ++i) {
    const double r = est.radii[i];
    if (r < est.fit_range.first * (1 - 1e-12) || r > est.fit_range.second * (1 + 1e-12)) continue;
    if (est.correlation_sums[i] <= 0.0) continue;
    xs.push_back(std::log(r));
    ys.push_back(std::log(est.correlation_sums[i]));
  }
  if (xs.size() < kMinFitRadii) throw Degenerate("dimension_estimate: fewer than 5 radii with pairs in the window");
  est.fit_points = xs.size();
  const double xbar = std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
  double sxx = 0.0, sxy = 0.0;
  // y is taken relative to its first value, so constant sums give slope 0 exactly.
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ys[0]);
  }
  est.dim = sxy / sxx;
  double ybar = 0.0;
  for (double y : ys) ybar += y - ys[0];
  ybar /= double(ys.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = (ys[i] - ys[0]) - (ybar + est.dim * (xs[i] - xbar));
    ss += e * e;
  }
  est.fit_residual = std::sqrt(ss / double(xs.size()));
  return est;
}

SrbReport srb_consistency(const LyapunovEstimate& est, double dim_u, double dim_s, double dim_tolerance) {
  SrbReport rep;
  rep.entropy_u = est.lambda_u * dim_u;
  rep.entropy_s = -est.lambda_s * dim_s;
  rep.identity_residual = std::abs(est.lambda_u * dim_u + est.lambda_s * dim_s);
  rep.tolerance = dim_tolerance * (std::abs(est.lambda_u) + std::abs(est.lambda_s));
  rep.consistent = rep.identity_residual <= rep.tolerance;
  rep.srb = std::abs(dim_u - 1.0) <= dim_tolerance;
  return rep;
}

void write_curve_csv(std::ostream& os, const UnstableCurve& curve, const AffineChart& chart) {
  char buf[160];
  os << "index,x,y,rho,H\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", i, curve.points[i].x(), curve.points[i].y(),
                  chart.rho[i], chart.H[i]);
    os << buf;
  }
}

void write_dimension_csv(std::ostream& os, const DimensionEstimate& est) {
  char buf[96];
  os << "r,C\n";
  for (std::size_t i = 0; i < est.radii.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", est.radii[i], est.correlation_sums[i]);
    os << buf;
  }
}

}  // namespace ergolab
