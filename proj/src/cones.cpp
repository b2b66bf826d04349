#include "ergolab/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ergolab/errors.hpp"
#include "ergolab/map_spec.hpp"

namespace ergolab {

namespace {

constexpr double kPi = std::numbers::pi;

double eigen_line_angle(const RealMat2& m, double lambda) {
  // Rows of (m - lambda I) are orthogonal to the eigenvector; take the better conditioned one.
  const Vec2 r1{m.a - lambda, m.b}, r2{m.c, m.d - lambda};
  const Vec2 r = r1.norm() >= r2.norm() ? r1 : r2;
  return wrap_line_angle(Vec2{-r.y, r.x}.angle());
}

HyperbolicityReport real_eigen(const RealMat2& m, double disc) {
  HyperbolicityReport rep;
  if (disc < 0.0) {
    rep.is_complex = true;
    return rep;
  }
  const double tr = m.trace();
  const double root = std::sqrt(disc);
  const double big = tr >= 0.0 ? (tr + root) / 2.0 : (tr - root) / 2.0;
  const double small = big != 0.0 ? m.det() / big : 0.0;
  rep.lambda_u = big;
  rep.lambda_s = small;
  rep.is_hyperbolic = disc > 0.0 && std::abs(big) > 1.0 && std::abs(small) < 1.0;
  if (disc > 0.0) {
    rep.angle_u = eigen_line_angle(m, big);
    rep.angle_s = eigen_line_angle(m, small);
  }
  return rep;
}

double stretch(const RealMat2& m, double angle) { return (m * unit_vector(angle)).norm(); }

/// Grid + golden-section minimum of |m u(theta)| over the closed cone.
double min_stretch_grid(const RealMat2& m, const ProjectiveCone& cone, std::size_t grid_points) {
  const double lo = cone.center_angle - cone.half_width;
  const double step = 2.0 * cone.half_width / static_cast<double>(grid_points - 1);
  std::size_t best_i = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double v = stretch(m, lo + step * static_cast<double>(i));
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  double a = lo + step * static_cast<double>(best_i == 0 ? 0 : best_i - 1);
  double b = lo + step * static_cast<double>(std::min(best_i + 1, grid_points - 1));
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = stretch(m, x1), f2 = stretch(m, x2);
  for (int it = 0; it < 80 && b - a > 1e-15; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = stretch(m, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = stretch(m, x2);
    }
  }
  return std::min({best, f1, f2});
}

bool is_hyperbolic_int(const IntMat2& m) { return eigen_analysis(m).is_hyperbolic; }

bool commute(const IntMat2& p, const IntMat2& q) {
  using i128 = __int128;
  const i128 pa = p.a, pb = p.b, pc = p.c, pd = p.d, qa = q.a, qb = q.b, qc = q.c, qd = q.d;
  return pa * qa + pb * qc == qa * pa + qb * pc && pa * qb + pb * qd == qa * pb + qb * pd &&
         pc * qa + pd * qc == qc * pa + qd * pc && pc * qb + pd * qd == qc * pb + qd * pd;
}

std::optional<IntMat2> checked_mul(const IntMat2& x, const IntMat2& y) {
  std::int64_t e[4];
  const std::int64_t lhs[4][4] = {{x.a, y.a, x.b, y.c}, {x.a, y.b, x.b, y.d}, {x.c, y.a, x.d, y.c}, {x.c, y.b, x.d, y.d}};
  for (int i = 0; i < 4; ++i) {
    std::int64_t p1, p2;
    if (__builtin_mul_overflow(lhs[i][0], lhs[i][1], &p1) || __builtin_mul_overflow(lhs[i][2], lhs[i][3], &p2) ||
        __builtin_add_overflow(p1, p2, &e[i])) {
      return std::nullopt;
    }
  }
  return IntMat2{e[0], e[1], e[2], e[3]};
}

}  // namespace

ProjectiveCone::ProjectiveCone(double center, double half) : center_angle(wrap_line_angle(center)), half_width(half) {
  if (!(half > 0.0 && half < kPi / 2)) throw InvalidArgument("ProjectiveCone: half_width must lie in (0, pi/2)");
}

bool ProjectiveCone::contains(double angle) const {
  return std::abs(line_angle_delta(angle, center_angle)) < half_width;
}

bool disjoint(const ProjectiveCone& a, const ProjectiveCone& b) {
  return std::abs(line_angle_delta(a.center_angle, b.center_angle)) >= a.half_width + b.half_width;
}

HyperbolicityReport eigen_analysis(const RealMat2& m) {
  if (m.det() == 0.0) throw InvalidArgument("eigen_analysis: singular matrix");
  const double tr = m.trace();
  return real_eigen(m, tr * tr - 4.0 * m.det());
}

HyperbolicityReport eigen_analysis(const IntMat2& m) {
  if (m.det() == 0) throw InvalidArgument("eigen_analysis: singular matrix");
  const __int128 tr = m.trace();
  const __int128 disc = tr * tr - 4 * static_cast<__int128>(m.det());
  if (disc <= 0) {
    HyperbolicityReport rep;
    rep.is_complex = disc < 0;
    if (disc == 0) rep.lambda_u = rep.lambda_s = static_cast<double>(m.trace()) / 2.0;
    return rep;
  }
  return real_eigen(m.to_real(), static_cast<double>(disc));
}

double inclusion_margin(const RealMat2& m, const ProjectiveCone& from, const ProjectiveCone& to) {
  const double c = from.center_angle, w = from.half_width;
  const double d1 = line_angle_delta((m * unit_vector(c - w)).angle(), to.center_angle);
  const double d2 = line_angle_delta((m * unit_vector(c + w)).angle(), to.center_angle);
  const double dc = line_angle_delta((m * unit_vector(c)).angle(), to.center_angle);
  const double lo = std::min(d1, d2), hi = std::max(d1, d2);
  if (!(lo <= dc && dc <= hi)) return -kPi / 2;  // image arc wraps through the far side
  return to.half_width - std::max(std::abs(d1), std::abs(d2));
}

double min_stretch_exact(const RealMat2& m, const ProjectiveCone& cone) {
  const Svd2 s = svd(m);
  if (std::abs(line_angle_delta(s.right_min_angle, cone.center_angle)) <= cone.half_width) return s.s_min;
  return std::min(stretch(m, cone.center_angle - cone.half_width), stretch(m, cone.center_angle + cone.half_width));
}

ConeCheckResult check_joint_cone(const std::vector<RealMat2>& mats, const ProjectiveCone& cone_u,
                                 const ProjectiveCone& cone_s, std::size_t grid_points) {
  ConeCheckResult out;
  if (grid_points < 2) throw InvalidArgument("check_joint_cone: need at least 2 grid points");
  if (!disjoint(cone_u, cone_s)) {
    out.failure = ConeFailure{ConeFailure::Kind::Overlap, 0, 'u', 0.0, "cones overlap"};
    return out;
  }
  double margin = std::numeric_limits<double>::infinity();
  double kappa = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const RealMat2 inv = mats[i].inverse();
    const double mu = inclusion_margin(mats[i], cone_u, cone_u);
    if (!(mu > kConeMarginFloor)) {
      out.failure = ConeFailure{ConeFailure::Kind::InclusionFail, i, 'u', mu,
                                "matrix " + std::to_string(i) + " does not map C^u into C^u"};
      return out;
    }
    const double ms = inclusion_margin(inv, cone_s, cone_s);
    if (!(ms > kConeMarginFloor)) {
      out.failure = ConeFailure{ConeFailure::Kind::InclusionFail, i, 's', ms,
                                "inverse of matrix " + std::to_string(i) + " does not map C^s into C^s"};
      return out;
    }
    margin = std::min({margin, mu, ms});
    kappa = std::min({kappa, min_stretch_grid(mats[i], cone_u, grid_points), min_stretch_grid(inv, cone_s, grid_points)});
  }
  kappa -= 1e-12 * kappa;
  if (!(kappa > 1.0 + kConeMarginFloor)) {
    out.failure = ConeFailure{ConeFailure::Kind::ExpansionFail, 0, 'u', kappa, "expansion factor kappa <= 1"};
    return out;
  }
  out.certificate = ConeCertificate{cone_u, cone_s, kappa, margin};
  return out;
}

const std::vector<double>& cone_search_pads() {
  static const std::vector<double> pads{0.5, 0.35, 0.25, 0.15, 0.1, 0.05, 0.02, 0.01};
  return pads;
}

std::optional<ConeCertificate> search_cone_certificate(const std::vector<RealMat2>& mats) {
  if (mats.empty()) return std::nullopt;
  std::vector<double> au, as;
  for (const auto& m : mats) {
    const auto rep = eigen_analysis(m);
    if (!rep.is_hyperbolic) return std::nullopt;
    au.push_back(rep.angle_u);
    as.push_back(rep.angle_s);
  }
  struct Cluster {
    double center;
    double spread;
  };
  auto cluster = [](const std::vector<double>& angles) -> std::optional<Cluster> {
    double sx = 0.0, sy = 0.0;
    for (double a : angles) {
      sx += std::cos(2 * a);
      sy += std::sin(2 * a);
    }
    if (std::hypot(sx, sy) < 1e-9 * static_cast<double>(angles.size())) return std::nullopt;
    const double center = wrap_line_angle(std::atan2(sy, sx) / 2);
    double spread = 0.0;
    for (double a : angles) spread = std::max(spread, std::abs(line_angle_delta(a, center)));
    return Cluster{center, spread};
  };
  const auto cu = cluster(au), cs = cluster(as);
  if (!cu || !cs) return std::nullopt;
  for (double pad : cone_search_pads()) {
    const double wu = cu->spread + pad, ws = cs->spread + pad;
    if (wu >= kPi / 2 || ws >= kPi / 2) continue;
    const ProjectiveCone cone_u(cu->center, wu), cone_s(cs->center, ws);
    if (!disjoint(cone_u, cone_s)) continue;
    auto res = check_joint_cone(mats, cone_u, cone_s);
    if (res.ok()) return res.certificate;
  }
  return std::nullopt;
}

std::optional<IntMat2> word_product(const std::vector<IntMat2>& generators, const std::vector<std::size_t>& word) {
  IntMat2 acc = IntMat2::identity();
  for (std::size_t g : word) {
    auto next = checked_mul(generators.at(g), acc);
    if (!next) return std::nullopt;
    acc = *next;
  }
  return acc;
}

std::optional<WordPair> find_noncommuting_hyperbolic(const std::vector<IntMat2>& generators,
                                                     std::size_t max_word_len) {
  for (const auto& g : generators) {
    if (g.det() == 0) throw InvalidArgument("find_noncommuting_hyperbolic: singular generator");
  }
  if (generators.empty()) return std::nullopt;
  std::vector<std::pair<std::vector<std::size_t>, IntMat2>> found;
  const std::size_t k = generators.size();
  for (std::size_t len = 1; len <= max_word_len; ++len) {
    std::vector<std::size_t> word(len, 0);
    while (true) {
      if (const auto prod = word_product(generators, word); prod && is_hyperbolic_int(*prod)) {
        for (const auto& [w, m] : found) {
          if (!commute(m, *prod)) return WordPair{w, word, m, *prod};
        }
        found.emplace_back(word, *prod);
      }
      std::size_t pos = len;
      while (pos > 0 && ++word[pos - 1] == k) word[--pos] = 0;
      if (pos == 0) break;
    }
  }
  return std::nullopt;
}

PerturbedConeReport check_perturbed_cones(const Family& family, const ConeCertificate& cert, std::size_t grid_n) {
  if (grid_n == 0) throw InvalidArgument("check_perturbed_cones: grid_n must be positive");
  PerturbedConeReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  rep.worst_kappa = std::numeric_limits<double>::infinity();
  const double h = 1.0 / static_cast<double>(grid_n);
  double worst_score = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < family.size(); ++f) {
    const MapSpec& spec = family[f];
    if (spec.inverted()) throw InvalidArgument("check_perturbed_cones: inverted specs are not supported");
    const double slack = spec.epsilon() * spec.perturbation_c2() * h / std::numbers::sqrt2;
    for (std::size_t i = 0; i < grid_n; ++i) {
      for (std::size_t j = 0; j < grid_n; ++j) {
        const TorusPoint x((static_cast<double>(i) + 0.5) * h, (static_cast<double>(j) + 0.5) * h);
        const RealMat2 m = derivative(spec, x);
        const RealMat2 inv = m.inverse();
        const double ninv = opnorm(inv);

        const double eu = min_stretch_exact(m, cert.cone_u);
        const double ku = eu - slack;
        const double mu = inclusion_margin(m, cert.cone_u, cert.cone_u) -
                          (slack < eu ? std::asin(slack / eu) : kPi / 2);

        const double dinv = ninv * slack < 1.0 ? ninv * ninv * slack / (1.0 - ninv * slack)
                                               : std::numeric_limits<double>::infinity();
        const double es = min_stretch_exact(inv, cert.cone_s);
        const double ks = es - dinv;
        const double ms = inclusion_margin(inv, cert.cone_s, cert.cone_s) -
                          (dinv < es ? std::asin(dinv / es) : kPi / 2);

        const auto update = [&](double margin, double kappa, char cone) {
          const double score = std::min(margin, kappa - 1.0);
          if (score < worst_score) {
            worst_score = score;
            rep.worst_map = f;
            rep.worst_cone = cone;
            rep.worst_point = x;
          }
          rep.worst_margin = std::min(rep.worst_margin, margin);
          rep.worst_kappa = std::min(rep.worst_kappa, kappa);
        };
        update(mu, ku, 'u');
        update(ms, ks, 's');
      }
    }
  }
  rep.pass = rep.worst_margin > kConeMarginFloor && rep.worst_kappa > 1.0 + kConeMarginFloor;
  return rep;
}

std::optional<EpsilonBisection> bisect_cone_epsilon(const std::function<Family(double)>& make_family,
                                                    const ConeCertificate& cert, std::size_t grid_n, double eps_hi,
                                                    int iterations) {
  auto hi_rep = check_perturbed_cones(make_family(eps_hi), cert, grid_n);
  if (hi_rep.pass) return std::nullopt;
  EpsilonBisection out{0.0, eps_hi, hi_rep};
  const auto lo_rep = check_perturbed_cones(make_family(0.0), cert, grid_n);
  if (!lo_rep.pass) {
    out.first_fail = 0.0;
    out.witness = lo_rep;
    return out;
  }
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (out.last_pass + out.first_fail);
    auto rep = check_perturbed_cones(make_family(mid), cert, grid_n);
    if (rep.pass) {
      out.last_pass = mid;
    } else {
      out.first_fail = mid;
      out.witness = rep;
    }
  }
  return out;
}

}  // namespace ergolab
