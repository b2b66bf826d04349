#pragma once

// Joint cone conditions for families of 2x2 matrices and perturbed torus maps.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ergolab/cocycle.hpp"
#include "ergolab/linalg.hpp"
#include "ergolab/torus.hpp"

namespace ergolab {

/// Open set of lines within half_width of center_angle (mod pi).
struct ProjectiveCone {
  double center_angle = 0.0;
  double half_width = 0.1;

  ProjectiveCone() = default;
  ProjectiveCone(double center, double half);
  bool contains(double angle) const;
};

/// Open cones are disjoint when their closures at most touch.
bool disjoint(const ProjectiveCone& a, const ProjectiveCone& b);

struct HyperbolicityReport {
  bool is_hyperbolic = false;
  bool is_complex = false;
  double lambda_u = 0.0;  // larger modulus (signed)
  double lambda_s = 0.0;
  double angle_u = 0.0;   // eigen-line angles mod pi; zero when complex
  double angle_s = 0.0;
};

/// Real eigen-data when the discriminant is positive. Hyperbolic means real eigenvalues
/// with |lambda_s| < 1 < |lambda_u|.
HyperbolicityReport eigen_analysis(const IntMat2& m);
HyperbolicityReport eigen_analysis(const RealMat2& m);

struct ConeCertificate {
  ProjectiveCone cone_u;
  ProjectiveCone cone_s;
  double kappa = 0.0;
  double margin = 0.0;
};

struct ConeFailure {
  enum class Kind { Overlap, InclusionFail, ExpansionFail };
  Kind kind = Kind::Overlap;
  std::size_t matrix = 0;
  char cone = 'u';
  double value = 0.0;  // offending margin or expansion factor
  std::string message;
};

struct ConeCheckResult {
  std::optional<ConeCertificate> certificate;
  std::optional<ConeFailure> failure;
  bool ok() const { return certificate.has_value(); }
};

/// Smallest accepted strict margin (radians, and above 1 for expansion).
inline constexpr double kConeMarginFloor = 1e-9;

/// Checks M C^u within C^u and M^-1 C^s within C^s for every matrix, and expansion
/// |Mv| > kappa |v| on C^u, |M^-1 v| > kappa |v| on C^s. Expansion minima come from a
/// boundary-inclusive grid of grid_points angles refined by golden-section search.
ConeCheckResult check_joint_cone(const std::vector<RealMat2>& mats, const ProjectiveCone& cone_u,
                                 const ProjectiveCone& cone_s, std::size_t grid_points = 10000);

/// Signed margin by which the image of `from` under m sits inside `to`; negative when it
/// sticks out (or wraps the wrong way).
double inclusion_margin(const RealMat2& m, const ProjectiveCone& from, const ProjectiveCone& to);

/// Exact min of |m v| over unit v in the cone, from the quadratic form.
double min_stretch_exact(const RealMat2& m, const ProjectiveCone& cone);

/// Pad schedule tried by search_cone_certificate, coarse to fine.
const std::vector<double>& cone_search_pads();

/// Cones centred on the circular means of the unstable and stable eigen-lines, half-width =
/// cluster half-spread + pad for each pad in cone_search_pads(). First success wins.
std::optional<ConeCertificate> search_cone_certificate(const std::vector<RealMat2>& mats);

struct WordPair {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  IntMat2 first_product;
  IntMat2 second_product;
};

/// Product of a generator word, applied left to right: M_{w[k-1]} ... M_{w[0]}.
/// Returns nullopt on int64 overflow.
std::optional<IntMat2> word_product(const std::vector<IntMat2>& generators, const std::vector<std::size_t>& word);

/// Length-lexicographic search over generator words of length 1..max_word_len for two
/// hyperbolic products that do not commute.
std::optional<WordPair> find_noncommuting_hyperbolic(const std::vector<IntMat2>& generators,
                                                     std::size_t max_word_len);

struct PerturbedConeReport {
  bool pass = false;
  double worst_margin = 0.0;  // slack-adjusted inclusion margin, min over grid and maps
  double worst_kappa = 0.0;   // slack-adjusted expansion, min over grid and maps
  std::size_t worst_map = 0;
  char worst_cone = 'u';
  TorusPoint worst_point;
};

/// Derivative cone inclusion and expansion at the centres of a grid_n x grid_n grid. The
/// slack between grid points is Lip(Df) * h / sqrt(2), with Lip(Df) = eps * C2.
PerturbedConeReport check_perturbed_cones(const Family& family, const ConeCertificate& cert, std::size_t grid_n);

/// Bisection for the smallest epsilon at which check_perturbed_cones fails, in [0, eps_hi].
/// Returns nullopt when eps_hi still passes.
struct EpsilonBisection {
  double last_pass = 0.0;
  double first_fail = 0.0;
  PerturbedConeReport witness;
};
std::optional<EpsilonBisection> bisect_cone_epsilon(const std::function<Family(double)>& make_family,
                                                    const ConeCertificate& cert, std::size_t grid_n, double eps_hi,
                                                    int iterations = 30);

}  // namespace ergolab
