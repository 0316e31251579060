#pragma once

#include <string>
#include <vector>

#include "bfstab/densitynd.hpp"
#include "bfstab/transport1d.hpp"

namespace bfstab {

struct SphereSearchConfig {
  int coarse_count = 0;  // 0 picks 512 for n <= 3 and 4096 above
  int refinement_iterations = 200;
  int restarts = 8;
  double tolerance = 1e-6;  // radians
  bool refine = true;

  int resolved_coarse_count(int dim) const;
  void validate() const;
};

struct DnResult {
  double value = 0.0;
  Direction argmax = Direction::axis(1, 0);
  double coarse_max = 0.0;
  double refined_gain = 0.0;
  double error = 0.0;  // quadrature and asymmetry error of the winning evaluation
  int directions_evaluated = 0;
  int skipped = 0;
  bool asymmetry_warning = false;
};

/// Distance between the 1-D laws of <X, xi> under u and v.
DistanceDetail directional_distance(const GaussianMixtureND& u, const GaussianMixtureND& v, const Direction& xi,
                                    const QuadratureOptions& quad = {});

/// Coarse direction set on the half sphere (one of each antipodal pair).
/// Sets for count and 2 * count are nested. Axes, mean differences and
/// covariance eigenvectors of both mixtures are appended.
std::vector<Direction> coarse_directions(const GaussianMixtureND& u, const GaussianMixtureND& v, int count);

/// sup over unit xi of d(u_xi, v_xi), evaluated on a coarse lattice and
/// refined by simplex ascent. The value is the best evaluated direction, so it
/// never exceeds the true supremum beyond quadrature error.
DnResult dn_distance(const GaussianMixtureND& u, const GaussianMixtureND& v, const SphereSearchConfig& cfg = {},
                     const QuadratureOptions& quad = {});

struct LowerBoundCertificate {
  double value = 0.0;
  int direction_count = 0;
  Direction argmax = Direction::axis(1, 0);
  bool axis_hit = false;
  std::string statement;
};

LowerBoundCertificate lower_bound_certificate(const DnResult& result, const SphereSearchConfig& cfg);

}  // namespace bfstab
