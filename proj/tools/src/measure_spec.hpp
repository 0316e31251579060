#pragma once

#include <string_view>
#include <variant>

#include <bfstab/densitynd.hpp>
#include <bfstab/prekopa.hpp>

namespace bfstab::cli {

using Measure = std::variant<Density1D, GaussianMixtureND>;

/// Inline density mini-language:
///   gauss:m,v            N(m, v), v the variance
///   mix:[w,m,v;w,m,v]    1-D mixture, v the component variance
///   std                  standard Gaussian
///   file:path.csv        grid density with header x,density
///   file:path.json       Gaussian mixture document
/// Throws ValidationError naming the offending token.
Measure parse_measure(std::string_view text, std::string_view flag = "measure");

/// const:b, linear:a[,b], quadratic:q,a[,b], sin-bump.
GFunction parse_g(std::string_view text);

int dimension(const Measure& m);
/// The measure as a mixture, when it is one (1-D grids are not).
std::optional<GaussianMixtureND> as_mixture(const Measure& m);

}  // namespace bfstab::cli
