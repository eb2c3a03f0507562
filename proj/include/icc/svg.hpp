#pragma once

#include <span>
#include <string>
#include <vector>

#include "icc/deform.hpp"

namespace icc {

struct SvgOptions {
  int width = 640;          ///< pixels; height follows the grid aspect ratio
  bool field = true;        ///< grey fill per triangle, lighter toward the maximum
  bool tree = false;        ///< cousin tree edges
  int curves = 48;          ///< ascents from this many cage points spread by arc length; 0 for none
  bool expansion = true;    ///< expansion edges in purple
  bool compression = false; ///< compression edges in orange
};

struct SvgMarker {
  Vec2 position;
  bool highlighted = false;  ///< drawn red instead of blue
};

/// Renders the field, cage and the selected overlays. `extra_curves` and `markers` are drawn on
/// top in world coordinates.
std::string render_svg(const ScalarField& f, const SvgOptions& options = {},
                       std::span<const IntegralCurve> extra_curves = {}, std::span<const SvgMarker> markers = {});

/// Ascents from `count` cage points at equal arc-length spacing; points whose trace fails are skipped.
std::vector<IntegralCurve> boundary_ascents(const ScalarField& f, int count);

}  // namespace icc
