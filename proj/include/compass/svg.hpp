#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "compass/core.hpp"

namespace compass {

struct SvgOptions {
  int width = 600;
  int height = 600;
  int margin = 40;
  std::string title;      // omitted when empty
  std::string timestamp;  // embedded as metadata only when explicitly set
  std::map<std::string, std::string> colors;  // per-label overrides
};

// Renders labeled points on the [-10, 10]^2 compass plane. The affine map is
//   px = margin + (economic + 10) / 20 * (width  - 2 * margin)
//   py = margin + (10 - social)   / 20 * (height - 2 * margin)
// so (0, 0) lands at the viewport center and (10, 10) at the top-right plot
// corner. Output is byte-deterministic for fixed input and options.
std::string render_compass_svg(const std::vector<std::pair<std::string, CompassPoint>>& points,
                               const SvgOptions& options = {});

}  // namespace compass
