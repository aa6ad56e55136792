#pragma once

#include "tvmcf/graph_surface.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace tvmcf::testing {

inline std::vector<ReferenceSurface> all_surfaces() {
  return {ReferenceSurface::circle(0.5, 0.5, 0.2), ReferenceSurface::strip(0.3, 0.7),
          ReferenceSurface::lamella(0.25, 0.75), ReferenceSurface::cylinder(0.5, 0.5, 0.25)};
}

/// Random band-limited bundle rescaled so that its C^1 norm equals c1.
inline FieldBundle random_bundle(const ReferenceSurface& f, int n, int band, double c1, std::mt19937_64& rng) {
  FieldBundle b;
  for (int c = 0; c < f.num_components(); ++c) b.push_back(random_band_limited(chart_grid(f, c, n), band, rng));
  const double s = c1 / c1_norm(b);
  for (auto& comp : b)
    for (double& v : comp.values) v *= s;
  return b;
}

inline double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace tvmcf::testing
