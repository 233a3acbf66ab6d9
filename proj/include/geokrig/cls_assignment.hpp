#ifndef GEOKRIG_CLS_ASSIGNMENT_HPP
#define GEOKRIG_CLS_ASSIGNMENT_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geokrig/geo.hpp"
#include "geokrig/spd.hpp"

namespace geokrig::cls {

// Direction of the neighborhood deviation filter. remove_above rejects
// outliers (deviation greater than the threshold); remove_below keeps them
// and drops the well-correlated elements instead.
enum class FilterDirection { remove_above, remove_below };

// Neighborhood configuration for the regional characteristic-length-scale
// estimate.
struct IntrinsicConfig {
  std::size_t k_neighbors = 8;
  double deviation_threshold = 2.0;
  FilterDirection filter_direction = FilterDirection::remove_above;
  std::size_t min_survivors = 3;

  void validate(std::size_t n_points) const {
    if (k_neighbors < 2) throw Error("k_neighbors must be >= 2");
    if (k_neighbors > n_points) {
      throw InsufficientNeighbors("k_neighbors=" + std::to_string(k_neighbors) +
                                  " exceeds point count " + std::to_string(n_points));
    }
    if (!(deviation_threshold > 0.0)) throw Error("deviation_threshold must be positive");
    if (min_survivors < 1 || min_survivors > k_neighbors) {
      throw Error("min_survivors must lie in [1, k_neighbors]");
    }
  }
};

// Per-training-point CLS matrices plus, when the intrinsic kernel is active,
// the regional Karcher means. `query_cls` supplies the CLS at arbitrary
// (test) locations without reading test values.
struct ClsAssignment {
  std::vector<spd::SpdMatrix> per_point;
  std::optional<std::vector<spd::SpdMatrix>> regional;
  std::function<spd::SpdMatrix(const geo::Location&)> query_cls;

  // Pairwise intrinsic CLS: geodesic midpoint of the regional means.
  spd::SpdMatrix psi(std::size_t i, std::size_t j) const {
    if (!regional) throw Error("psi requested without regional CLS means");
    const auto& r = *regional;
    if (i == j) return r.at(i);
    return spd::geodesic_midpoint(r.at(i), r.at(j));
  }
};

}  // namespace geokrig::cls

#endif  // GEOKRIG_CLS_ASSIGNMENT_HPP
