#ifndef GEOKRIG_GEO_HPP
#define GEOKRIG_GEO_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "geokrig/errors.hpp"

namespace geokrig::geo {

// Planar approximation used inside anisotropic quadratic forms. Euclidean
// treats (lat, lon) as plane coordinates in degrees; equirectangular scales
// the longitude separation by cos(mid-latitude).
enum class MetricMode { euclidean, equirectangular };

constexpr double kDegToRad = 0.017453292519943295;

// Geodetic coordinate. Latitude in [-90, 90]; longitude normalized into
// [-180, 180) on construction.
class Location {
 public:
  Location() = default;
  Location(double lat_deg, double lon_deg);

  double lat() const { return lat_; }
  double lon() const { return lon_; }

  bool operator==(const Location& o) const { return lat_ == o.lat_ && lon_ == o.lon_; }

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

// Local 2D separation vector (lat component, lon component).
using Displacement = Eigen::Vector2d;

// Wraps a longitude difference onto the shorter arc, in [-180, 180).
double wrap_lon(double dlon_deg);

Displacement displacement(const Location& a, const Location& b, MetricMode mode);

// Great-circle central angle in degrees. Used for neighbor ranking in the
// geodetic (equirectangular) mode only, never inside quadratic forms.
double haversine_deg(const Location& a, const Location& b);

// Scalar distance used to rank neighbors under the given metric mode.
double neighbor_distance(const Location& a, const Location& b, MetricMode mode);

// Indices of the k nearest locations to `locs[center]` (center included,
// distance zero sorts first). Ties broken by index.
std::vector<std::size_t> nearest_neighbors(const std::vector<Location>& locs,
                                           std::size_t center, std::size_t k,
                                           MetricMode mode);

// Same, for an arbitrary query point not in `locs`.
std::vector<std::size_t> nearest_neighbors(const std::vector<Location>& locs,
                                           const Location& query, std::size_t k,
                                           MetricMode mode);

// Immutable spatial sample set: one scalar value per location.
struct SpatialDataset {
  std::vector<Location> locations;
  std::vector<double> values;
  double noise_sd = 0.0;

  std::size_t size() const { return locations.size(); }

  // Throws DuplicateLocation / Error on inconsistent shape.
  void validate() const;
};

// Annual relative sea-level series for one tide-gauge station.
struct StationRecord {
  std::string station_id;
  Location location;
  std::vector<std::pair<int, double>> series;  // (year, level mm), years strictly increasing
};

// OLS slope of level vs. year, in mm/year.
double fit_station_rate(const StationRecord& r);

// Converts station series to a rate dataset via fit_station_rate.
SpatialDataset station_rates(const std::vector<StationRecord>& stations);

// Seeded disjoint partition into (train, test) with n_train training points.
std::pair<SpatialDataset, SpatialDataset> train_test_split(const SpatialDataset& d,
                                                           std::size_t n_train,
                                                           std::uint64_t seed);

}  // namespace geokrig::geo

#endif  // GEOKRIG_GEO_HPP
