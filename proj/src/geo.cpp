#include "geokrig/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geokrig/random.hpp"

namespace geokrig::geo {

Location::Location(double lat_deg, double lon_deg) {
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0)) {
    throw Error("latitude out of range [-90, 90]: " + std::to_string(lat_deg));
  }
  lat_ = lat_deg;
  lon_ = wrap_lon(lon_deg);
}

double wrap_lon(double dlon_deg) {
  double x = std::fmod(dlon_deg + 180.0, 360.0);
  if (x < 0.0) x += 360.0;
  return x - 180.0;
}

Displacement displacement(const Location& a, const Location& b, MetricMode mode) {
  const double dlat = a.lat() - b.lat();
  const double dlon = wrap_lon(a.lon() - b.lon());
  switch (mode) {
    case MetricMode::euclidean:
      return Displacement(dlat, dlon);
    case MetricMode::equirectangular: {
      const double midlat = 0.5 * (a.lat() + b.lat());
      return Displacement(dlat, dlon * std::cos(midlat * kDegToRad));
    }
  }
  return Displacement::Zero();
}

double haversine_deg(const Location& a, const Location& b) {
  const double phi1 = a.lat() * kDegToRad;
  const double phi2 = b.lat() * kDegToRad;
  const double dphi = (b.lat() - a.lat()) * kDegToRad;
  const double dlam = wrap_lon(b.lon() - a.lon()) * kDegToRad;
  const double s1 = std::sin(0.5 * dphi);
  const double s2 = std::sin(0.5 * dlam);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * std::asin(std::min(1.0, std::sqrt(h))) / kDegToRad;
}

double neighbor_distance(const Location& a, const Location& b, MetricMode mode) {
  if (mode == MetricMode::equirectangular) return haversine_deg(a, b);
  return displacement(a, b, mode).norm();
}

namespace {

std::vector<std::size_t> knn_by_distance(const std::vector<Location>& locs,
                                         const Location& query, std::size_t k,
                                         MetricMode mode) {
  if (k == 0 || k > locs.size()) {
    throw InsufficientNeighbors("requested " + std::to_string(k) + " neighbors from " +
                                std::to_string(locs.size()) + " locations");
  }
  std::vector<std::pair<double, std::size_t>> dist(locs.size());
  for (std::size_t i = 0; i < locs.size(); ++i) {
    dist[i] = {neighbor_distance(query, locs[i], mode), i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

}  // namespace

std::vector<std::size_t> nearest_neighbors(const std::vector<Location>& locs,
                                           std::size_t center, std::size_t k,
                                           MetricMode mode) {
  return knn_by_distance(locs, locs.at(center), k, mode);
}

std::vector<std::size_t> nearest_neighbors(const std::vector<Location>& locs,
                                           const Location& query, std::size_t k,
                                           MetricMode mode) {
  return knn_by_distance(locs, query, k, mode);
}

void SpatialDataset::validate() const {
  if (locations.size() != values.size()) {
    throw Error("dataset locations/values length mismatch");
  }
  if (locations.empty()) {
    throw Error("dataset must contain at least one point");
  }
  if (noise_sd < 0.0) {
    throw Error("noise_sd must be nonnegative");
  }
  for (std::size_t i = 0; i < locations.size(); ++i) {
    for (std::size_t j = i + 1; j < locations.size(); ++j) {
      if (locations[i] == locations[j]) {
        throw DuplicateLocation("duplicate coordinates at rows " + std::to_string(i) +
                                " and " + std::to_string(j));
      }
    }
  }
}

double fit_station_rate(const StationRecord& r) {
  const auto& s = r.series;
  if (s.size() < 2) {
    throw DegenerateSeries("station " + r.station_id + ": series shorter than 2");
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [year, level] : s) {
    mean_x += year;
    mean_y += level;
  }
  mean_x /= static_cast<double>(s.size());
  mean_y /= static_cast<double>(s.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [year, level] : s) {
    const double dx = year - mean_x;
    sxx += dx * dx;
    sxy += dx * (level - mean_y);
  }
  if (sxx == 0.0) {
    throw DegenerateSeries("station " + r.station_id + ": all years identical");
  }
  return sxy / sxx;
}

SpatialDataset station_rates(const std::vector<StationRecord>& stations) {
  SpatialDataset d;
  d.locations.reserve(stations.size());
  d.values.reserve(stations.size());
  for (const auto& st : stations) {
    d.locations.push_back(st.location);
    d.values.push_back(fit_station_rate(st));
  }
  d.validate();
  return d;
}

std::pair<SpatialDataset, SpatialDataset> train_test_split(const SpatialDataset& d,
                                                           std::size_t n_train,
                                                           std::uint64_t seed) {
  const std::size_t n = d.size();
  if (n_train < 1 || n_train >= n) {
    throw BadSplit("n_train=" + std::to_string(n_train) + " must satisfy 1 <= n_train < " +
                   std::to_string(n));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(idx);

  SpatialDataset train, test;
  train.noise_sd = d.noise_sd;
  test.noise_sd = d.noise_sd;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = (i < n_train) ? train : test;
    dst.locations.push_back(d.locations[idx[i]]);
    dst.values.push_back(d.values[idx[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace geokrig::geo
