#ifndef GEOKRIG_IO_HPP
#define GEOKRIG_IO_HPP

#include <string>
#include <vector>

#include "geokrig/geo.hpp"

namespace geokrig::io {

// Rates CSV: header `lat_deg,lon_deg,rate_mm_per_yr`, UTF-8, '.' decimal
// separator, one record per line. Duplicate exact coordinates are rejected.
geo::SpatialDataset load_rates_csv(const std::string& path);
void save_rates_csv(const std::string& path, const geo::SpatialDataset& d);

// Station CSV: header `station_id,lat_deg,lon_deg,year,level_mm`. Rows are
// grouped by station_id and series sorted by year. Stations whose year span
// does not cover [first_year, last_year] are dropped and counted.
struct StationLoadResult {
  std::vector<geo::StationRecord> stations;
  std::size_t n_dropped = 0;
};
StationLoadResult load_station_csv(const std::string& path, int first_year, int last_year);

// Predictions CSV: header `lat_deg,lon_deg,pred_mean,pred_sd`.
struct PredictionRow {
  geo::Location location;
  double mean = 0.0;
  double sd = 0.0;
};
void save_predictions_csv(const std::string& path, const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> load_predictions_csv(const std::string& path);

// CLS dump: `lat_deg,lon_deg,s11,s12,s22` per training point.
struct ClsRow {
  geo::Location location;
  double s11 = 0.0, s12 = 0.0, s22 = 0.0;
};
void save_cls_csv(const std::string& path, const std::vector<ClsRow>& rows);

// Region tags: `lat_deg,lon_deg,region`.
void save_region_tags_csv(const std::string& path, const std::vector<geo::Location>& locs,
                          const std::vector<int>& tags);
std::vector<std::pair<geo::Location, int>> load_region_tags_csv(const std::string& path);

// Full-precision formatting so that written files reload bitwise-equal.
std::string format_double(double v);

}  // namespace geokrig::io

#endif  // GEOKRIG_IO_HPP
