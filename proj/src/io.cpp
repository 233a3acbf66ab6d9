#include "geokrig/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace geokrig::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t row,
                    const std::string& column) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ParseError(path + ": row " + std::to_string(row) + ", column '" + column +
                     "': not a number: '" + s + "'");
  }
  return v;
}

long parse_int(const std::string& s, const std::string& path, std::size_t row,
               const std::string& column) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError(path + ": row " + std::to_string(row) + ", column '" + column +
                     "': not an integer: '" + s + "'");
  }
  return v;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

void expect_header(const std::string& path, std::ifstream& in, const std::string& expected) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError(path + ": empty file, expected header");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != expected) {
    throw ParseError(path + ": bad header '" + header + "', expected '" + expected + "'");
  }
}

}  // namespace

geo::SpatialDataset load_rates_csv(const std::string& path) {
  auto in = open_input(path);
  expect_header(path, in, "lat_deg,lon_deg,rate_mm_per_yr");
  geo::SpatialDataset d;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_fields(line);
    if (f.size() != 3) {
      throw ParseError(path + ": row " + std::to_string(row) + ": expected 3 fields, got " +
                       std::to_string(f.size()));
    }
    const double lat = parse_double(f[0], path, row, "lat_deg");
    const double lon = parse_double(f[1], path, row, "lon_deg");
    const double rate = parse_double(f[2], path, row, "rate_mm_per_yr");
    geo::Location loc(lat, lon);
    for (std::size_t i = 0; i < d.locations.size(); ++i) {
      if (d.locations[i] == loc) {
        throw DuplicateLocation(path + ": row " + std::to_string(row) +
                                " duplicates coordinates of an earlier row");
      }
    }
    d.locations.push_back(loc);
    d.values.push_back(rate);
  }
  if (d.locations.empty()) throw ParseError(path + ": no data rows");
  return d;
}

void save_rates_csv(const std::string& path, const geo::SpatialDataset& d) {
  auto out = open_output(path);
  out << "lat_deg,lon_deg,rate_mm_per_yr\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << format_double(d.locations[i].lat()) << ',' << format_double(d.locations[i].lon())
        << ',' << format_double(d.values[i]) << '\n';
  }
}

StationLoadResult load_station_csv(const std::string& path, int first_year, int last_year) {
  auto in = open_input(path);
  expect_header(path, in, "station_id,lat_deg,lon_deg,year,level_mm");

  struct Raw {
    geo::Location location;
    std::vector<std::pair<int, double>> series;
  };
  std::map<std::string, Raw> by_station;
  std::vector<std::string> order;

  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_fields(line);
    if (f.size() != 5) {
      throw ParseError(path + ": row " + std::to_string(row) + ": expected 5 fields, got " +
                       std::to_string(f.size()));
    }
    const std::string& id = f[0];
    const double lat = parse_double(f[1], path, row, "lat_deg");
    const double lon = parse_double(f[2], path, row, "lon_deg");
    const int year = static_cast<int>(parse_int(f[3], path, row, "year"));
    const double level = parse_double(f[4], path, row, "level_mm");
    auto it = by_station.find(id);
    if (it == by_station.end()) {
      it = by_station.emplace(id, Raw{geo::Location(lat, lon), {}}).first;
      order.push_back(id);
    }
    it->second.series.emplace_back(year, level);
  }

  StationLoadResult result;
  for (const auto& id : order) {
    auto& raw = by_station.at(id);
    std::sort(raw.series.begin(), raw.series.end());
    const int lo = raw.series.front().first;
    const int hi = raw.series.back().first;
    if (lo > first_year || hi < last_year) {
      ++result.n_dropped;
      continue;
    }
    result.stations.push_back(geo::StationRecord{id, raw.location, std::move(raw.series)});
  }
  return result;
}

void save_predictions_csv(const std::string& path, const std::vector<PredictionRow>& rows) {
  auto out = open_output(path);
  out << "lat_deg,lon_deg,pred_mean,pred_sd\n";
  for (const auto& r : rows) {
    out << format_double(r.location.lat()) << ',' << format_double(r.location.lon()) << ','
        << format_double(r.mean) << ',' << format_double(r.sd) << '\n';
  }
}

std::vector<PredictionRow> load_predictions_csv(const std::string& path) {
  auto in = open_input(path);
  expect_header(path, in, "lat_deg,lon_deg,pred_mean,pred_sd");
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_fields(line);
    if (f.size() != 4) {
      throw ParseError(path + ": row " + std::to_string(row) + ": expected 4 fields, got " +
                       std::to_string(f.size()));
    }
    rows.push_back(PredictionRow{
        geo::Location(parse_double(f[0], path, row, "lat_deg"),
                      parse_double(f[1], path, row, "lon_deg")),
        parse_double(f[2], path, row, "pred_mean"), parse_double(f[3], path, row, "pred_sd")});
  }
  return rows;
}

void save_cls_csv(const std::string& path, const std::vector<ClsRow>& rows) {
  auto out = open_output(path);
  out << "lat_deg,lon_deg,s11,s12,s22\n";
  for (const auto& r : rows) {
    out << format_double(r.location.lat()) << ',' << format_double(r.location.lon()) << ','
        << format_double(r.s11) << ',' << format_double(r.s12) << ',' << format_double(r.s22)
        << '\n';
  }
}

void save_region_tags_csv(const std::string& path, const std::vector<geo::Location>& locs,
                          const std::vector<int>& tags) {
  if (locs.size() != tags.size()) throw Error("region tags length mismatch");
  auto out = open_output(path);
  out << "lat_deg,lon_deg,region\n";
  for (std::size_t i = 0; i < locs.size(); ++i) {
    out << format_double(locs[i].lat()) << ',' << format_double(locs[i].lon()) << ','
        << tags[i] << '\n';
  }
}

std::vector<std::pair<geo::Location, int>> load_region_tags_csv(const std::string& path) {
  auto in = open_input(path);
  expect_header(path, in, "lat_deg,lon_deg,region");
  std::vector<std::pair<geo::Location, int>> rows;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_fields(line);
    if (f.size() != 3) {
      throw ParseError(path + ": row " + std::to_string(row) + ": expected 3 fields");
    }
    rows.emplace_back(geo::Location(parse_double(f[0], path, row, "lat_deg"),
                                    parse_double(f[1], path, row, "lon_deg")),
                      static_cast<int>(parse_int(f[2], path, row, "region")));
  }
  return rows;
}

}  // namespace geokrig::io
