#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "reveal/scene.hpp"

namespace reveal::cli {

/// Runs one command line (without the program name) and returns the exit
/// code: 0 ok, 2 configuration error, 3 numeric divergence, 4 I/O error.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Local equirectangular projection about a reference latitude/longitude.
struct LocalProjection {
  double lat0_deg = 0.0;
  double lon0_deg = 0.0;

  Point project(double lat_deg, double lon_deg) const;
};

inline constexpr double kEarthRadiusM = 6371008.8;

struct GeoIngest {
  LocalProjection projection;  ///< centered on the mean latitude/longitude
  ObservationSet observations;
};

/// Reads `lat,lon,rssi_dbm[,channel]` rows and projects them about their
/// centroid. Malformed rows raise IoError with the line number; duplicate
/// coordinates raise IoError as well.
GeoIngest ingest_geo_csv(const std::filesystem::path& path);

}  // namespace reveal::cli
