#include "reveal/scene.hpp"

#include <fftw3.h>
#include <fmt/format.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <memory>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "reveal/error.hpp"
#include "reveal/rng.hpp"

namespace reveal {

using nlohmann::json;

void Transmitter::validate() const {
  if (!(reference_distance_m > 0.0)) throw std::invalid_argument("reference distance must be > 0");
  if (!(path_loss_exponent >= 1.5 && path_loss_exponent <= 6.0)) {
    throw std::invalid_argument("path loss exponent outside [1.5, 6]");
  }
  if (!std::isfinite(tx_power_dbm) || !std::isfinite(location.x) || !std::isfinite(location.y)) {
    throw std::invalid_argument("transmitter parameters must be finite");
  }
}

double log_distance_rssi(const Transmitter& tx, double distance_m) {
  return tx.tx_power_dbm -
         10.0 * tx.path_loss_exponent * std::log10(distance_m / tx.reference_distance_m);
}

PathLossRssi path_loss_rssi(const Transmitter& tx, const Point& p, double min_distance_m) {
  const double d = distance(tx.location, p);
  if (d == 0.0) throw NumericError("transmitter singularity");
  if (d < min_distance_m) return {log_distance_rssi(tx, min_distance_m), true};
  return {log_distance_rssi(tx, d), false};
}

namespace {

// Owns an fftw_complex buffer.
struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (data == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

void fft2_forward(FftwBuffer& buf, std::size_t m, std::size_t n) {
  // FFTW_ESTIMATE keeps the plan (and therefore the output) deterministic.
  fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(m), static_cast<int>(n), buf.data, buf.data,
                                    FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

constexpr std::size_t kMaxEmbeddingGrowth = 16;
constexpr std::size_t kMaxCholeskyCells = 4096;

std::vector<double> circulant_field(const Grid& grid, double sigma, double corr, Rng& rng) {
  const std::size_t rows = grid.rows();
  const std::size_t cols = grid.cols();
  const double py = grid.pitch_y();
  const double px = grid.pitch_x();

  std::size_t m = 2 * rows;
  std::size_t n = 2 * cols;
  for (;;) {
    FftwBuffer eig(m * n);
    for (std::size_t a = 0; a < m; ++a) {
      const double dy = static_cast<double>(std::min(a, m - a)) * py;
      for (std::size_t b = 0; b < n; ++b) {
        const double dx = static_cast<double>(std::min(b, n - b)) * px;
        eig.data[a * n + b][0] = sigma * sigma * std::exp(-std::hypot(dx, dy) / corr);
        eig.data[a * n + b][1] = 0.0;
      }
    }
    fft2_forward(eig, m, n);

    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t k = 0; k < m * n; ++k) {
      lo = std::min(lo, eig.data[k][0]);
      hi = std::max(hi, eig.data[k][0]);
    }
    if (lo < -1e-10 * hi) {
      if (m >= kMaxEmbeddingGrowth * 2 * rows) {
        throw NumericError("circulant embedding is not non-negative definite");
      }
      m *= 2;
      n *= 2;
      continue;
    }

    const double scale = 1.0 / static_cast<double>(m * n);
    std::normal_distribution<double> normal(0.0, 1.0);
    FftwBuffer work(m * n);
    for (std::size_t k = 0; k < m * n; ++k) {
      const double amp = std::sqrt(std::max(eig.data[k][0], 0.0) * scale);
      const double re = normal(rng);
      const double im = normal(rng);
      work.data[k][0] = amp * re;
      work.data[k][1] = amp * im;
    }
    fft2_forward(work, m, n);

    std::vector<double> values(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) values[i * cols + j] = work.data[i * n + j][0];
    }
    return values;
  }
}

std::vector<double> cholesky_field(const Grid& grid, double sigma, double corr, Rng& rng) {
  const std::size_t cells = grid.cell_count();
  if (cells > kMaxCholeskyCells) {
    throw std::invalid_argument("cholesky shadow synthesis limited to 4096 cells");
  }
  const auto centers = grid.cell_centers();
  Eigen::MatrixXd cov(cells, cells);
  for (std::size_t a = 0; a < cells; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      const double c = sigma * sigma * std::exp(-distance(centers[a], centers[b]) / corr);
      cov(a, b) = c;
      cov(b, a) = c;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericError("shadow covariance is not positive definite");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(cells);
  for (std::size_t k = 0; k < cells; ++k) z[k] = normal(rng);
  const Eigen::VectorXd f = llt.matrixL() * z;
  return {f.data(), f.data() + f.size()};
}

}  // namespace

ShadowField gen_shadow_field(const Grid& grid, double sigma_db, double corr_len_m,
                             std::uint64_t seed, ShadowMethod method) {
  if (!(corr_len_m > 0.0)) throw std::invalid_argument("correlation length must be > 0");
  if (!(sigma_db >= 0.0)) throw std::invalid_argument("shadowing sigma must be >= 0");

  ShadowField field{grid, std::vector<double>(grid.cell_count(), 0.0), sigma_db, corr_len_m, seed,
                    method};
  if (sigma_db == 0.0) return field;

  Rng rng(seed);
  field.values = method == ShadowMethod::circulant ? circulant_field(grid, sigma_db, corr_len_m, rng)
                                                   : cholesky_field(grid, sigma_db, corr_len_m, rng);
  return field;
}

ShadowField constant_shadow(const Grid& grid, double value_db) {
  return {grid, std::vector<double>(grid.cell_count(), value_db), 0.0, 1.0, 0};
}

Scene build_scene(const Grid& grid, const Transmitter& tx, const ShadowField& shadow,
                  double min_distance_m) {
  tx.validate();
  if (!(shadow.grid == grid) || shadow.values.size() != grid.cell_count()) {
    throw std::invalid_argument("shadow field grid does not match scene grid");
  }
  const double d_min = min_distance_m > 0.0 ? min_distance_m : grid.pitch();
  Scene scene{grid, tx, shadow, std::vector<double>(grid.cell_count()), d_min};
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      const auto k = grid.flat_index(i, j);
      scene.truth[k] = path_loss_rssi(tx, grid.cell_center(i, j), d_min).rssi_dbm + shadow.values[k];
    }
  }
  return scene;
}

double Scene::interpolate(const Point& p) const { return bilinear(grid, truth, p); }

void ObservationSet::validate() const {
  if (points.size() != rssi_dbm.size()) throw std::invalid_argument("points/rssi length mismatch");
  if (points.empty()) throw std::invalid_argument("observation set is empty");
  std::set<std::pair<double, double>> seen;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(rssi_dbm[k])) {
      throw std::invalid_argument("non-finite observation at index " + std::to_string(k));
    }
    if (!seen.emplace(p.x, p.y).second) {
      throw std::invalid_argument("duplicate observation point at index " + std::to_string(k));
    }
  }
}

ObservationSet observe(const Scene& scene, const std::vector<Point>& points, double noise_sigma_db,
                       std::uint64_t seed, std::string channel) {
  if (!(noise_sigma_db >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  std::vector<std::size_t> outside;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!scene.grid.contains(points[k])) outside.push_back(k);
  }
  if (!outside.empty()) {
    std::string list;
    for (auto k : outside) list += (list.empty() ? "" : ", ") + std::to_string(k);
    throw std::invalid_argument("observation points outside the grid extent: " + list);
  }

  ObservationSet obs{points, std::vector<double>(points.size()), std::move(channel)};
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < points.size(); ++k) {
    obs.rssi_dbm[k] = scene.interpolate(points[k]);
    if (noise_sigma_db > 0.0) obs.rssi_dbm[k] += noise_sigma_db * normal(rng);
  }
  obs.validate();
  return obs;
}

std::vector<double> truth_laplacian(const Scene& scene) {
  const auto& g = scene.grid;
  const double px2 = g.pitch_x() * g.pitch_x();
  const double py2 = g.pitch_y() * g.pitch_y();
  std::vector<double> lap(g.cell_count(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 1; i + 1 < g.rows(); ++i) {
    for (std::size_t j = 1; j + 1 < g.cols(); ++j) {
      const double c = scene.truth_at(i, j);
      lap[g.flat_index(i, j)] =
          (scene.truth_at(i, j + 1) + scene.truth_at(i, j - 1) - 2.0 * c) / px2 +
          (scene.truth_at(i + 1, j) + scene.truth_at(i - 1, j) - 2.0 * c) / py2;
    }
  }
  return lap;
}

// ---------------------------------------------------------------------------
// Scene files

namespace {

constexpr int kSceneVersion = 1;

}  // namespace

json to_json(const Grid& g) {
  return {{"x_min", g.x_min()}, {"x_max", g.x_max()}, {"y_min", g.y_min()},
          {"y_max", g.y_max()}, {"rows", g.rows()},   {"cols", g.cols()}};
}

Grid grid_from_json(const json& j) {
  return Grid(j.at("x_min").get<double>(), j.at("x_max").get<double>(),
              j.at("y_min").get<double>(), j.at("y_max").get<double>(),
              j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
}

json to_json(const Transmitter& tx) {
  return {{"x_m", tx.location.x},
          {"y_m", tx.location.y},
          {"tx_power_dbm", tx.tx_power_dbm},
          {"path_loss_exponent", tx.path_loss_exponent},
          {"reference_distance_m", tx.reference_distance_m}};
}

Transmitter transmitter_from_json(const json& t) {
  return {{t.at("x_m").get<double>(), t.at("y_m").get<double>()},
          t.at("tx_power_dbm").get<double>(),
          t.at("path_loss_exponent").get<double>(),
          t.at("reference_distance_m").get<double>()};
}

void write_scene(const Scene& scene, const std::filesystem::path& json_path,
                 const std::filesystem::path& csv_path) {
  const bool constant = scene.shadow.sigma_db == 0.0 && !scene.shadow.values.empty() &&
                        std::all_of(scene.shadow.values.begin(), scene.shadow.values.end(),
                                    [&](double v) { return v == scene.shadow.values.front(); });
  json shadow;
  if (constant) {
    shadow = {{"kind", "constant"}, {"value_db", scene.shadow.values.front()}};
  } else {
    shadow = {{"kind", "gaussian"},
              {"sigma_db", scene.shadow.sigma_db},
              {"correlation_length_m", scene.shadow.correlation_length_m},
              {"seed", scene.shadow.seed},
              {"method", scene.shadow.method == ShadowMethod::circulant ? "circulant" : "cholesky"}};
  }
  json header = {
      {"format", "reveal-scene"},
      {"version", kSceneVersion},
      {"grid", to_json(scene.grid)},
      {"transmitter", to_json(scene.tx)},
      {"shadow", shadow},
      {"min_distance_m", scene.min_distance_m},
      {"truth_csv", csv_path.filename().string()},
  };

  std::ofstream js(json_path, std::ios::binary);
  if (!js) throw IoError("cannot write " + json_path.string());
  js << header.dump(2) << '\n';

  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  csv << "i,j,rssi_dbm\n";
  for (std::size_t i = 0; i < scene.grid.rows(); ++i) {
    for (std::size_t j = 0; j < scene.grid.cols(); ++j) {
      csv << fmt::format("{},{},{}\n", i, j, scene.truth_at(i, j));
    }
  }
  if (!js || !csv) throw IoError("failed writing scene files");
}

Scene read_scene(const std::filesystem::path& json_path) {
  std::ifstream js(json_path);
  if (!js) throw IoError("cannot read " + json_path.string());
  json header;
  try {
    header = json::parse(js);
  } catch (const json::exception& e) {
    throw IoError("malformed scene header " + json_path.string() + ": " + e.what());
  }

  try {
    if (header.at("format") != "reveal-scene") throw IoError("not a scene header");
    if (header.at("version").get<int>() != kSceneVersion) throw IoError("unsupported scene version");
    const Grid grid = grid_from_json(header.at("grid"));
    const Transmitter tx = transmitter_from_json(header.at("transmitter"));
    const auto& s = header.at("shadow");
    ShadowField shadow = s.at("kind") == "constant"
                             ? constant_shadow(grid, s.at("value_db").get<double>())
                             : gen_shadow_field(grid, s.at("sigma_db").get<double>(),
                                                s.at("correlation_length_m").get<double>(),
                                                s.at("seed").get<std::uint64_t>(),
                                                s.at("method") == "cholesky" ? ShadowMethod::cholesky
                                                                             : ShadowMethod::circulant);
    Scene scene = build_scene(grid, tx, shadow, header.at("min_distance_m").get<double>());

    const auto csv_path = json_path.parent_path() / header.at("truth_csv").get<std::string>();
    std::ifstream csv(csv_path);
    if (!csv) throw IoError("cannot read " + csv_path.string());
    std::string line;
    std::getline(csv, line);
    if (line != "i,j,rssi_dbm") throw IoError("unexpected truth CSV header in " + csv_path.string());
    std::vector<bool> seen(grid.cell_count(), false);
    std::size_t line_no = 1;
    while (std::getline(csv, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream row(line);
      std::size_t i = 0;
      std::size_t j = 0;
      double v = 0.0;
      char c1 = 0;
      char c2 = 0;
      if (!(row >> i >> c1 >> j >> c2 >> v) || c1 != ',' || c2 != ',' || i >= grid.rows() ||
          j >= grid.cols()) {
        throw IoError(fmt::format("{}:{}: malformed truth row", csv_path.string(), line_no));
      }
      scene.truth[grid.flat_index(i, j)] = v;
      seen[grid.flat_index(i, j)] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw IoError("truth CSV does not cover every cell: " + csv_path.string());
    }
    return scene;
  } catch (const json::exception& e) {
    throw IoError("invalid scene header " + json_path.string() + ": " + e.what());
  }
}

}  // namespace reveal

namespace reveal {

void write_observations(const ObservationSet& obs, const std::filesystem::path& path) {
  obs.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "x_m,y_m,rssi_dbm,channel\n";
  for (std::size_t k = 0; k < obs.size(); ++k) {
    out << fmt::format("{},{},{},{}\n", obs.points[k].x, obs.points[k].y, obs.rssi_dbm[k], obs.channel);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

ObservationSet read_observations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "x_m,y_m,rssi_dbm,channel") throw IoError("unexpected observations header in " + path.string());
  ObservationSet obs;
  std::size_t line_no = 1;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1) {
      fields.push_back(line.substr(start, pos - start));
    }
    fields.push_back(line.substr(start));
    double x = 0.0;
    double y = 0.0;
    double v = 0.0;
    try {
      if (fields.size() != 4) throw std::invalid_argument("field count");
      std::size_t used = 0;
      x = std::stod(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("x");
      y = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("y");
      v = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("rssi");
    } catch (const std::exception&) {
      throw IoError(fmt::format("{}:{}: malformed observation row", path.string(), line_no));
    }
    if (first) {
      obs.channel = fields[3];
      first = false;
    } else if (fields[3] != obs.channel) {
      throw IoError(fmt::format("{}:{}: mixed channels in one file", path.string(), line_no));
    }
    obs.points.push_back({x, y});
    obs.rssi_dbm.push_back(v);
  }
  try {
    obs.validate();
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return obs;
}

}  // namespace reveal
