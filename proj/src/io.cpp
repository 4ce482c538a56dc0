#include "morphon/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include "json.hpp"
#include <stdexcept>

#include "morphon/config.hpp"

namespace morphon {

static_assert(std::endian::native == std::endian::little, "raw density I/O assumes a little-endian host");

namespace {

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

std::string fixed9(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", x);
  return buf;
}

}  // namespace

void export_history(const RunHistory& history, const std::string& path) {
  auto os = open_out(path);
  os << "iter,objective,volume_fraction,gradient_kind,fine_solve,cum_wall_time_s\n";
  double cum = 0.0;
  for (const auto& r : history.records) {
    cum += r.wall_time;
    os << r.iteration << ',' << fixed9(r.objective) << ',' << fixed9(r.volume_fraction) << ','
       << to_string(r.gradient_kind) << ',' << (r.fine_solve_performed ? 1 : 0) << ',' << fixed9(cum)
       << '\n';
  }
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

DensityFormat parse_density_format(const std::string& name) {
  if (name == "raw") return DensityFormat::raw;
  if (name == "vtk") return DensityFormat::vtk;
  throw std::invalid_argument("unknown density format '" + name + "' (expected raw | vtk)");
}

void export_density(std::span<const double> z, const StructuredGrid& grid, const std::string& path,
                    const std::string& format) {
  export_density(z, grid, path, parse_density_format(format));
}

void export_density(std::span<const double> z, const StructuredGrid& grid, const std::string& path,
                    DensityFormat format) {
  if (Index(z.size()) != grid.num_elements())
    throw std::invalid_argument("export_density: density length does not match the grid");
  if (format == DensityFormat::raw) {
    auto os = open_out(path, std::ios::binary);
    for (int d : grid.dims()) {
      const std::int32_t v = d;
      os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    os.write(reinterpret_cast<const char*>(z.data()), std::streamsize(z.size_bytes()));
    if (!os) throw std::runtime_error("write failed for '" + path + "'");
    return;
  }
  auto os = open_out(path);
  const auto& h = grid.element_size();
  char buf[128];
  os << "# vtk DataFile Version 3.0\n"
     << "morphon density\n"
     << "ASCII\n"
     << "DATASET STRUCTURED_POINTS\n"
     << "DIMENSIONS " << grid.nelx() + 1 << ' ' << grid.nely() + 1 << ' ' << grid.nelz() + 1 << '\n'
     << "ORIGIN 0 0 0\n";
  std::snprintf(buf, sizeof buf, "SPACING %.9g %.9g %.9g\n", h[0], h[1], h[2]);
  os << buf << "CELL_DATA " << grid.num_elements() << '\n'
     << "SCALARS density double 1\n"
     << "LOOKUP_TABLE default\n";
  for (double v : z) os << fixed9(v) << '\n';
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

RawDensity load_density_raw(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  RawDensity out;
  for (int& d : out.dims) {
    std::int32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("raw density: truncated header");
    if (v < 1) throw std::runtime_error("raw density: invalid dimension");
    d = v;
  }
  out.values.resize(std::size_t(out.dims[0]) * out.dims[1] * out.dims[2]);
  if (!is.read(reinterpret_cast<char*>(out.values.data()), std::streamsize(out.values.size() * sizeof(double))))
    throw std::runtime_error("raw density: truncated payload");
  if (is.peek() != std::char_traits<char>::eof()) throw std::runtime_error("raw density: trailing bytes");
  return out;
}

std::string metadata_json(const RunConfig& cfg, const RunHistory& history) {
  using nlohmann::json;
  json config = json::object();
  for (const auto& [k, v] : config_entries(cfg)) config[k] = v;

  json solves = json::array();
  for (const auto& r : history.records)
    if (r.fine_solve_performed)
      solves.push_back({{"iter", r.iteration},
                        {"pcg_iterations", r.fine_stats.iterations},
                        {"relative_residual", r.fine_stats.final_relative_residual}});

  json doc;
  doc["config"] = config;
  doc["config_text"] = format_config(cfg);
  doc["mode"] = to_string(cfg.mode);
  doc["seed"] = cfg.seed;
  doc["solver"] = {{"method", "jacobi-preconditioned conjugate gradients"},
                   {"stopping_criterion", "||f - K u||_2 / ||f||_2 <= tol (recursive residual)"},
                   {"tol", cfg.solver_tol},
                   {"max_iters", cfg.max_solver_iters == 0 ? json("10 * system size") : json(cfg.max_solver_iters)},
                   {"warm_start", "previous exact iterate's displacement"}};
  if (cfg.mode == Mode::onsg) {
    doc["schedule"] = {{"rule", "exact iff k < ni, or k = K-1, or (k - ni) mod nf = nf - 1"},
                       {"exact_iterations", exact_iterations(cfg.warmup, cfg.interval, cfg.iterations)},
                       {"session_steps", session_steps(cfg)}};
  } else {
    doc["schedule"] = {{"rule", "every iteration exact"}};
  }
  doc["counts"] = {{"iterations", history.records.size()},
                   {"fine_solves", history.fine_solves},
                   {"coarse_solves", history.coarse_solves},
                   {"training_sessions", history.training_sessions}};
  doc["surrogate_parameters"] = history.surrogate_parameters;
  const double fo = history.final_objective();
  doc["final_objective"] = std::isnan(fo) ? json(nullptr) : json(fo);
  doc["total_wall_time_s"] = history.total_wall_time;
  doc["fine_solve_stats"] = solves;
  return doc.dump(2) + "\n";
}

void write_metadata(const RunConfig& cfg, const RunHistory& history, const std::string& path) {
  auto os = open_out(path);
  os << metadata_json(cfg, history);
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

void write_run_outputs(const RunConfig& cfg, const RunHistory& history, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  const fs::path base(dir);
  const auto grid = cfg.grid();
  export_history(history, (base / "history.csv").string());
  export_density(history.final_design, grid, (base / "density.raw").string(), DensityFormat::raw);
  export_density(history.final_design, grid, (base / "density.vtk").string(), DensityFormat::vtk);
  write_metadata(cfg, history, (base / "metadata.json").string());
}

}  // namespace morphon
