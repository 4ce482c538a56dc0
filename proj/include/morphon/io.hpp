#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "morphon/driver.hpp"
#include "morphon/mesh.hpp"

namespace morphon {

// CSV with header
//   iter,objective,volume_fraction,gradient_kind,fine_solve,cum_wall_time_s
// one row per iteration, reals in fixed notation with 9 decimals. The
// objective is "nan" on synthetic-gradient rows (no fine solve).
void export_history(const RunHistory& history, const std::string& path);

enum class DensityFormat { raw, vtk };

DensityFormat parse_density_format(const std::string& name);

// raw: int32 nelx, int32 nely, int32 nelz, then nelx*nely*nelz float64
//      densities in element order (x fastest); all little-endian.
// vtk: legacy ASCII STRUCTURED_POINTS, DIMENSIONS = node counts,
//      SPACING = element size, densities as CELL_DATA scalars "density".
void export_density(std::span<const double> z, const StructuredGrid& grid, const std::string& path,
                    DensityFormat format);
void export_density(std::span<const double> z, const StructuredGrid& grid, const std::string& path,
                    const std::string& format);

struct RawDensity {
  std::array<int, 3> dims{};
  std::vector<double> values;
};

RawDensity load_density_raw(const std::string& path);

// JSON document with the resolved config, solver criterion, schedule and
// run counters; enough to reproduce the run.
std::string metadata_json(const RunConfig& cfg, const RunHistory& history);
void write_metadata(const RunConfig& cfg, const RunHistory& history, const std::string& path);

// Writes history.csv, density.raw, density.vtk and metadata.json into dir.
void write_run_outputs(const RunConfig& cfg, const RunHistory& history, const std::string& dir);

}  // namespace morphon
