#pragma once

#include <string>
#include <vector>

#include "sdot/cells.hpp"
#include "sdot/density.hpp"
#include "sdot/lloyd.hpp"

namespace sdot {

/// Trace CSV with the fixed header
/// n,loss,gradNorm,stepNorm,minCellMass,descentLHS,descentRHS,innerIterations.
void write_trace_csv(const SolverTrace& trace, const std::string& path);

/// Per-cell labels as a PGM raster (label + 1, zero-density cells 0).
void write_label_pgm(const GridDensity& d, const CellPartition& part,
                     const std::string& path);

/// Per-region stats as CSV: region,mass,barycenterX,barycenterY,secondMoment.
void write_region_csv(const CellPartition& part, const std::string& path);

/// Fig-style static render: per-cell colored rectangles from the labels,
/// points as dots with diameter proportional to region mass. 1-D grids are
/// drawn as a horizontal strip.
void render_svg(const GridDensity& d, const CellPartition& part,
                const PointConfiguration& y,
                const std::vector<double>& point_masses,
                const std::string& path);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace sdot
