#pragma once

#include <string>

#include "nfad/dataset.hpp"
#include "nfad/flows.hpp"
#include "nfad/matrix.hpp"

namespace nfad {

// Regular 2-D grid of cell centers: cell (ix, iy) is centered at
// (x0 + (ix + 0.5) dx, y0 + (iy + 0.5) dy). Coordinates are raw data
// coordinates; standardization happens inside the evaluation.
struct GridSpec {
  double x0 = -8.0, x1 = 8.0;
  double y0 = -8.0, y1 = 8.0;
  int nx = 200, ny = 200;

  void validate() const;
  double dx() const { return (x1 - x0) / nx; }
  double dy() const { return (y1 - y0) / ny; }
};

enum class GridSide {
  target,  // full model density in raw coordinates (standardization folded in)
  base,    // log N(z) of the inverse image: the latent-position part only
};

struct DensityGrid {
  GridSpec spec;
  Mat logp;  // ny rows (row 0 = lowest y band), nx columns
};

DensityGrid density_grid(const FlowStack& flow, const Standardizer& scaler,
                         const GridSpec& spec, GridSide side);

// One "x,y,logp" row per cell center.
void write_grid_csv(const std::string& path, const DensityGrid& grid);

// Plain-text grayscale image (P2), top row = highest y. Linear map of logp
// onto 0..255 over [vmax - 40, vmax]; lower values clamp to black. A flat
// grid renders all white.
void write_grid_pgm(const std::string& path, const DensityGrid& grid);

}  // namespace nfad
