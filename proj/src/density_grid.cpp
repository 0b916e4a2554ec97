#include <algorithm>
#include <cmath>
#include <fstream>

#include "nfad/density_grid.hpp"
#include "nfad/format.hpp"
#include "nfad/special.hpp"

namespace nfad {

void GridSpec::validate() const {
  require(nx >= 1 && ny >= 1, "grid: resolution must be >= 1");
  require(x1 > x0 && y1 > y0, "grid: bounds must be nonempty");
}

DensityGrid density_grid(const FlowStack& flow, const Standardizer& scaler,
                         const GridSpec& spec, GridSide side) {
  spec.validate();
  require(flow.dim() == 2, "density grid: flow must be 2-D");
  require(scaler.dim() == 2, "density grid: standardizer must be 2-D");

  const long cells = static_cast<long>(spec.nx) * spec.ny;
  Mat centers(cells, 2);
  for (int iy = 0; iy < spec.ny; ++iy)
    for (int ix = 0; ix < spec.nx; ++ix) {
      const long r = static_cast<long>(iy) * spec.nx + ix;
      centers(r, 0) = spec.x0 + (ix + 0.5) * spec.dx();
      centers(r, 1) = spec.y0 + (iy + 0.5) * spec.dy();
    }

  Mat std_pts = scaler.transform(centers);
  Vec vals;
  if (side == GridSide::target) {
    // density in raw coordinates: subtract the log scale of the affine map
    const double log_scale = scaler.std.array().log().sum();
    vals = flow.log_prob(std_pts).array() - log_scale;
  } else {
    Vec ld_inv;
    Mat Z = flow.eval_inverse(std_pts, ld_inv);
    vals = std_normal_logpdf_rows(Z);
  }

  DensityGrid grid;
  grid.spec = spec;
  grid.logp.resize(spec.ny, spec.nx);
  for (int iy = 0; iy < spec.ny; ++iy)
    for (int ix = 0; ix < spec.nx; ++ix)
      grid.logp(iy, ix) = vals(static_cast<long>(iy) * spec.nx + ix);
  return grid;
}

void write_grid_csv(const std::string& path, const DensityGrid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "x,y,logp\n";
  const GridSpec& s = grid.spec;
  for (int iy = 0; iy < s.ny; ++iy)
    for (int ix = 0; ix < s.nx; ++ix)
      out << g17(s.x0 + (ix + 0.5) * s.dx()) << ','
          << g17(s.y0 + (iy + 0.5) * s.dy()) << ',' << g17(grid.logp(iy, ix))
          << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_grid_pgm(const std::string& path, const DensityGrid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const double vmax = grid.logp.maxCoeff();
  const double lo = vmax - 40.0;
  out << "P2\n" << grid.spec.nx << ' ' << grid.spec.ny << "\n255\n";
  for (int iy = grid.spec.ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < grid.spec.nx; ++ix) {
      double t = (grid.logp(iy, ix) - lo) / (vmax - lo);
      t = std::clamp(t, 0.0, 1.0);
      out << static_cast<int>(std::lround(255.0 * t));
      out << (ix + 1 == grid.spec.nx ? '\n' : ' ');
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace nfad
