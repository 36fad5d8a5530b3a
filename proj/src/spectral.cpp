#include "bdns/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "bdns/errors.hpp"

namespace bdns {

namespace {

using Complex = std::complex<double>;

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// FFTW planning is not thread-safe; execution through the new-array
// interface is. Plans are created once per shape and live for the process.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(const PeriodicGrid& grid) {
  static std::map<std::tuple<int, int, int>, PlanPair> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  const auto key = std::make_tuple(grid.dim, grid.sizes[0], grid.sizes[1]);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  int n[2] = {grid.sizes[0], grid.sizes[1]};
  const int rank = grid.dim;
  const std::size_t real_len = grid.cell_count();
  const std::size_t cplx_len = (rank == 1) ? (n[0] / 2 + 1) : n[0] * (n[1] / 2 + 1);
  auto* r = fftw_alloc_real(real_len);
  auto* c = fftw_alloc_complex(cplx_len);
  PlanPair p;
  p.forward = fftw_plan_dft_r2c(rank, n, r, c, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.backward = fftw_plan_dft_c2r(rank, n, c, r, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(r);
  fftw_free(c);
  return cache.emplace(key, p).first->second;
}

std::size_t spectrum_size(const PeriodicGrid& grid) {
  return grid.dim == 1 ? grid.sizes[0] / 2 + 1 : grid.sizes[0] * (grid.sizes[1] / 2 + 1);
}

std::vector<Complex> forward(const ScalarField& f, const PeriodicGrid& grid) {
  if (f.size() != grid.cell_count()) throw ArgumentError("spectral: field does not match grid");
  std::vector<Complex> out(spectrum_size(grid));
  ScalarField in = f;
  fftw_execute_dft_r2c(plans_for(grid).forward, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

ScalarField inverse(std::vector<Complex> spec, const PeriodicGrid& grid) {
  ScalarField out(grid.cell_count());
  fftw_execute_dft_c2r(plans_for(grid).backward, reinterpret_cast<fftw_complex*>(spec.data()), out.data());
  const double scale = 1.0 / static_cast<double>(grid.cell_count());
  for (double& v : out) v *= scale;
  return out;
}

struct Mode {
  int n;          // signed integer wavenumber
  bool nyquist;   // highest mode of an even-length axis
};

Mode full_axis_mode(int k, int size) {
  const int signed_k = (k <= size / 2) ? k : k - size;
  return {signed_k, size % 2 == 0 && k == size / 2};
}

Mode half_axis_mode(int k, int size) { return {k, size % 2 == 0 && k == size / 2}; }

// Visit every stored mode with (index, mode along axis 0, mode along axis 1).
template <typename Fn>
void for_each_mode(const PeriodicGrid& grid, Fn&& fn) {
  if (grid.dim == 1) {
    const int n0 = grid.sizes[0];
    for (int k = 0; k <= n0 / 2; ++k) fn(static_cast<std::size_t>(k), half_axis_mode(k, n0), Mode{0, false});
    return;
  }
  const int n0 = grid.sizes[0], n1 = grid.sizes[1], h1 = n1 / 2 + 1;
  for (int k0 = 0; k0 < n0; ++k0)
    for (int k1 = 0; k1 < h1; ++k1)
      fn(static_cast<std::size_t>(k0) * h1 + k1, full_axis_mode(k0, n0), half_axis_mode(k1, n1));
}

}  // namespace

ScalarField spectral_partial(const ScalarField& f, const PeriodicGrid& grid, int axis) {
  if (axis < 0 || axis >= grid.dim) throw ArgumentError("spectral_partial: axis out of range");
  auto spec = forward(f, grid);
  const double two_pi_over_l = 2.0 * std::numbers::pi / grid.lengths[axis];
  for_each_mode(grid, [&](std::size_t i, Mode m0, Mode m1) {
    const Mode m = axis == 0 ? m0 : m1;
    if (m.nyquist)
      spec[i] = 0.0;
    else
      spec[i] *= Complex(0.0, two_pi_over_l * m.n);
  });
  return inverse(std::move(spec), grid);
}

VectorField spectral_grad(const ScalarField& f, const PeriodicGrid& grid) {
  VectorField g(grid.dim);
  for (int a = 0; a < grid.dim; ++a) g[a] = spectral_partial(f, grid, a);
  return g;
}

ScalarField spectral_div(const VectorField& v, const PeriodicGrid& grid) {
  if (static_cast<int>(v.size()) != grid.dim) throw ArgumentError("spectral_div: component count mismatch");
  ScalarField out = make_scalar(grid);
  for (int a = 0; a < grid.dim; ++a) {
    const ScalarField d = spectral_partial(v[a], grid, a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  }
  return out;
}

ScalarField spectral_filter(const ScalarField& f, const PeriodicGrid& grid,
                            const std::function<double(double, double)>& multiplier) {
  auto spec = forward(f, grid);
  const double c0 = 2.0 * std::numbers::pi / grid.lengths[0];
  const double c1 = grid.dim == 2 ? 2.0 * std::numbers::pi / grid.lengths[1] : 0.0;
  for_each_mode(grid, [&](std::size_t i, Mode m0, Mode m1) { spec[i] *= multiplier(c0 * m0.n, c1 * m1.n); });
  return inverse(std::move(spec), grid);
}

ScalarField spectral_lap(const ScalarField& f, const PeriodicGrid& grid) {
  return spectral_filter(f, grid, [](double k0, double k1) { return -(k0 * k0 + k1 * k1); });
}

ScalarField gaussian_mollify(const ScalarField& f, const PeriodicGrid& grid, double sigma) {
  if (!(sigma >= 0.0)) throw ArgumentError("gaussian_mollify: sigma must be >= 0");
  const double s2 = sigma * sigma;
  return spectral_filter(f, grid, [s2](double k0, double k1) { return std::exp(-0.5 * s2 * (k0 * k0 + k1 * k1)); });
}

}  // namespace bdns
