/// Fourier-collocation derivatives and filters on periodic grids (FFTW backed).
///
/// Odd-order derivatives drop the Nyquist mode so that the discrete operator
/// stays skew-adjoint. Callers are responsible for feeding band-limited or
/// smooth data; nothing here guards against aliasing.
#pragma once

#include <functional>

#include "bdns/grid.hpp"

namespace bdns {

ScalarField spectral_partial(const ScalarField& f, const PeriodicGrid& grid, int axis);
VectorField spectral_grad(const ScalarField& f, const PeriodicGrid& grid);
ScalarField spectral_div(const VectorField& v, const PeriodicGrid& grid);
ScalarField spectral_lap(const ScalarField& f, const PeriodicGrid& grid);

/// Multiply every Fourier mode by multiplier(k0, k1), with k the physical
/// wavenumbers 2 pi n / L (k1 = 0 in 1D).
ScalarField spectral_filter(const ScalarField& f, const PeriodicGrid& grid,
                            const std::function<double(double, double)>& multiplier);

/// Convolution with a periodic Gaussian of standard deviation sigma.
ScalarField gaussian_mollify(const ScalarField& f, const PeriodicGrid& grid, double sigma);

}  // namespace bdns
