#ifndef PROM_FOURIER_HPP
#define PROM_FOURIER_HPP

#include <span>
#include <vector>

#include "prom/grid.hpp"

namespace prom {

// Centered, unitary 2D Fourier transforms and the adjoints (vector-Jacobian
// products) of the zero-fill reconstruction chain.
//
// Conventions, fixed for the whole project:
//   * layout is row-major vectorized, index i = r * W + c;
//   * the DC coefficient sits at (floor(H/2), floor(W/2)) in k-space, and the
//     image-domain phase origin is the same center pixel (ifftshift before the
//     DFT, fftshift after, on both directions);
//   * unitary normalization, 1/sqrt(D) in each direction, so forward and
//     inverse are exact adjoints of each other and norms are preserved.

// Cyclic shift moving (0,0) to (row_shift, col_shift). Building block for the
// centered transforms; exposed for tests.
ComplexGrid circular_shift(const ComplexGrid& g, int row_shift, int col_shift);

// Image -> centered k-space. Rejects non-finite input.
ComplexGrid forward_transform(const ComplexGrid& image);

// Centered k-space -> image. Exact inverse of forward_transform.
ComplexGrid inverse_transform(const ComplexGrid& kspace);

// Elementwise product with a real mask in [0,1], length D.
ComplexGrid apply_mask(const ComplexGrid& kspace, std::span<const double> mask);

// Elementwise |z|.
RealGrid magnitude(const ComplexGrid& image);

// magnitude(inverse_transform(apply_mask(kspace, mask))): the zero-filling
// reconstruction used everywhere in this project.
RealGrid zero_fill_reconstruct(const ComplexGrid& kspace, std::span<const double> mask);

// d(scalar loss)/d(mask): per element Re(conj(kspace_i) * cotangent_i).
std::vector<double> apply_mask_vjp(const ComplexGrid& kspace, const ComplexGrid& cotangent);

// Adjoint of inverse_transform. With the symmetric centering above this is the
// forward transform evaluated on the cotangent (no finiteness validation).
ComplexGrid inverse_transform_vjp(const ComplexGrid& cotangent);

// d|z|/d(re,im) chained with a real cotangent. Below kMagnitudeEps the
// subgradient 0 is returned.
inline constexpr double kMagnitudeEps = 1e-12;
ComplexGrid magnitude_vjp(const ComplexGrid& image, const RealGrid& cotangent);

}  // namespace prom

#endif  // PROM_FOURIER_HPP
