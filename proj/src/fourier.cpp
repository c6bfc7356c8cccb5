#include "prom/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace prom {

namespace {

// FFTW plan cache. Plan creation is not thread-safe, execution via
// fftw_execute_dft on distinct arrays is. Plans are created once per
// (H, W, sign) with FFTW_ESTIMATE | FFTW_UNALIGNED so they can run on any
// caller-provided buffers, and kept for the process lifetime.
class PlanCache {
 public:
  fftw_plan get(int h, int w, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(h, w, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;

    std::size_t n = std::size_t(h) * std::size_t(w);
    fftw_complex* in = fftw_alloc_complex(n);
    fftw_complex* out = fftw_alloc_complex(n);
    fftw_plan plan =
        fftw_plan_dft_2d(h, w, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void run_dft(const ComplexGrid& in, ComplexGrid& out, int sign) {
  fftw_plan plan = plan_cache().get(in.shape.height, in.shape.width, sign);
  // std::complex<double> is layout-compatible with fftw_complex.
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data.data());
  fftw_execute_dft(plan, src, dst);
}

// ifftshift -> DFT(sign) -> fftshift, scaled by 1/sqrt(D).
ComplexGrid centered_dft(const ComplexGrid& g, int sign) {
  const int h = g.shape.height;
  const int w = g.shape.width;
  ComplexGrid shifted = circular_shift(g, h - h / 2, w - w / 2);  // ifftshift
  ComplexGrid transformed = ComplexGrid::zeros(g.shape);
  run_dft(shifted, transformed, sign);
  ComplexGrid out = circular_shift(transformed, h / 2, w / 2);  // fftshift
  const double scale = 1.0 / std::sqrt(double(g.shape.elements()));
  for (Complex& z : out.data) z *= scale;
  return out;
}

}  // namespace

ComplexGrid circular_shift(const ComplexGrid& g, int row_shift, int col_shift) {
  g.check_size();
  const int h = g.shape.height;
  const int w = g.shape.width;
  ComplexGrid out = ComplexGrid::zeros(g.shape);
  for (int r = 0; r < h; ++r) {
    const int rr = (r + row_shift) % h;
    for (int c = 0; c < w; ++c) {
      const int cc = (c + col_shift) % w;
      out.at(rr, cc) = g.at(r, c);
    }
  }
  return out;
}

ComplexGrid forward_transform(const ComplexGrid& image) {
  image.check_size();
  if (!image.all_finite()) {
    throw ValidationError("forward_transform: input contains non-finite samples");
  }
  return centered_dft(image, FFTW_FORWARD);
}

ComplexGrid inverse_transform(const ComplexGrid& kspace) {
  kspace.check_size();
  return centered_dft(kspace, FFTW_BACKWARD);
}

ComplexGrid apply_mask(const ComplexGrid& kspace, std::span<const double> mask) {
  kspace.check_size();
  if (std::int64_t(mask.size()) != kspace.shape.elements()) {
    throw ValidationError("apply_mask: mask length does not match grid");
  }
  ComplexGrid out = kspace;
  for (std::size_t i = 0; i < mask.size(); ++i) out.data[i] *= mask[i];
  return out;
}

RealGrid magnitude(const ComplexGrid& image) {
  image.check_size();
  RealGrid out = RealGrid::zeros(image.shape);
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    out.data[i] = std::abs(image.data[i]);
  }
  return out;
}

RealGrid zero_fill_reconstruct(const ComplexGrid& kspace, std::span<const double> mask) {
  return magnitude(inverse_transform(apply_mask(kspace, mask)));
}

std::vector<double> apply_mask_vjp(const ComplexGrid& kspace, const ComplexGrid& cotangent) {
  kspace.check_size();
  cotangent.check_size();
  if (kspace.shape != cotangent.shape) {
    throw ValidationError("apply_mask_vjp: shape mismatch");
  }
  std::vector<double> grad(kspace.data.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = (std::conj(kspace.data[i]) * cotangent.data[i]).real();
  }
  return grad;
}

ComplexGrid inverse_transform_vjp(const ComplexGrid& cotangent) {
  cotangent.check_size();
  return centered_dft(cotangent, FFTW_FORWARD);
}

ComplexGrid magnitude_vjp(const ComplexGrid& image, const RealGrid& cotangent) {
  image.check_size();
  cotangent.check_size();
  if (image.shape != cotangent.shape) {
    throw ValidationError("magnitude_vjp: shape mismatch");
  }
  ComplexGrid out = ComplexGrid::zeros(image.shape);
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    const double mag = std::abs(image.data[i]);
    if (mag < kMagnitudeEps) continue;  // subgradient 0 at the singular point
    const double scale = cotangent.data[i] / mag;
    out.data[i] = Complex(image.data[i].real() * scale, image.data[i].imag() * scale);
  }
  return out;
}

}  // namespace prom
