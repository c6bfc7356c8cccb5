#ifndef PROM_LOSS_HPP
#define PROM_LOSS_HPP

#include "prom/grid.hpp"

namespace prom {

// Reconstruction-quality criterion with an analytic gradient, so that task
// losses (e.g. a frozen segmentation network acting as a proxy) can be
// plugged into the optimizer without this library shipping one.
class ReconstructionLoss {
 public:
  virtual ~ReconstructionLoss() = default;
  virtual double value(const RealGrid& reconstruction, const RealGrid& target) const = 0;
  virtual RealGrid gradient(const RealGrid& reconstruction, const RealGrid& target) const = 0;
};

// (1/D) * sum((recon_i - target_i)^2)
double loss_mse(const RealGrid& reconstruction, const RealGrid& target);

// elementwise 2 * (recon_i - target_i) / D
RealGrid loss_mse_grad(const RealGrid& reconstruction, const RealGrid& target);

class MseLoss final : public ReconstructionLoss {
 public:
  double value(const RealGrid& r, const RealGrid& t) const override {
    return loss_mse(r, t);
  }
  RealGrid gradient(const RealGrid& r, const RealGrid& t) const override {
    return loss_mse_grad(r, t);
  }
};

}  // namespace prom

#endif  // PROM_LOSS_HPP
