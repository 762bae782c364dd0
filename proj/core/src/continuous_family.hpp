#pragma once

#include <functional>

#include "tilt/tilt_core.hpp"

namespace tilt::detail {

// Shared quadrature for families with a density on an interval.
class ContinuousFamily : public TiltingFamily {
 public:
  virtual double density(double x) const = 0;
  virtual double support_lower() const = 0;
  virtual double support_upper() const = 0;
  // True when the density is unbounded at support_lower().
  virtual bool singular_at_lower() const { return false; }

  double base_expectation(const std::function<double(double)>& f, const TailEvent& event,
                          double tilt) const override;
};

}  // namespace tilt::detail
