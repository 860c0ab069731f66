#include "adenoise/parameters.hpp"

#include <algorithm>
#include <cmath>

#include "adenoise/errors.hpp"

namespace adenoise {

ParameterSet::ParameterSet() {
  for (std::size_t i = 0; i < kNumParams; ++i) values_[i] = kParamSpecs[i].default_value;
}

void ParameterSet::set(Param p, double value) { set(static_cast<std::size_t>(p), value); }

void ParameterSet::set(std::size_t i, double value) {
  if (i >= kNumParams) throw InvalidArgument("ParameterSet::set: index out of range");
  if (!std::isfinite(value)) throw InvalidArgument("ParameterSet::set: non-finite value");
  const auto& s = kParamSpecs[i];
  if (s.integer) value = std::round(value);
  values_[i] = std::clamp(value, s.min, s.max);
}

Eigen::VectorXd ParameterSet::normalized() const {
  Eigen::VectorXd unit(kNumParams);
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto& s = kParamSpecs[i];
    unit[Eigen::Index(i)] = (values_[i] - s.min) / (s.max - s.min);
  }
  return unit;
}

ParameterSet ParameterSet::from_normalized(const Eigen::Ref<const Eigen::VectorXd>& unit) {
  if (unit.size() != Eigen::Index(kNumParams)) throw InvalidArgument("from_normalized: expected 6 coordinates");
  ParameterSet p;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto& s = kParamSpecs[i];
    p.set(i, s.min + std::clamp(unit[Eigen::Index(i)], 0.0, 1.0) * (s.max - s.min));
  }
  return p;
}

bool ParameterSet::in_bounds() const {
  for (std::size_t i = 0; i < kNumParams; ++i)
    if (!(values_[i] >= kParamSpecs[i].min && values_[i] <= kParamSpecs[i].max)) return false;
  return true;
}

}  // namespace adenoise
