#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include <Eigen/Dense>

namespace adenoise {

/// Indices of the suppressor's controllable parameters.
enum class Param : std::size_t {
  DdAlpha = 0,         ///< decision-directed smoothing weight
  NoiseBeta,           ///< noise-PSD recursive update rate
  VadThresholdDb,      ///< speech/noise energy threshold above the noise floor
  VadHangover,         ///< frames the speech state is held after the last detection
  OverEstimation,      ///< noise over-estimation (estimator bias)
  GainFloorDb,         ///< minimum suppression gain
};

inline constexpr std::size_t kNumParams = 6;

struct ParamSpec {
  std::string_view name;
  double min;
  double max;
  double step;
  double default_value;
  bool integer;
};

inline constexpr std::array<ParamSpec, kNumParams> kParamSpecs{{
    {"dd_alpha", 0.8, 0.999, 0.005, 0.98, false},
    {"noise_beta", 0.5, 0.999, 0.01, 0.95, false},
    {"vad_threshold_db", 1.0, 15.0, 0.5, 5.0, false},
    {"vad_hangover", 0.0, 20.0, 1.0, 8.0, true},
    {"over_estimation", 0.5, 3.0, 0.1, 1.0, false},
    {"gain_floor_db", -30.0, -5.0, 1.0, -18.0, false},
}};

constexpr const ParamSpec& spec_of(Param p) { return kParamSpecs[static_cast<std::size_t>(p)]; }

/// A point in the suppressor's bounded parameter space.
class ParameterSet {
 public:
  /// Defaults for every parameter.
  ParameterSet();

  double operator[](Param p) const { return values_[static_cast<std::size_t>(p)]; }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::array<double, kNumParams>& values() const { return values_; }

  /// Sets a value, clamped to the parameter's bounds (integer parameters are
  /// rounded to the nearest integer first).
  void set(Param p, double value);
  void set(std::size_t i, double value);

  /// Each parameter mapped to [0, 1] by its bounds.
  Eigen::VectorXd normalized() const;
  /// Inverse of normalized(); inputs outside [0, 1] are projected.
  static ParameterSet from_normalized(const Eigen::Ref<const Eigen::VectorXd>& unit);

  /// True when every value lies within bounds.
  bool in_bounds() const;

  bool operator==(const ParameterSet&) const = default;

 private:
  std::array<double, kNumParams> values_;
};

}  // namespace adenoise
