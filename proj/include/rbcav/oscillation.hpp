#pragma once

#include <span>

namespace rbcav::oscillation {

struct Analysis {
  bool settled = false;   // tail statistics stationary
  bool periodic = false;  // oscillation amplitude above the noise floor
  double mean = 0.0;
  double amplitude = 0.0;  // half peak-to-peak of the analyzed tail
  double frequency = 0.0;  // dominant frequency (cycles per time unit)
};

/// Dominant frequency of a uniformly sampled series by windowed DFT with
/// local refinement of the peak.
double dominant_frequency(std::span<const double> values, double dt);

/// Analyze the tail of an observable series: the first skip_fraction is
/// discarded as transient; periodicity and settledness are judged by
/// comparing the two halves of the tail.
Analysis analyze_series(std::span<const double> values, double dt, double skip_fraction = 0.5);

}  // namespace rbcav::oscillation
