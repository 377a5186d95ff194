#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace incad {

// Anomaly = positive class. Cells with a zero denominator are reported as 0
// and set `degenerate`.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double specificity = 0.0;
  double accuracy = 0.0;
  double f_measure = 0.0;
  double runtime_seconds = 0.0;
  double batch_fraction = 1.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  bool degenerate = false;
};

// Throws std::invalid_argument on empty or mismatched inputs.
Metrics compute_metrics(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);

}  // namespace incad
