#include "incad/metrics.hpp"

#include <stdexcept>

namespace incad {

Metrics compute_metrics(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("compute_metrics: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("compute_metrics: no points");

  Metrics m;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) ++m.tp;
    else if (p && !t) ++m.fp;
    else if (!p && t) ++m.fn;
    else ++m.tn;
  }
  auto ratio = [&m](std::size_t num, std::size_t den) {
    if (den == 0) {
      m.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = ratio(m.tp, m.tp + m.fn);
  m.specificity = ratio(m.tn, m.tn + m.fp);
  m.accuracy = ratio(m.tp + m.tn, predicted.size());
  const double pr = m.precision + m.recall;
  if (pr > 0.0) {
    m.f_measure = 2.0 * m.precision * m.recall / pr;
  } else {
    m.degenerate = true;
  }
  return m;
}

}  // namespace incad
