#pragma once

namespace mfl {

// Compensated (Kahan) accumulator. Accumulation order still matters for
// bitwise reproducibility; callers must keep a fixed order.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    double y = x - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }

  double value() const { return sum; }
};

}  // namespace mfl
