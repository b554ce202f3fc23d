#pragma once

namespace codekg {

struct PRF {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Harmonic mean; 0 when p + r = 0.
inline double harmonic_f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

inline PRF make_prf(double p, double r) { return PRF{p, r, harmonic_f1(p, r)}; }

// num / den, or `empty` when den is 0.
inline double safe_ratio(double num, double den, double empty = 0.0) {
  return den > 0 ? num / den : empty;
}

}  // namespace codekg
