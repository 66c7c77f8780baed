// Operating point and quadrature variance at the default parameters.
#include <cstdio>

#include "bae/bae.hpp"

int main() {
  using namespace bae;
  Scenario s = resolve_static(Config{});
  resolve_dynamic(s);

  std::printf("x_zpf      = %.5e m\n", s.derived.x_zpf);
  std::printf("shift      = %.4f Hz\n", frequency_shift(s.system, s.derived.F2) / two_pi);
  std::printf("|alpha_c|  = %.6g\n", std::abs(s.operating_point->alpha_c));
  std::printf("|beta_1|   = %.6g\n", std::abs(s.operating_point->beta_1));

  const auto m = make_fluctuation_model(s.problem(), *s.operating_point);
  const auto v = quadrature_variance(m, s.noise);
  std::printf("<X^2>      = %.6f (vacuum 0.5)\n", v.variance);
  return 0;
}
