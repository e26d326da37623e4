#pragma once

#include "oracles.hpp"
#include "rhkdv/scenario.hpp"

namespace fixture {

using namespace rhkdv;

// random valid scenario: 0-2 solitons, optional reflection, 0-2 bands above its support
inline Scenario random_scenario(std::mt19937_64 &g) {
  std::uniform_real_distribution<double> U(0, 1);
  Scenario sc;
  int ns = int(U(g) * 3);
  double k = 0.4;
  for (int j = 0; j < ns; ++j) {
    k += 0.3 + 0.5 * U(g);
    sc.solitons.kappa.push_back(k);
    sc.solitons.c.push_back(std::exp(2 * (U(g) - 0.5)));
  }
  double lo = 0.3;
  if (U(g) < 0.6) {
    ReflectionSpec R;
    R.type = U(g) < 0.5 ? ReflectionType::gaussian : ReflectionType::rational;
    R.amplitude = 0.1 + 0.4 * U(g);
    R.width = 0.08 + 0.07 * U(g);
    sc.reflection = R;
    lo = R.truncation() + 0.15;
  }
  int nb = int(U(g) * 3);
  if (nb > 0) {
    GenusData G;
    double a = lo + 0.2 * U(g);
    for (int j = 0; j < nb; ++j) {
      double b = a + 0.05 + 0.1 * U(g);
      G.bands.push_back({a, b});
      G.phases.push_back(6 * U(g) - 3);
      a = b + 0.2 + 0.3 * U(g);
    }
    sc.genus = G;
  }
  validate(sc);
  return sc;
}

} // namespace fixture
