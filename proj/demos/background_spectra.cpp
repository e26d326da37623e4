// A soliton on a genus-two background: samples q(x, t), splits the line into the asymptotic
// regions and prints the fundamental frequencies of each region.
//
//   background_spectra [t] [h]      (defaults t = 5, h = 0.1; expect a few minutes per run)
#include <cstdio>
#include <cstdlib>

#include "rhkdv/analysis.hpp"

using namespace rhkdv;

int main(int argc, char **argv) {
  double t = argc > 1 ? std::atof(argv[1]) : 5.0;
  double h = argc > 2 ? std::atof(argv[2]) : 0.1;

  Scenario sc;
  sc.solitons.kappa = {1.0, 1.5};
  sc.solitons.c = {1.0, 1.0};
  sc.genus = GenusData{{{4.0, 4.015}, {5.0, 5.005}}, {0.0, 0.0}};

  try {
    double xa = -30, xb = soliton_centre(sc, 1, t) + 35;
    auto windows = asymptotic_regions(sc, t, xa, xb);
    auto f = sample_grid(sc, {xa, xb, h}, t);
    std::printf("t = %g, %zu regions, %zu solver gaps\n", t, windows.size(), f.gaps.size());
    for (const auto &w : windows) {
      auto s = region_spectrum(f, w);
      std::printf("  [%7.2f, %7.2f]  bin %.4f  fundamentals:", w.x1, w.x2, s.bin_width);
      for (const auto &p : s.fundamentals) std::printf(" %.4f", p.frequency);
      std::printf("\n");
    }
  } catch (const Error &e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
}
