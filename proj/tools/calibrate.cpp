#include "tvmcf/suite.hpp"

#include <cstdio>
#include <cstdlib>

using namespace tvmcf;

int main(int argc, char** argv) {
  InterpolationOptions opt;
  opt.samples = argc > 1 ? std::atoi(argv[1]) : kCalibrationSamples;
  const ReferenceSurface surfaces[] = {ReferenceSurface::circle(0.5, 0.5, 0.2), ReferenceSurface::strip(0.3, 0.7),
                                       ReferenceSurface::lamella(0.25, 0.75), ReferenceSurface::cylinder(0.5, 0.5, 0.25)};
  for (const auto& f : surfaces) {
    const InterpolationMaxima m = interpolation_ensemble(f, opt, kCalibrationSeed);
    std::printf("%-9s int1 %.6e  c_n %.6e  c_sigma %.6e  int2 %s (max ratio %.4f)\n", kind_name(f.kind()).c_str(),
                m.int1_ratio, m.laplace_c_n, m.laplace_c_sigma, m.int2_holds ? "holds" : "FAILS", m.int2_ratio);
  }
  return 0;
}
