// Norm and energy of the cutoff bubble family against log sigma.
#include <cmath>
#include <cstdio>
#include <vector>

#include "pmf/bubble.hpp"

int main() {
  const std::vector<double> sigmas{1e2, std::pow(10.0, 2.5), 1e3, std::pow(10.0, 3.5), 1e4};
  for (int m : {1, 2}) {
    for (double lambda : {0.0, 0.9 * pmf::total_q_curvature(m), 1.1 * pmf::total_q_curvature(m)}) {
      const pmf::BubbleAsymptotics a = pmf::bubble_asymptotics(sigmas, lambda, m);
      std::printf("m = %d lambda = %8.3f  norm slope %9.4f (target %9.4f)  energy slope %9.4f (target %9.4f)\n", m,
                  lambda, a.norm_fit.slope, a.norm_target, a.energy_fit.slope, a.energy_target);
    }
  }
}
