// Discrete Green function of (-Delta)^m and its logarithmic coefficient.
#include <cstdio>

#include "pmf/diagnostics.hpp"

int main() {
  for (int n : {128, 256, 512, 1024}) {
    const pmf::GreenField g = pmf::green_field(pmf::make_spec(1, n), 0);
    std::printf("n = %5d  log coefficient %.6f (target %.6f) from %zu points\n", n, g.log_coefficient, g.log_target,
                g.fit_points);
  }
}
