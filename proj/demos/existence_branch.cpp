// Mountain pass at lambda = 14 on T^2, then the branch continued up to 19.
#include <cstdio>

#include "pmf/mountain_pass.hpp"
#include "pmf/solver.hpp"

int main() {
  const pmf::TorusSpec spec = pmf::make_spec(1, 64);
  const pmf::MPResult mp = pmf::mountain_pass(14.0, spec);
  if (!mp.converged) {
    std::fprintf(stderr, "mountain pass did not converge\n");
    return 1;
  }
  std::printf("saddle at lambda = 14: c = %.10f, residual %.2e, endpoint %s\n", mp.c_estimate,
              mp.solution.residual_l2, pmf::family_name(mp.endpoint.family));
  const pmf::Branch b = pmf::continuation(mp.solution, 19.0, 0.25);
  std::printf("%10s %14s %10s\n", "lambda", "energy", "max u");
  for (const pmf::SolveResult& p : b.points) std::printf("%10.5f %14.8f %10.5f\n", p.lambda, p.energy, p.field.max());
  std::printf("branch end: %s\n", pmf::branch_end_name(b.reason));
}
