// Masses of a few catalog surfaces, printed as a table.
//
//   ./mass_tour [n_theta]

#include <cstdio>
#include <cstdlib>

#include "qlm/jang_shitam.hpp"
#include "qlm/optimal.hpp"

using namespace qlm;

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 32;
  const GridPtr g = SphereGrid::make(n, 2 * n);

  std::printf("Schwarzschild m = 1, spheres of symmetry\n");
  std::printf("%8s %14s %14s %14s\n", "r", "hawking", "byly", "wang-yau(0)");
  for (double r : {2.5, 3.0, 4.0, 10.0, 50.0}) {
    const SurfaceData d = *schwarzschild_sphere_data({1.0, r}, g).data;
    std::printf("%8.2f %14.10f %14.10f %14.10f\n", r, hawking_mass(d), byly_mass(d),
                wang_yau_energy(d, TimeFunction::zero(g)).energy);
  }

  std::printf("\nLight-cone cut f = exp(0.1 Y_21)\n");
  const LightconeRigidityReport lc = lightcone_rigidity_report(MinkowskiSurfaceSpec::lightcone_bump(0.1, 2, 1), g);
  std::printf("  hawking %.3e   byly %.10f   (1/8pi) int (sqrt l1 - sqrt l2)^2 = %.10f\n", lc.hawking, lc.byly,
              lc.byly_formula);

  std::printf("\nOptimal time function from tau0 = 0.05 cos(theta) at r = 4\n");
  const SurfaceData d = *schwarzschild_sphere_data({1.0, 4.0}, g).data;
  OptimalOptions o;
  o.on_iteration = [](int it, double e, double res) {
    std::printf("  iter %2d  E = %.12f  |el| = %.3e\n", it, e, res);
  };
  const OptimalSolveResult res = solve_optimal(d, {harmonic_field(g, 1, 0, 0.05)}, o);
  std::printf("  converged %s, |tau*|_inf = %.2e\n", res.converged ? "yes" : "no", res.tau_star.tau.max_abs());

  std::printf("\nShi-Tam extension with E = 1 from r0 = 4\n");
  const QuasiSphericalState s = shi_tam_flow(4.0, 1.0 / std::sqrt(0.5));
  const EOfRTable t = e_of_r(s, 7);
  for (std::size_t k = 0; k < t.r.size(); ++k) std::printf("  e(%8.2f) = %.10f\n", t.r[k], t.e[k]);
  const AdmEstimate adm = adm_energy_radial(s, 1e3, g);
  std::printf("  ADM flux at r = 1000: %.8f, at 2000: %.8f, extrapolated %.8f\n", adm.at_r, adm.at_2r,
              adm.extrapolated);
  return 0;
}
