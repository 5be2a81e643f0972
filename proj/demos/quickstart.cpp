// Offline design for the mass-spring-damper and one MPC solve at t = 0.

#include <iostream>

#include "ramp/simulation.hpp"

int main() {
    using namespace ramp;
    const MassSpringDamper msd;
    const auto model = msd.model();
    const auto Z = MassSpringDamper::constraints();
    const auto D = msd.disturbance();
    const auto Theta0 = MassSpringDamper::prior();
    Mat Q(2, 2), R(1, 1);
    Q << 1.0, 0.0, 0.0, 0.01;
    R << 0.1;

    const auto syn = lmi_synthesis_scan(model, Theta0.vertices(), disturbance_vertices(D), Q, R, 0.75, Z);
    TubeBase base{Vec(2), Vec(2), Vec::Constant(1, -5.0), Vec::Constant(1, 4.0)};
    base.x_lower << -0.1, -5.0;
    base.x_upper << 0.1, 5.0;
    const auto oc = design_constants(model, Z, D, Theta0, syn.K, syn.P, base, 0.75);
    const Vec xs = (Vec(2) << 1.0, 0.0).finished();
    const auto terminal = terminal_tracking(oc, model, Z, Theta0, xs);

    std::cout << "K = " << oc.K << ", r = " << oc.r() << ", rho = " << oc.rho_bar << ", eta0 L_B = " << Theta0.eta * oc.L_B
              << ", d_bar = " << oc.d_bar << ", c_max = " << oc.c_max << "\n";

    TubeMPC mpc(model, Z, MPCConfig{14, Q, R, oc, terminal, Formulation::w2});
    const StepData st{Vec::Zero(2), Theta0, Theta0.center, oc.rho_bar, terminal_level(terminal, oc, model, Z, Theta0)};
    const auto [u, sol] = mpc.solve_step(st);
    std::cout << "u_0 = " << u.transpose() << ", s_N = " << sol.s(14) << ", objective = " << sol.objective << "\n";
    return 0;
}
