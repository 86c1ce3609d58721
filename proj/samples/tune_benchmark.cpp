// Tune the third-order benchmark plant 1/(s+1)^3 for a 60 degree phase
// margin at 1 rad/s and print the resulting controller and its closed-loop
// figures.

#include <cstdio>

#include "pmwc/pmwc.hpp"

int main() {
    using namespace pmwc;

    const Polynomial lag{1.0, 1.0};
    const TransferFunction plant(Polynomial{1.0}, lag * lag * lag);

    TuneSpec spec;  // defaults: PM 60 deg, wc 1 rad/s, 20 s horizon, 10 ms steps
    const TuneResult result = tune(plant, spec);

    std::printf("C(s) = %.3f + %.3f/s + %.3f s\n", result.gains.kp, result.gains.ki,
                result.gains.kd);
    std::printf("achieved: PM %.2f deg at wc %.4f rad/s\n", result.pm_achieved, result.wc_achieved);
    std::printf("IAE %.4f, stable %d, solver iterations %d\n", result.iae, result.stable ? 1 : 0,
                result.solver.iterations);

    const StepResponse resp =
        step_response(to_state_space(feedback_unity(series(pid_tf(result.gains), plant))), spec.grid);
    const StepMetrics metrics = step_metrics(resp, 1.0);
    std::printf("settling time %.2f s, overshoot %.2f%%\n", metrics.settling_time,
                metrics.overshoot_pct);
    return result.solver.converged ? 0 : 1;
}
