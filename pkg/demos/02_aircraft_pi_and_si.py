"""Policy iteration and the switched algorithm on the aircraft plant.

The three-state lateral-dynamics model is open-loop unstable, which
rules out starting policy iteration from the zero gain unless the data
were collected under a stabilized loop -- off-policy learning handles
that.  This script shows two paths to the optimal gain:

1. Off-policy PI from the zero initial gain (admissible here because
   the evaluation is done on replayed data, not live rollouts).
2. The switched algorithm (SI): when handed a destabilizing initial
   gain, it falls back to value iteration with an augmented utility
   until the data-driven stability criterion certifies an admissible
   policy, then switches to PI for fast terminal convergence.
"""

import numpy as np

from ofblqr import are_vi, build_parameterization, collect, place_observer_poles
from ofblqr.adp import run_pi, run_si
from ofblqr.harness import SIM2_BAD_K0, sim2_config


def main():
    cfg = sim2_config(algorithm="pi", seed=0)
    sys = cfg.system()
    print("Open-loop eigenvalues:", np.round(np.linalg.eigvals(sys.A), 4))

    L = place_observer_poles(sys, cfg.observer_poles)
    pmap = build_parameterization(sys, L, cfg.model(), np.asarray(cfg.x0))
    K_star = are_vi(sys).K @ pmap.M

    # --- Off-policy policy iteration from the zero gain -------------
    model = cfg.model()
    batch = collect(sys, model, np.zeros((sys.m, model.n_z)),
                    cfg.noise_spec(cfg.seed), cfg.x0, cfg.max_steps,
                    require_rank=cfg.require_rank)
    state = run_pi(batch, np.zeros((sys.m, model.n_z)), cfg.eps_stop,
                   K_ref=K_star)
    rel = np.max(np.abs(state.Kj - K_star)) / np.max(np.abs(K_star))
    print(f"\nPI: {state.iteration} iterations, relative gain error {rel:.2e}")

    # --- Switched algorithm from a destabilizing gain ---------------
    cfg_si = sim2_config(algorithm="si", seed=0)
    model = cfg_si.model()
    batch = collect(sys, model, np.asarray(SIM2_BAD_K0),
                    cfg_si.noise_spec(cfg_si.seed), cfg_si.x0,
                    cfg_si.max_steps, require_rank=cfg_si.require_rank)
    state = run_si(batch, np.asarray(cfg_si.Q_eps), cfg_si.eps_stop,
                   K_ref=K_star)
    switch = next(i for i, r in enumerate(state.history.rows)
                  if r["mode"] == "PI")
    rel = np.max(np.abs(state.Kj - K_star)) / np.max(np.abs(K_star))
    print(f"SI: certified after {switch} VI iterations, "
          f"{state.iteration} total, relative gain error {rel:.2e}")


if __name__ == "__main__":
    main()
