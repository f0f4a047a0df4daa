"""Simultaneous-perturbation stochastic approximation."""

from __future__ import annotations

import numpy as np

from tvha_bench.optimizers.base import Run, _Stop

CHECKPOINT = 10


def spsa(run: Run, x0: np.ndarray) -> None:
    """Two evaluations per iteration along a Rademacher direction.

    Gains are ``a_k = a / (k + 1 + A)**alpha`` and ``c_k = c / (k + 1)**gamma``
    with ``A`` defaulting to a tenth of the evaluation budget. When the run
    ends, the current iterate is evaluated once so the trace reports the
    point SPSA actually converged to, not only its perturbed probes.

    Probe averages carry a direction-dependent ``c_k**2`` bias, so stalls are
    judged on the iterate itself, evaluated every ``CHECKPOINT`` iterations.
    """
    cfg = run.cfg
    A = cfg.spsa_A if cfg.spsa_A is not None else cfg.max_function_evaluations / 10
    x = x0.copy()
    k = 0
    checks = cfg.stall_iterations > 0 or cfg.noise_floor is not None
    run.stall_scale = 2  # a window always spans two checkpoints
    try:
        progress = run.f(x) if checks else None
        while True:
            if run.remaining < 4:
                raise _Stop("budget-exhausted")
            ak = cfg.spsa_a / (k + 1 + A) ** cfg.spsa_alpha
            ck = cfg.spsa_c / (k + 1) ** cfg.spsa_gamma
            delta = run.rng.choice((-1.0, 1.0), size=run.n)
            fp = run.f(x + ck * delta)
            fm = run.f(x - ck * delta)
            diff = fp - fm
            if np.isfinite(diff):
                x = x - ak * diff / (2 * ck) * delta
            k += 1
            if checks and k % CHECKPOINT == 0:
                progress = run.f(x)
            run.end_iteration(progress=progress)
    except _Stop:
        if run.remaining > 0:
            run.f(x)
        raise
