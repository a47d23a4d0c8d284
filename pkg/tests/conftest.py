import numpy as np
import pytest

from ofblqr.harness import sim1_config, sim2_config
from ofblqr.internal_model import build_parameterization
from ofblqr.lti import place_observer_poles


@pytest.fixture(scope="session")
def sim1():
    """Benchmark 1 setup: system, model factory, observer gain, M."""
    cfg = sim1_config()
    sys = cfg.system()
    L = place_observer_poles(sys, cfg.observer_poles)
    pmap = build_parameterization(sys, L, cfg.model(), eps0=cfg.x0)
    return {"cfg": cfg, "sys": sys, "L": L, "M": pmap.M}


@pytest.fixture(scope="session")
def sim2():
    cfg = sim2_config()
    sys = cfg.system()
    L = place_observer_poles(sys, cfg.observer_poles)
    pmap = build_parameterization(sys, L, cfg.model(), eps0=cfg.x0)
    return {"cfg": cfg, "sys": sys, "L": L, "M": pmap.M}
