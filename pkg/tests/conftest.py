import hypothesis
import numpy as np
import pytest

from radsolve import CentralValues, ProblemSpec, RadialGrid, iterate

hypothesis.settings.register_profile("ci", max_examples=25, deadline=None)
hypothesis.settings.load_profile("ci")


def _random_instance(rng: np.random.Generator):
    """One random valid instance: nonnegative coefficients, monotone f.

    Superlinear nonlinearities are paired with decaying sources and a short
    horizon so the truncated solution stays representable.
    """
    d = int(rng.integers(1, 4))
    N = int(rng.choice([3, 4, 5]))
    p = [float(rng.choice([1.6, 2.0, 2.2, 2.5, 3.0])) for _ in range(d)]

    def coeff():
        return round(float(rng.uniform(0.1, 1.2)), 3)

    f_terms = []
    superlinear = False
    for j in range(d):
        comp = int(rng.integers(1, d + 1))
        expo = float(rng.choice([0.5, 1.0, 1.0, 2.0, 3.0]))
        superlinear = superlinear or expo > 1.0
        term = f"{coeff()}*u{comp}^{expo}" if expo != 1.0 else f"{coeff()}*u{comp}"
        if rng.random() < 0.4:
            other = int(rng.integers(1, d + 1))
            term += f" + {coeff()}*u{other}"
        if rng.random() < 0.3:
            term += f" + {coeff()}"
        f_terms.append(term)

    if superlinear:
        a_pool = ["{c}*(1+r)^(-4)", "{c}*(1+r)^(-3)", "{c}*exp(-r)"]
        R, beta = 1.0, round(float(rng.uniform(0.6, 1.0)), 3)
    else:
        a_pool = ["{c}", "{c}*(1+r)^(-2)", "{c} + {c2}*r^2", "{c}*exp(-r)"]
        R, beta = 2.0, round(float(rng.uniform(0.6, 1.4)), 3)
    a = [str(rng.choice(a_pool)).format(c=coeff(), c2=round(coeff() * 0.3, 4))
         for _ in range(d)]
    h_pool = ["0", "0", f"{round(coeff() * 0.25, 4)}", "{c}/(1+r)", "{c}*exp(-r)"]
    h = [str(rng.choice(h_pool)).format(c=round(coeff() * 0.3, 4)) for _ in range(d)]

    spec = ProblemSpec.from_strings(N, d, p, h, a, f_terms)
    return spec, CentralValues.uniform(beta, d), RadialGrid(R, 256)


def build_suite(count: int = 24, seed: int = 20240817):
    """Deterministic randomized suite; the first entries are pinned instances
    covering the bounded regime, the classic linear case, and a coupled pair."""
    rng = np.random.default_rng(seed)
    suite = [
        (ProblemSpec.from_strings(3, 1, 2.0, "0", "(1+r)^(-4)", "u1^3"),
         CentralValues.uniform(1.2, 1), RadialGrid(2.0, 256)),
        (ProblemSpec.from_strings(3, 1, 2.0, "0", "1", "u1"),
         CentralValues.uniform(1.0, 1), RadialGrid(2.0, 256)),
        (ProblemSpec.from_strings(3, 2, [2.0, 2.0], ["0", "0"], ["1", "1"],
                                  ["u2", "u1"]),
         CentralValues.uniform(1.0, 2), RadialGrid(2.0, 256)),
        (ProblemSpec.from_strings(4, 1, 2.5, "0.1", "0.5 + 0.1*r^2", "u1^0.5"),
         CentralValues.uniform(1.0, 1), RadialGrid(2.0, 256)),
    ]
    while len(suite) < count:
        suite.append(_random_instance(rng))
    return suite


@pytest.fixture(scope="session")
def random_suite():
    return build_suite()


@pytest.fixture(scope="session")
def suite_solutions(random_suite):
    """Solved bundles for the whole suite (shared across acceptance criteria)."""
    out = []
    for spec, central, grid in random_suite:
        bundle = iterate(spec, grid, central, tol=1e-8, max_iter=3000)
        out.append((spec, central, grid, bundle))
    return out
