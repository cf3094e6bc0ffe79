import numpy as np

from geoquant import expr


def random_polynomial(rng: np.random.Generator, coords, degree: int = 3, terms: int = 4):
    """Small random polynomial with unit-scale coefficients.

    Built as an expression string so tests exercise the parser path too.
    """
    coords = tuple(coords)
    pieces = []
    for _ in range(terms):
        coeff = rng.uniform(-1, 1)
        exponents = rng.integers(0, degree + 1, size=len(coords))
        while exponents.sum() > degree:
            exponents[rng.integers(0, len(coords))] = 0
        factors = [f"{coeff:.6f}"]
        for name, k in zip(coords, exponents):
            if k == 1:
                factors.append(name)
            elif k > 1:
                factors.append(f"{name}^{int(k)}")
        pieces.append("*".join(factors))
    return expr.parse(" + ".join(pieces), coords)
