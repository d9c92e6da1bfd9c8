"""Ready-made IFS used by the demos, tests and scripts."""

from __future__ import annotations

import itertools

import numpy as np

from .spaces import (
    BaseSpace,
    ContractiveIFS,
    ProbMeasure,
    build_grid,
    finite_fiber,
    singleton_fiber,
)


def affine_system(branches, n: int = 257, gamma: float | None = None,
                  base: BaseSpace | None = None) -> ContractiveIFS:
    """Affine branches z -> a z + b on an ``n``-node grid.

    When ``gamma`` is omitted the smallest valid factor is computed from the
    corner pairs, which are exhaustive for affine branches.
    """
    ab = np.asarray(branches, dtype=float).reshape(-1, 2)
    if base is None:
        base = BaseSpace.discrete(range(len(ab)))
    if gamma is None:
        gamma = _corner_gamma(ab, base.metric)
    return ContractiveIFS(base, build_grid(n), gamma, affine=ab)


def _corner_gamma(ab, dx) -> float:
    corners = np.array([0.0, 1.0])
    best = 0.0
    for i1, i2 in itertools.product(range(len(ab)), repeat=2):
        for z1, z2 in itertools.product(corners, repeat=2):
            d_in = dx[i1, i2] + abs(z1 - z2)
            if d_in > 0:
                d_out = abs(ab[i1, 0] * z1 + ab[i1, 1] - ab[i2, 0] * z2 - ab[i2, 1])
                best = max(best, d_out / d_in)
    return max(best, 1e-3)


def half_map_system(n: int = 257) -> ContractiveIFS:
    """Single branch z -> z/2."""
    return affine_system([[0.5, 0.0]], n=n, gamma=0.5)


def doubling_system(n: int = 1025) -> ContractiveIFS:
    """Branches z/2 and z/2 + 1/2: the inverse branches of the doubling map."""
    return affine_system([[0.5, 0.0], [0.5, 0.5]], n=n, gamma=0.5)


def cantor_system(n: int = 730) -> ContractiveIFS:
    """Branches z/3 and z/3 + 2/3. Take n = 3**k + 1 to align the grid."""
    return affine_system([[1 / 3, 0.0], [1 / 3, 2 / 3]], n=n, gamma=2 / 3)


def singleton_system(d: int) -> ContractiveIFS:
    """X = {0..d-1} acting trivially on a one-point fiber."""
    base = BaseSpace.discrete(range(d))
    return ContractiveIFS(base, singleton_fiber(), 0.5, table=np.zeros((d, 1), dtype=int))


def word_shift_system(k: int = 3) -> ContractiveIFS:
    """Prepend-a-symbol maps on binary words of length ``k``.

    Finite truncation of the one-sided binary shift: tau_x(z1..zk) = (x, z1..z_{k-1}).
    The word metric is 2**-(i+1) at the first differing position i.
    """
    words = list(itertools.product((0, 1), repeat=k))
    index = {w: i for i, w in enumerate(words)}
    n = len(words)
    metric = np.zeros((n, n))
    for a, wa in enumerate(words):
        for b, wb in enumerate(words):
            if a != b:
                i = next(t for t in range(k) if wa[t] != wb[t])
                metric[a, b] = 2.0 ** -(i + 1)
    fiber = finite_fiber(metric, points=tuple("".join(map(str, w)) for w in words))
    table = np.array([[index[(x,) + w[:-1]] for w in words] for x in (0, 1)])
    return ContractiveIFS(BaseSpace.discrete((0, 1)), fiber, 0.5, table=table)


def fair(ifs: ContractiveIFS) -> ProbMeasure:
    return ProbMeasure.uniform(ifs.base.size)


def random_lipschitz_cost(ifs: ContractiveIFS, rng: np.random.Generator,
                          amplitude: float = 0.5, modes: int = 3) -> np.ndarray:
    """Smooth random cost c(x, z) on the nodes of ``ifs``.

    Grid fibers get a short random trigonometric series per branch; finite
    fibers get i.i.d. uniform entries.
    """
    nx, nz = ifs.shape
    if not ifs.fiber.is_grid:
        return rng.uniform(-amplitude, amplitude, size=(nx, nz))
    z = ifs.fiber.nodes
    c = rng.uniform(-amplitude, amplitude, size=(nx, 1)) * np.ones((1, nz))
    for k in range(1, modes + 1):
        amp = rng.uniform(-amplitude, amplitude, size=(nx, 1)) / k
        phase = rng.uniform(0, 2 * np.pi, size=(nx, 1))
        c = c + amp * np.cos(np.pi * k * z[None, :] + phase)
    return c
