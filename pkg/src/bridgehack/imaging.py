"""Samplers for hacking images: the set of reachable conclusions as the
reference prior sweeps an entropy shell (classical) or purity shell (qubit).
"""

from dataclasses import dataclass, field

import numpy as np

from . import classical, quantum
from .errors import DivisionSingularity, InvalidInput, RankDeficient
from .linalg import shannon_entropy

ENTROPY_TOL = 1e-12
MAX_DIRECTION_TRIES = 1000
_BISECTION_STEPS = 200

_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])


@dataclass
class ImageSample:
    """One prior and the conclusion it produces.

    Classical samples carry probability vectors; quantum samples carry Bloch
    vectors. ``flag`` is ``"ok"`` or the name of the failure that prevented
    evaluation, in which case ``output_coords`` is NaN.
    """

    input_coords: np.ndarray
    output_coords: np.ndarray
    shell_value: float
    flag: str = "ok"
    metadata: dict = field(default_factory=dict)


def simplex_coords(p) -> tuple[float, float]:
    """Planar coordinates of a trit distribution in the equilateral triangle
    with corners ``(0, 0)``, ``(1, 0)`` and ``(1/2, sqrt(3)/2)``."""
    p = np.asarray(p, dtype=float)
    if p.shape != (3,):
        raise InvalidInput(f"simplex coordinates need a length-3 vector, got shape {p.shape}")
    x, y = p @ _CORNERS
    return float(x), float(y)


def _tangent_direction(dim, rng):
    v = rng.standard_normal(dim)
    v -= v.mean()
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else None


def _ray_end(center, v):
    neg = v < 0
    return float(np.min(center[neg] / -v[neg]))


def _bisect_entropy(center, v, t_max, target):
    lo, hi = 0.0, t_max
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        h = shannon_entropy(np.clip(center + mid * v, 0.0, None))
        if h > target:
            lo = mid
        else:
            hi = mid
    p = np.clip(center + 0.5 * (lo + hi) * v, 0.0, None)
    return p / p.sum()


def entropy_shell_sample(dim: int, entropy: float, n: int, seed: int) -> list[np.ndarray]:
    """Draw ``n`` distributions on ``dim`` outcomes whose Shannon entropy (nats)
    equals ``entropy``.

    Each sample bisects along a ray from the uniform distribution in a random
    sum-zero Gaussian direction. Entropy decreases strictly along such a ray,
    so the crossing is unique. Directions whose boundary point is still above
    the target are redrawn. Zero entropy yields vertices, visited in a seeded
    random order so that every vertex appears once ``n >= dim``.
    """
    if dim < 2:
        raise InvalidInput("dim must be at least 2")
    if n < 0:
        raise InvalidInput("n must be non-negative")
    h_max = np.log(dim)
    if not (0 <= entropy <= h_max + ENTROPY_TOL):
        raise InvalidInput(f"entropy must lie in [0, log {dim}] = [0, {h_max:.6g}], got {entropy}")
    rng = np.random.default_rng(seed)
    center = np.full(dim, 1.0 / dim)
    if entropy >= h_max - ENTROPY_TOL:
        return [center.copy() for _ in range(n)]
    if entropy <= 0:
        order = rng.permutation(dim)
        return [np.eye(dim)[order[i % dim]] for i in range(n)]

    samples = []
    for _ in range(n):
        for _ in range(MAX_DIRECTION_TRIES):
            v = _tangent_direction(dim, rng)
            if v is None:
                continue
            t_max = _ray_end(center, v)
            if shannon_entropy(np.clip(center + t_max * v, 0.0, None)) <= entropy:
                break
        else:
            # fall back to a vertex direction, whose boundary entropy is zero
            v = np.eye(dim)[rng.integers(dim)] - center
            v /= np.linalg.norm(v)
            t_max = _ray_end(center, v)
        samples.append(_bisect_entropy(center, v, t_max, entropy))
    return samples


def hack_image_classical(e, q, entropy: float, n: int, seed: int) -> list[ImageSample]:
    """Conclusions ``bayes_update(e, gamma, q)`` for priors on an entropy shell."""
    e = classical.as_stochastic(e)
    q = classical.as_probability(q, name="q")
    if q.shape[0] != e.shape[0]:
        raise InvalidInput("evidence length does not match the channel output")
    out = []
    for gamma in entropy_shell_sample(e.shape[1], entropy, n, seed):
        try:
            conclusion = classical.bayes_update(e, gamma, q)
            flag = "ok"
        except DivisionSingularity:
            conclusion = np.full(e.shape[1], np.nan)
            flag = "singular"
        out.append(ImageSample(gamma, conclusion, float(entropy), flag))
    return out


def purity_shell_sample(purity: float, n: int, seed: int) -> list[np.ndarray]:
    """``n`` qubit states of the given purity, Bloch directions uniform on the sphere."""
    if not (0.5 <= purity <= 1.0):
        raise InvalidInput(f"qubit purity must lie in [0.5, 1], got {purity}")
    if n < 0:
        raise InvalidInput("n must be non-negative")
    rng = np.random.default_rng(seed)
    radius = np.sqrt(max(2.0 * purity - 1.0, 0.0))
    states = []
    for _ in range(n):
        v = rng.standard_normal(3)
        v /= np.linalg.norm(v)
        states.append(quantum.density_from_bloch(radius * v))
    return states


def hack_image_quantum(e, omega, purity: float, n: int, seed: int) -> list[ImageSample]:
    """Bloch vectors of ``petz_map(e, gamma, omega)`` for priors on a purity shell."""
    if e.in_dim != 2 or e.out_dim != 2:
        raise InvalidInput("quantum images are defined for qubit channels")
    omega = quantum.as_density(omega, name="omega")
    out = []
    for gamma in purity_shell_sample(purity, n, seed):
        r = quantum.bloch_vector(gamma)
        try:
            b = quantum.bloch_vector(quantum.petz_map(e, gamma, omega))
            flag = "ok"
        except RankDeficient:
            b = np.full(3, np.nan)
            flag = "rank_deficient"
        out.append(ImageSample(r, b, float(purity), flag))
    return out
