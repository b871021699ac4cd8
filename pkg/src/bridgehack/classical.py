"""Classical prior hacking and the single-step Schrödinger bridge.

Conventions
-----------
A channel is a column-stochastic matrix ``e`` of shape ``(d_out, d_in)`` with
``e[y, x] = E(y|x)``. Probability vectors are plain 1-d numpy arrays.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionTooLarge,
    DivisionSingularity,
    InvalidInput,
    SupportViolation,
)
from .linalg import DIV_EPS, hadamard_divide

PROB_TOL = 1e-12
CLAMP_BELOW = 1e-15
EQUALITY_ATOL = 1e-12
MAX_ENUM_DIM = 20
PLATEAU_WINDOW = 50
PLATEAU_RTOL = 1e-13
# Inside the iteration only underflow-level denominators count as singular:
# infeasible runs drift toward the simplex boundary and must be caught by the
# plateau rule rather than by a premature division error.
ITERATE_DIV_EPS = 1e-300


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    SINGULAR = "singular"


# ---------------------------------------------------------------------------
# validation


def as_probability(p, tol: float = PROB_TOL, name: str = "p") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InvalidInput(f"{name} must be a non-empty vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidInput(f"{name} has non-finite entries")
    if np.any(p < 0):
        raise InvalidInput(f"{name} has negative entries")
    if abs(p.sum() - 1.0) > tol:
        raise InvalidInput(f"{name} sums to {p.sum():.15g}, not 1")
    return p


def _as_nonnegative(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or not np.all(np.isfinite(v)) or np.any(v < 0):
        raise InvalidInput(f"{name} must be a finite nonnegative vector")
    return v


def as_stochastic(e, tol: float = PROB_TOL) -> np.ndarray:
    """Validate a column-stochastic matrix.

    Entries with magnitude below 1e-15 are clamped to exact zeros (with a
    warning): the zero pattern decides feasibility, so it must be explicit.
    """
    e = np.array(e, dtype=float)
    if e.ndim != 2 or e.size == 0:
        raise InvalidInput(f"channel must be a non-empty matrix, got shape {e.shape}")
    if not np.all(np.isfinite(e)):
        raise InvalidInput("channel has non-finite entries")
    tiny = (e != 0) & (np.abs(e) < CLAMP_BELOW)
    if np.any(tiny):
        warnings.warn(
            f"clamping {int(tiny.sum())} channel entries below {CLAMP_BELOW:g} to zero",
            stacklevel=2,
        )
        e[tiny] = 0.0
    if np.any(e < 0):
        raise InvalidInput("channel has negative entries")
    sums = e.sum(axis=0)
    if np.max(np.abs(sums - 1.0)) > tol:
        raise InvalidInput(f"channel columns do not sum to 1 (sums {sums})")
    return e


def _check_dims(e, p=None, q=None):
    if p is not None and p.shape[0] != e.shape[1]:
        raise InvalidInput(f"input dimension {e.shape[1]} does not match vector of length {p.shape[0]}")
    if q is not None and q.shape[0] != e.shape[0]:
        raise InvalidInput(f"output dimension {e.shape[0]} does not match vector of length {q.shape[0]}")


# ---------------------------------------------------------------------------
# forward propagation and Bayes inversion


def apply_channel(e, p) -> np.ndarray:
    """Forward propagation ``[E p](y) = sum_x E(y|x) p(x)``."""
    e = as_stochastic(e)
    p = as_probability(p)
    _check_dims(e, p)
    return e @ p


def bayes_inverse(e, gamma) -> np.ndarray:
    """Bayes map ``D_gamma E^T D_{E gamma}^{-1}`` of shape ``(d_in, d_out)``.

    ``gamma`` need not be normalised; the map is invariant under rescaling.

    Raises
    ------
    DivisionSingularity
        If some output probability ``[E gamma](y)`` vanishes.
    """
    e = as_stochastic(e)
    gamma = _as_nonnegative(gamma, "gamma")
    _check_dims(e, gamma)
    out = e @ gamma
    if np.any(out <= DIV_EPS):
        raise DivisionSingularity(
            f"Bayes map undefined: outputs {np.flatnonzero(out <= DIV_EPS).tolist()} have zero probability"
        )
    return gamma[:, None] * e.T / out[None, :]


def bayes_update(e, gamma, q) -> np.ndarray:
    """``gamma ⊙ E^T (q ⊘ E gamma)``, the Bayes map applied to evidence ``q``.

    Unlike :func:`bayes_inverse` this only requires ``E gamma > 0`` on the
    support of ``q``.
    """
    return gamma * (e.T @ hadamard_divide(q, e @ gamma))


# ---------------------------------------------------------------------------
# prior hacking


@dataclass
class HackSolution:
    prior: np.ndarray
    potential: np.ndarray
    residual: float
    iterations: int
    status: Status
    plateau: bool = False

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def _plateaued(history: list[float], window: int, rtol: float) -> bool:
    if len(history) <= window:
        return False
    old, new = history[-window - 1], history[-1]
    if old <= 0:
        return True
    return (old - new) / old < rtol


def ras_step(e, gamma, p, q) -> np.ndarray:
    """One normalised fixed-point update ``p ⊘ [E^T (q ⊘ E gamma)]``."""
    back = e.T @ hadamard_divide(q, e @ gamma)
    new = hadamard_divide(p, back)
    return new / new.sum()


def prior_hack_ras(
    e,
    p,
    q,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    seed: int | None = None,
    plateau_window: int = PLATEAU_WINDOW,
    plateau_rtol: float = PLATEAU_RTOL,
) -> HackSolution:
    """Find a prior ``gamma`` whose Bayes update of ``q`` equals ``p``.

    Iterates the RAS (Sinkhorn) fixed point, renormalising ``gamma`` every
    step. Starts from the uniform prior, or from a Dirichlet(1, ..., 1) draw
    when ``seed`` is given. Convergence is declared once
    ``||bayes_update(e, gamma, q) - p||_1 < tol``; runs whose residual
    improves by less than ``plateau_rtol`` (relative) over ``plateau_window``
    iterations stop early with ``MAX_ITERATIONS`` and ``plateau=True``.
    """
    e = as_stochastic(e)
    p = as_probability(p, name="p")
    q = as_probability(q, name="q")
    _check_dims(e, p, q)
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    d = e.shape[1]
    if seed is None:
        gamma = np.full(d, 1.0 / d)
    else:
        gamma = np.random.default_rng(seed).dirichlet(np.ones(d))

    history: list[float] = []
    big_gamma = np.zeros(e.shape[0])
    residual = np.inf
    it = 0
    while True:
        try:
            big_gamma = hadamard_divide(q, e @ gamma, ITERATE_DIV_EPS)
            back = e.T @ big_gamma
        except DivisionSingularity:
            return HackSolution(gamma, big_gamma, residual, it, Status.SINGULAR)
        residual = float(np.abs(gamma * back - p).sum())
        if residual < tol:
            return HackSolution(gamma, big_gamma, residual, it, Status.CONVERGED)
        history.append(residual)
        if _plateaued(history, plateau_window, plateau_rtol):
            return HackSolution(gamma, big_gamma, residual, it, Status.MAX_ITERATIONS, plateau=True)
        if it >= max_iter:
            return HackSolution(gamma, big_gamma, residual, it, Status.MAX_ITERATIONS)
        try:
            gamma = hadamard_divide(p, back, ITERATE_DIV_EPS)
        except DivisionSingularity:
            return HackSolution(gamma, big_gamma, residual, it, Status.SINGULAR)
        gamma = gamma / gamma.sum()
        it += 1


# ---------------------------------------------------------------------------
# feasibility


@dataclass
class FeasibilityVerdict:
    feasible: bool
    witness: tuple[tuple[int, ...], tuple[int, ...]] | None = None  # (Y, X)
    violation: str | None = None
    equality_constraints: list[tuple[tuple[int, ...], tuple[int, ...]]] = field(default_factory=list)


def _bits(mask: int, labels) -> tuple[int, ...]:
    return tuple(labels[i] for i in range(len(labels)) if mask >> i & 1)


def check_feasibility(e, p, q) -> FeasibilityVerdict:
    """Decide whether ``(e, p, q)`` is prior-hackable by subset enumeration.

    Inputs with ``p(x) = 0`` and outputs with ``q(y) = 0`` are dropped, which
    matches what the RAS iteration does with the ``0/0 = 0`` convention. For
    every nonempty ``X`` of the remaining inputs with reach ``Y(X)`` (outputs
    hit by ``X``):

    * ``q(Y) >= p(X)``;
    * ``q(Y) = p(X)`` exactly when no input outside ``X`` reaches ``Y``.

    The witness prefers plain deficits, then smaller ``X``, then the
    lexicographically smaller ``X``.
    """
    e = as_stochastic(e)
    p = as_probability(p, name="p")
    q = as_probability(q, name="q")
    _check_dims(e, p, q)
    if e.shape[1] > MAX_ENUM_DIM:
        raise DimensionTooLarge(f"subset enumeration limited to {MAX_ENUM_DIM} inputs")

    xs = np.flatnonzero(p > 0).tolist()
    ys = np.flatnonzero(q > 0).tolist()
    m = len(xs)
    sub = e[np.ix_(ys, xs)] > 0
    col_reach = [sum(1 << j for j in range(len(ys)) if sub[j, i]) for i in range(m)]
    q_sub = q[ys]

    full = (1 << m) - 1
    reach = [0] * (1 << m)
    psum = [0.0] * (1 << m)
    qsum_cache: dict[int, float] = {0: 0.0}
    violations = []
    decoupled_pairs = []
    for mask in range(1, full + 1):
        low = mask & -mask
        i = low.bit_length() - 1
        rest = mask ^ low
        reach[mask] = reach[rest] | col_reach[i]
        psum[mask] = psum[rest] + p[xs[i]]
        r = reach[mask]
        if r not in qsum_cache:
            qsum_cache[r] = float(sum(q_sub[j] for j in range(len(ys)) if r >> j & 1))
        diff = qsum_cache[r] - psum[mask]
        decoupled = all(col_reach[k] & r == 0 for k in range(m) if not mask >> k & 1)
        pair = (_bits(r, ys), _bits(mask, xs))
        if decoupled and mask != full:
            decoupled_pairs.append(pair)
        if diff < -EQUALITY_ATOL:
            violations.append((pair, "deficit"))
        elif abs(diff) <= EQUALITY_ATOL and not decoupled:
            violations.append((pair, "tight_but_coupled"))
        elif decoupled and abs(diff) > EQUALITY_ATOL:
            violations.append((pair, "decoupled_mass_mismatch"))

    decoupled_pairs.sort(key=lambda yx: yx[1])
    if not violations:
        return FeasibilityVerdict(True, equality_constraints=decoupled_pairs)
    rank = {"deficit": 0, "tight_but_coupled": 1, "decoupled_mass_mismatch": 2}
    (witness, kind) = min(violations, key=lambda v: (rank[v[1]], len(v[0][1]), v[0][1]))
    return FeasibilityVerdict(False, witness, kind, decoupled_pairs)


def is_always_hackable(e) -> bool:
    """True iff every entry of ``e`` is strictly positive."""
    return bool(np.all(as_stochastic(e) > 0))


def is_primitive(e) -> tuple[bool, int | None]:
    """Primitivity test with the smallest exponent ``n`` making ``e^n`` positive.

    The search stops at the Wielandt bound ``(d - 1)^2 + 1``.
    """
    e = as_stochastic(e)
    d = e.shape[0]
    if e.shape[1] != d:
        raise InvalidInput("primitivity needs a square matrix")
    pattern = (e > 0).astype(np.int64)
    power = pattern.copy()
    for n in range(1, (d - 1) ** 2 + 2):
        if np.all(power > 0):
            return True, n
        power = ((power @ pattern) > 0).astype(np.int64)
    return False, None


# ---------------------------------------------------------------------------
# Schrödinger bridge


def bridge_from_prior(e, solution: HackSolution, p, q) -> np.ndarray:
    """Bridge transition matrix ``D_Gamma E D_{E^T Gamma}^{-1}``.

    It maps ``p`` to ``q`` and its Bayes inverse at prior ``p`` is the hacked
    Bayes map of ``e``.
    """
    e = as_stochastic(e)
    p = as_probability(p, name="p")
    q = as_probability(q, name="q")
    _check_dims(e, p, q)
    if solution.status is not Status.CONVERGED:
        raise InvalidInput(f"hack solution is not converged ({solution.status.value})")
    if np.any(p <= 0):
        raise InvalidInput("p must have full support")
    pot = np.asarray(solution.potential, dtype=float)
    back = e.T @ pot
    if np.any(back <= DIV_EPS):
        raise DivisionSingularity("E^T Gamma has a zero entry")
    return pot[:, None] * e / back[None, :]


def bridge_from_bayes(bayes_map, p, q) -> np.ndarray:
    """Bridge entries ``F(y|x) = bayes(x|y) q(y) / p(x)`` from a Bayes map."""
    bayes_map = np.asarray(bayes_map, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return bayes_map.T * q[:, None] / p[None, :]


def coupling_from(e, gamma, big_gamma) -> np.ndarray:
    """Joint ``B[x, y] = gamma(x) E(y|x) Gamma(y)``."""
    e = np.asarray(e, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    big_gamma = np.asarray(big_gamma, dtype=float)
    _check_dims(e, gamma, big_gamma)
    return gamma[:, None] * e.T * big_gamma[None, :]


def coupling_kl(b, a) -> float:
    """``sum b log(b / a)`` in nats with ``0 log 0 = 0``."""
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    if b.shape != a.shape:
        raise InvalidInput(f"shape mismatch {b.shape} vs {a.shape}")
    pos = b > 0
    if np.any(pos & (a <= 0)):
        raise SupportViolation("b has mass where a vanishes")
    return float(np.sum(b[pos] * np.log(b[pos] / a[pos])))


# ---------------------------------------------------------------------------
# channel families


def permutation_channel(perm) -> np.ndarray:
    """0/1 matrix sending input ``x`` to output ``perm[x]``."""
    perm = [int(v) for v in perm]
    d = len(perm)
    if sorted(perm) != list(range(d)):
        raise InvalidInput(f"{perm} is not a permutation of 0..{d - 1}")
    e = np.zeros((d, d))
    e[perm, range(d)] = 1.0
    return e


def erasure_channel(target, in_dim: int | None = None) -> np.ndarray:
    """Every input is sent to ``target``."""
    t = as_probability(target, tol=1e-9, name="target")
    t = t / t.sum()
    d = len(t) if in_dim is None else int(in_dim)
    if d < 1:
        raise InvalidInput("in_dim must be positive")
    return np.tile(t[:, None], (1, d))


def bistochastic_channel(dim: int, mix: float) -> np.ndarray:
    """Symmetric bistochastic ``(1 - mix) I + mix J / dim``."""
    if not 0 <= mix <= 1 or dim < 1:
        raise InvalidInput("need dim >= 1 and mix in [0, 1]")
    return (1 - mix) * np.eye(dim) + mix * np.full((dim, dim), 1.0 / dim)


def absorber_channel(dim: int, absorbing, rate: float) -> np.ndarray:
    """Absorbing map: absorbing states are fixed, transient states leak.

    A transient input keeps ``1 - rate`` spread uniformly over the transient
    states and sends ``rate`` uniformly to the absorbing states.
    """
    absorbing = sorted({int(a) for a in absorbing})
    if not absorbing or any(a < 0 or a >= dim for a in absorbing):
        raise InvalidInput(f"absorbing states {absorbing} invalid for dim {dim}")
    transient = [x for x in range(dim) if x not in absorbing]
    if not transient:
        return np.eye(dim)
    if not 0 < rate <= 1:
        raise InvalidInput("rate must lie in (0, 1]")
    e = np.zeros((dim, dim))
    for a in absorbing:
        e[a, a] = 1.0
    for x in transient:
        e[transient, x] = (1 - rate) / len(transient)
        e[absorbing, x] = rate / len(absorbing)
    return e


def block_symmetric_channel(flip: float, dim: int = 3, block=(0, 1)) -> np.ndarray:
    """Symmetric mixing on ``block``; every other state is left untouched."""
    block = sorted({int(b) for b in block})
    if not 0 <= flip <= 1 or len(block) < 2 or block[-1] >= dim:
        raise InvalidInput("need flip in [0, 1] and a block of at least two valid states")
    k = len(block)
    e = np.eye(dim)
    sub = (1 - flip) * np.eye(k) + flip * (np.ones((k, k)) - np.eye(k)) / (k - 1)
    e[np.ix_(block, block)] = sub
    return e


def random_positive_channel(dim: int, seed: int, out_dim: int | None = None) -> np.ndarray:
    """Strictly positive channel with uniform(0, 1] entries, columns normalised."""
    out_dim = dim if out_dim is None else int(out_dim)
    rng = np.random.default_rng(seed)
    e = 1.0 - rng.random((out_dim, dim))  # (0, 1]
    return e / e.sum(axis=0, keepdims=True)


_FAMILIES = {
    "permutation": permutation_channel,
    "erasure": erasure_channel,
    "bistochastic": bistochastic_channel,
    "absorber": absorber_channel,
    "block_symmetric": block_symmetric_channel,
    "random_positive": random_positive_channel,
}


def make_channel(kind: str, **params) -> np.ndarray:
    """Build a channel of the named family (see ``_FAMILIES``)."""
    try:
        factory = _FAMILIES[kind.replace("-", "_")]
    except KeyError:
        raise InvalidInput(f"unknown channel kind {kind!r}; choose from {sorted(_FAMILIES)}") from None
    try:
        return as_stochastic(factory(**params))
    except TypeError as exc:
        raise InvalidInput(f"bad parameters for {kind}: {exc}") from None

