"""Quantum prior hacking with the Petz recovery map, and quantum Schrödinger
bridges (Hermitian and inference-consistent).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .classical import PLATEAU_RTOL, PLATEAU_WINDOW, _plateaued
from .errors import InvalidInput, NotDecoherent, RankDeficient
from .linalg import (
    RANK_EPS,
    check_hermitian,
    hermitian_part,
    matrix_inv_sqrt,
    matrix_sqrt,
    sandwich_from_roots,
    sqrt_and_inv_sqrt,
)

TP_TOL = 1e-10
STATE_TOL = 1e-10
EIG_TOL = 1e-12

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


class QStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    RANK_DEFICIENT = "rank_deficient"


# ---------------------------------------------------------------------------
# states


def as_density(rho, tol: float = STATE_TOL, name: str = "rho") -> np.ndarray:
    """Validate a density matrix and return its Hermitian part."""
    rho = check_hermitian(rho, tol)
    w = np.linalg.eigvalsh(rho)
    if w.size == 0:
        raise InvalidInput(f"{name} is empty")
    if w[0] < -EIG_TOL:
        raise InvalidInput(f"{name} has negative eigenvalue {w[0]:.3e}")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise InvalidInput(f"{name} has trace {np.trace(rho).real:.15g}, not 1")
    return rho


def as_positive(x, tol: float = STATE_TOL, name: str = "operator") -> np.ndarray:
    x = check_hermitian(x, tol)
    w = np.linalg.eigvalsh(x)
    if w.size and w[0] < -EIG_TOL * max(1.0, abs(w[-1])):
        raise InvalidInput(f"{name} has negative eigenvalue {w[0]:.3e}")
    return x


def bloch_vector(rho) -> np.ndarray:
    rho = check_hermitian(rho)
    if rho.shape != (2, 2):
        raise InvalidInput("Bloch vectors are defined for qubits only")
    return np.real(np.einsum("kij,ji->k", PAULI, rho))


def density_from_bloch(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3,) or np.linalg.norm(r) > 1 + 1e-10:
        raise InvalidInput(f"invalid Bloch vector {r}")
    return 0.5 * (np.eye(2) + np.einsum("k,kij->ij", r, PAULI))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-random density matrix ``G G^dagger / Tr``."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return hermitian_part(rho / np.trace(rho).real)


def random_pure(dim: int, rng: np.random.Generator) -> np.ndarray:
    return random_density(dim, rng, rank=1)


def hermitian_basis(dim: int) -> list[np.ndarray]:
    """A complete basis of ``dim**2`` Hermitian matrices (matrix-unit combinations)."""
    basis = []
    for i in range(dim):
        for j in range(dim):
            m = np.zeros((dim, dim), dtype=complex)
            if i == j:
                m[i, i] = 1
            elif i < j:
                m[i, j] = m[j, i] = 1
            else:
                m[j, i] = -1j
                m[i, j] = 1j
            basis.append(m)
    return basis


# ---------------------------------------------------------------------------
# channels


class KrausChannel:
    """CPTP map ``rho -> sum_k K_k rho K_k^dagger``.

    ``kraus`` has shape ``(n_ops, out_dim, in_dim)``. Trace preservation is
    checked on construction unless ``check=False``.
    """

    def __init__(self, kraus, check: bool = True, name: str = ""):
        ops = np.array(kraus, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] == 0:
            raise InvalidInput(f"Kraus operators must form a (k, out, in) array, got {ops.shape}")
        if not np.all(np.isfinite(ops)):
            raise InvalidInput("Kraus operators have non-finite entries")
        self.kraus = ops
        self.name = name
        if check:
            dev = self.tp_deviation()
            if dev > TP_TOL:
                raise InvalidInput(f"Kraus operators are not trace preserving (deviation {dev:.3e})")

    @property
    def in_dim(self) -> int:
        return self.kraus.shape[2]

    @property
    def out_dim(self) -> int:
        return self.kraus.shape[1]

    def __len__(self) -> int:
        return self.kraus.shape[0]

    def __repr__(self) -> str:
        return f"KrausChannel({self.name or 'unnamed'}, {len(self)} ops, {self.in_dim}->{self.out_dim})"

    def __call__(self, rho) -> np.ndarray:
        rho = np.asarray(rho)
        if rho.shape != (self.in_dim, self.in_dim):
            raise InvalidInput(f"expected a {self.in_dim}x{self.in_dim} input, got {rho.shape}")
        k = self.kraus
        return np.einsum("kij,jl,kml->im", k, rho, k.conj())

    def adjoint(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.out_dim, self.out_dim):
            raise InvalidInput(f"expected a {self.out_dim}x{self.out_dim} input, got {x.shape}")
        k = self.kraus
        return np.einsum("kji,jl,klm->im", k.conj(), x, k)

    def tp_deviation(self) -> float:
        """``||sum_k K_k^dagger K_k - I||_F``."""
        s = np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)
        return float(np.linalg.norm(s - np.eye(self.in_dim)))

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ij |i><j| (x) E[|i><j|]``."""
        d = self.in_dim
        blocks = np.zeros((d, d, self.out_dim, self.out_dim), dtype=complex)
        for i in range(d):
            for j in range(d):
                unit = np.zeros((d, d), dtype=complex)
                unit[i, j] = 1
                blocks[i, j] = self(unit)
        return blocks.transpose(0, 2, 1, 3).reshape(d * self.out_dim, d * self.out_dim)

    def superoperator(self) -> np.ndarray:
        """Matrix acting on row-major ``vec(rho)``."""
        return np.einsum("kij,klm->iljm", self.kraus, self.kraus.conj()).reshape(
            self.out_dim**2, self.in_dim**2
        )

    @classmethod
    def from_stochastic(cls, e, name: str = "") -> "KrausChannel":
        """Classical channel embedded on diagonal states, ``K_yx = sqrt(E(y|x)) |y><x|``."""
        e = np.asarray(e, dtype=float)
        ops = []
        for y in range(e.shape[0]):
            for x in range(e.shape[1]):
                if e[y, x] > 0:
                    k = np.zeros(e.shape, dtype=complex)
                    k[y, x] = np.sqrt(e[y, x])
                    ops.append(k)
        return cls(ops, name=name or "classical")


def apply_channel(e: KrausChannel, rho) -> np.ndarray:
    return e(as_density(rho))


def apply_adjoint(e: KrausChannel, x) -> np.ndarray:
    return e.adjoint(check_hermitian(x))


def unitary_channel(u) -> KrausChannel:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1] or not np.allclose(u.conj().T @ u, np.eye(len(u)), atol=1e-10):
        raise InvalidInput("U must be unitary")
    return KrausChannel([u], name="unitary")


def erasure_channel(sigma, in_dim: int | None = None) -> KrausChannel:
    """Replace every input by ``sigma``."""
    sigma = as_density(sigma, name="sigma")
    d_in = sigma.shape[0] if in_dim is None else int(in_dim)
    w, v = np.linalg.eigh(sigma)
    ops = []
    for k in range(len(w)):
        if w[k] <= 0:
            continue
        for j in range(d_in):
            op = np.zeros((sigma.shape[0], d_in), dtype=complex)
            op[:, j] = np.sqrt(w[k]) * v[:, k]
            ops.append(op)
    return KrausChannel(ops, name="erasure")


def _check_lambda(lam):
    lam = float(lam)
    if not 0 <= lam <= 1:
        raise InvalidInput(f"lambda must lie in [0, 1], got {lam}")
    return lam


def depolarising_channel(lam: float) -> KrausChannel:
    """Qubit depolariser ``lam I/2 + (1 - lam) rho``."""
    lam = _check_lambda(lam)
    ops = [np.sqrt(1 - 0.75 * lam) * np.eye(2)] + [np.sqrt(lam / 4) * s for s in PAULI]
    return KrausChannel(ops, name=f"depolarising({lam:g})")


def dephasing_channel(lam: float) -> KrausChannel:
    lam = _check_lambda(lam)
    z0 = np.array([[1, 0], [0, np.sqrt(1 - lam)]])
    z1 = np.array([[0, 0], [0, np.sqrt(lam)]])
    return KrausChannel([z0, z1], name=f"dephasing({lam:g})")


def amplitude_damping_channel(lam: float) -> KrausChannel:
    lam = _check_lambda(lam)
    a0 = np.array([[1, 0], [0, np.sqrt(1 - lam)]])
    a1 = np.array([[0, np.sqrt(lam)], [0, 0]])
    return KrausChannel([a0, a1], name=f"amplitude_damping({lam:g})")


def random_channel(in_dim: int, seed: int, out_dim: int | None = None, env_dim: int = 2) -> KrausChannel:
    """Stinespring channel from a Haar-random isometry into ``out_dim * env_dim``."""
    out_dim = in_dim if out_dim is None else int(out_dim)
    rng = np.random.default_rng(seed)
    u = random_unitary(out_dim * env_dim, rng)
    if out_dim * env_dim < in_dim:
        raise InvalidInput("environment too small for an isometry")
    v = u[:, :in_dim].reshape(env_dim, out_dim, in_dim)
    return KrausChannel(v, name=f"random(seed={seed})")


_QUBIT_FAMILIES = {
    "unitary": unitary_channel,
    "erasure": erasure_channel,
    "depolarising": depolarising_channel,
    "dephasing": dephasing_channel,
    "amplitude_damping": amplitude_damping_channel,
}


def make_qubit_channel(kind: str, *args, **params) -> KrausChannel:
    try:
        factory = _QUBIT_FAMILIES[kind.replace("-", "_")]
    except KeyError:
        raise InvalidInput(f"unknown channel kind {kind!r}; choose from {sorted(_QUBIT_FAMILIES)}") from None
    return factory(*args, **params)


# ---------------------------------------------------------------------------
# Petz map


def gamma_operator(e: KrausChannel, gamma, omega) -> np.ndarray:
    """``E[gamma]^{-1/2} omega E[gamma]^{-1/2}``."""
    inv = matrix_inv_sqrt(e(as_positive(gamma, name="gamma")))
    return hermitian_part(inv @ check_hermitian(omega) @ inv)


def petz_map(e: KrausChannel, gamma, omega) -> np.ndarray:
    """Petz recovery of ``omega`` for channel ``e`` and reference ``gamma``.

    ``gamma`` may be any positive operator (the map is scale invariant) and
    ``omega`` any Hermitian operator (the map is linear in it).

    Raises
    ------
    RankDeficient
        If ``E[gamma]`` fails the eigenvalue floor.
    """
    gamma = as_positive(gamma, name="gamma")
    big = gamma_operator(e, gamma, omega)
    root = matrix_sqrt(gamma)
    return hermitian_part(root @ e.adjoint(big) @ root)


@dataclass
class QuantumHackSolution:
    prior: np.ndarray
    residual: float
    iterations: int
    status: QStatus
    plateau: bool = False
    boundary: bool = False

    @property
    def converged(self) -> bool:
        return self.status is QStatus.CONVERGED


def _floor_breach(gamma, residual, it) -> QuantumHackSolution:
    # At the start the singularity comes from the inputs themselves. Later it
    # means the iterates ran off to the boundary of the state space, which is
    # how infeasible instances fail to converge.
    if it == 0:
        return QuantumHackSolution(gamma, residual, it, QStatus.RANK_DEFICIENT)
    return QuantumHackSolution(gamma, residual, it, QStatus.MAX_ITERATIONS, boundary=True)


def quantum_hack_step(e: KrausChannel, gamma, rho, omega) -> np.ndarray:
    """One fixed-point update: solve ``M E^dagger[Gamma] M = rho``, return ``M^2 / Tr``."""
    big = gamma_operator(e, gamma, omega)
    rho_sqrt, rho_inv_sqrt = sqrt_and_inv_sqrt(as_density(rho))
    m = sandwich_from_roots(e.adjoint(big), rho_sqrt, rho_inv_sqrt)
    new = hermitian_part(m @ m)
    return new / np.trace(new).real


def quantum_prior_hack(
    e: KrausChannel,
    rho,
    omega,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    seed: int | None = None,
) -> QuantumHackSolution:
    """Find ``gamma`` with ``petz_map(e, gamma, omega) = rho``.

    Fixed-point iteration: with ``Gamma_i = E[gamma_i]^{-1/2} omega E[gamma_i]^{-1/2}``,
    ``sqrt(gamma_{i+1})`` solves ``M E^dagger[Gamma_i] M = rho``. The iterate is
    trace-normalised each step. Starts from ``I/d``, or a Ginibre-random state
    when ``seed`` is given. Stops on ``||Petz - rho||_F < tol``, on a residual
    plateau (50 iterations, relative improvement below 1e-13), at
    ``max_iter``, or when an operator falls below the rank floor.

    A floor breach by ``rho`` or by the starting point gives ``RANK_DEFICIENT``.
    A breach by a later iterate gives ``MAX_ITERATIONS`` with ``boundary`` set.
    """
    rho = as_density(rho, name="rho")
    omega = as_density(omega, name="omega")
    if rho.shape[0] != e.in_dim or omega.shape[0] != e.out_dim:
        raise InvalidInput("state dimensions do not match the channel")
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    d = e.in_dim
    if seed is None:
        gamma = np.eye(d, dtype=complex) / d
    else:
        gamma = random_density(d, np.random.default_rng(seed))
    try:
        rho_sqrt, rho_inv_sqrt = sqrt_and_inv_sqrt(rho)
    except RankDeficient:
        return QuantumHackSolution(gamma, np.inf, 0, QStatus.RANK_DEFICIENT)

    root = matrix_sqrt(gamma)
    history: list[float] = []
    residual = np.inf
    it = 0
    while True:
        try:
            inv = matrix_inv_sqrt(e(gamma))
            pulled = hermitian_part(e.adjoint(hermitian_part(inv @ omega @ inv)))
        except RankDeficient:
            return _floor_breach(gamma, residual, it)
        residual = float(np.linalg.norm(root @ pulled @ root - rho))
        if residual < tol:
            return QuantumHackSolution(gamma, residual, it, QStatus.CONVERGED)
        history.append(residual)
        if _plateaued(history, PLATEAU_WINDOW, PLATEAU_RTOL):
            return QuantumHackSolution(gamma, residual, it, QStatus.MAX_ITERATIONS, plateau=True)
        if it >= max_iter:
            return QuantumHackSolution(gamma, residual, it, QStatus.MAX_ITERATIONS)
        try:
            m = sandwich_from_roots(pulled, rho_sqrt, rho_inv_sqrt)
        except RankDeficient:
            return _floor_breach(gamma, residual, it)
        root = m / np.sqrt(np.trace(m @ m).real)
        gamma = hermitian_part(root @ root)
        it += 1


def positivity_improving_check(e: KrausChannel, n_samples: int, seed: int) -> tuple[float, bool]:
    """Smallest output eigenvalue over Haar-random pure inputs.

    The flag is a heuristic: sampling cannot prove positivity improvement.
    """
    if n_samples < 1:
        raise InvalidInput("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    lowest = np.inf
    for _ in range(n_samples):
        out = e(random_pure(e.in_dim, rng))
        lowest = min(lowest, float(np.linalg.eigvalsh(hermitian_part(out))[0]))
    return lowest, lowest > RANK_EPS


# ---------------------------------------------------------------------------
# Schrödinger bridges


@dataclass
class BridgeResult:
    bridge: KrausChannel | None
    potentials: dict[str, np.ndarray]
    forward_residual: float
    tp_residual: float
    iterations: int
    status: QStatus
    duality_residual: float | None = None
    prior: np.ndarray | None = field(default=None)

    @property
    def converged(self) -> bool:
        return self.status is QStatus.CONVERGED


def _check_problem(e, rho, omega):
    rho = as_density(rho, name="rho")
    omega = as_density(omega, name="omega")
    if rho.shape[0] != e.in_dim or omega.shape[0] != e.out_dim:
        raise InvalidInput("state dimensions do not match the channel")
    return rho, omega


def _tp_residual(ch: KrausChannel) -> float:
    return float(np.linalg.norm(ch.adjoint(np.eye(ch.out_dim)) - np.eye(ch.in_dim)))


def hermitian_bridge(e: KrausChannel, big_xi) -> KrausChannel:
    """``sqrt(Xi) E[ A^{-1/2} . A^{-1/2} ] sqrt(Xi)`` with ``A = E^dagger[Xi]``."""
    xs = matrix_sqrt(big_xi)
    a_is = matrix_inv_sqrt(hermitian_part(e.adjoint(big_xi)))
    return KrausChannel(np.einsum("ij,kjl,lm->kim", xs, e.kraus, a_is), check=False, name="hermitian_bridge")


def _breach_status(it: int) -> QStatus:
    return QStatus.RANK_DEFICIENT if it == 0 else QStatus.MAX_ITERATIONS


def qsb_hermitian(
    e: KrausChannel,
    rho,
    omega,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> BridgeResult:
    """Hermitian-potential quantum Schrödinger bridge.

    Iterates ``Xi`` from the identity: ``xi = A^{-1/2} rho A^{-1/2}`` with
    ``A = E^dagger[Xi]``, then ``sqrt(Xi_next)`` solves ``M E[xi] M = omega``.
    ``Xi`` is normalised to trace ``out_dim`` (the bridge is scale invariant).
    Floor breaches follow the same rule as ``quantum_prior_hack``.
    """
    rho, omega = _check_problem(e, rho, omega)
    big_xi = np.eye(e.out_dim, dtype=complex)
    try:
        om_sqrt, om_inv_sqrt = sqrt_and_inv_sqrt(omega)
    except RankDeficient:
        return BridgeResult(None, {}, np.inf, np.inf, 0, QStatus.RANK_DEFICIENT)

    history: list[float] = []
    it = 0
    fwd = tp = np.inf
    while True:
        try:
            a_is = matrix_inv_sqrt(hermitian_part(e.adjoint(big_xi)))
            small_xi = hermitian_part(a_is @ rho @ a_is)
            pushed = hermitian_part(e(small_xi))
            bridge = hermitian_bridge(e, big_xi)
        except RankDeficient:
            return BridgeResult(None, {"Xi": big_xi}, fwd, tp, it, _breach_status(it))
        fwd = float(np.linalg.norm(bridge(rho) - omega))
        tp = _tp_residual(bridge)
        pots = {"Xi": big_xi, "xi": small_xi}
        if fwd < tol and tp < tol:
            return BridgeResult(bridge, pots, fwd, tp, it, QStatus.CONVERGED)
        history.append(fwd)
        if _plateaued(history, PLATEAU_WINDOW, PLATEAU_RTOL) or it >= max_iter:
            return BridgeResult(bridge, pots, fwd, tp, it, QStatus.MAX_ITERATIONS)
        try:
            m = sandwich_from_roots(pushed, om_sqrt, om_inv_sqrt)
        except RankDeficient:
            return BridgeResult(bridge, pots, fwd, tp, it, _breach_status(it))
        big_xi = hermitian_part(m @ m)
        big_xi *= e.out_dim / np.trace(big_xi).real
        it += 1


def inference_consistent_bridge(e: KrausChannel, rho, omega, gamma) -> KrausChannel:
    """Bridge with Kraus operators ``beta K_k alpha^{-1}``.

    ``alpha = sqrt(rho) gamma^{-1/2}`` and ``beta = sqrt(omega) E[gamma]^{-1/2}``.
    """
    beta = matrix_sqrt(omega) @ matrix_inv_sqrt(e(gamma))
    alpha_inv = matrix_sqrt(gamma) @ matrix_inv_sqrt(rho)
    return KrausChannel(np.einsum("ij,kjl,lm->kim", beta, e.kraus, alpha_inv), check=False, name="ic_bridge")


def petz_duality_residual(bridge: KrausChannel, rho, e: KrausChannel, gamma) -> float:
    """Max Frobenius gap between the bridge's Petz map at ``rho`` and ``e``'s at
    ``gamma``, over a complete Hermitian basis."""
    return max(
        float(np.linalg.norm(petz_map(bridge, rho, x) - petz_map(e, gamma, x)))
        for x in hermitian_basis(e.out_dim)
    )


def qsb_inference_consistent(
    e: KrausChannel,
    rho,
    omega,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    seed: int | None = None,
    hack_tol: float = 1e-12,
) -> BridgeResult:
    """Inference-consistent bridge built from a hacked prior.

    Solves the prior-hacking problem to ``hack_tol`` (the unitality defect of
    the bridge is the hacking residual conjugated by ``rho^{-1/2}``), then
    assembles the bridge and checks forward map, unitality and Petz duality.
    """
    rho, omega = _check_problem(e, rho, omega)
    sol = quantum_prior_hack(e, rho, omega, tol=min(tol, hack_tol), max_iter=max_iter, seed=seed)
    if not sol.converged:
        return BridgeResult(None, {"gamma": sol.prior}, np.inf, np.inf, sol.iterations, sol.status, prior=sol.prior)
    gamma = sol.prior
    try:
        bridge = inference_consistent_bridge(e, rho, omega, gamma)
        duality = petz_duality_residual(bridge, rho, e, gamma)
    except RankDeficient:
        return BridgeResult(None, {"gamma": gamma}, np.inf, np.inf, sol.iterations, QStatus.RANK_DEFICIENT, prior=gamma)
    fwd = float(np.linalg.norm(bridge(rho) - omega))
    tp = _tp_residual(bridge)
    pots = {
        "alpha": matrix_sqrt(rho) @ matrix_inv_sqrt(gamma),
        "beta": matrix_sqrt(omega) @ matrix_inv_sqrt(e(gamma)),
        "gamma": gamma,
    }
    ok = fwd < tol and tp < tol and duality < tol
    status = QStatus.CONVERGED if ok else QStatus.MAX_ITERATIONS
    return BridgeResult(bridge, pots, fwd, tp, sol.iterations, status, duality_residual=duality, prior=gamma)


def substituted_bridge_mismatch(e: KrausChannel, rho, omega, gamma) -> float:
    """``||F[rho] - omega||_F`` for the Hermitian bridge built with ``Xi`` replaced
    by the hacking operator ``Gamma = gamma_operator(e, gamma, omega)``.

    Vanishes when ``omega`` commutes with ``E[gamma]`` and ``rho`` with
    ``gamma``; generically it does not.
    """
    rho, omega = _check_problem(e, rho, omega)
    big = gamma_operator(e, gamma, omega)
    bridge = hermitian_bridge(e, big)
    return float(np.linalg.norm(bridge(rho) - omega))


# ---------------------------------------------------------------------------
# closed forms


def depolarising_petz_bloch(r, s: float, lam: float) -> np.ndarray:
    """Bloch vector of the depolariser's Petz map for a prior with Bloch vector
    ``r`` and evidence ``omega`` with Bloch vector ``(0, 0, s)``.
    """
    r = np.asarray(r, dtype=float)
    lam = _check_lambda(lam)
    norm = float(np.linalg.norm(r))
    if r.shape != (3,) or norm > 1 + 1e-12 or abs(s) > 1 + 1e-12:
        raise InvalidInput("need |r| <= 1 and |s| <= 1")
    norm = min(norm, 1.0)
    mu_p, mu_m = (1 + norm) / 2, (1 - norm) / 2
    a_p, a_m = (1 + norm * (1 - lam)) / 2, (1 - norm * (1 - lam)) / 2
    if a_m <= 0:
        raise InvalidInput("undefined for a pure prior through the identity channel")
    n = r / norm if norm > 0 else np.array([0.0, 0.0, 1.0])
    nz = n[2]
    zhat = np.array([0.0, 0.0, 1.0])
    t_p, t_m = mu_p / a_p, mu_m / a_m
    first = 0.5 * (1 - lam) * ((t_p - t_m) + s * nz * (np.sqrt(t_p) - np.sqrt(t_m)) ** 2) * n
    second = (1 - lam) * s * np.sqrt(t_p * t_m) * zhat
    third = lam * (1 - norm * nz * s * (1 - lam)) / (1 - (1 - lam) ** 2 * norm**2) * r
    return first + second + third


def dephasing_feasible(rho, omega, atol: float = 1e-10) -> bool:
    """Hackability through the completely dephasing channel for a decoherent
    target: possible iff ``rho`` and ``omega`` share their diagonal."""
    rho = as_density(rho, name="rho")
    omega = as_density(omega, name="omega")
    off = rho - np.diag(np.diag(rho))
    if np.max(np.abs(off)) > atol:
        raise NotDecoherent("rho has off-diagonal weight")
    return bool(np.allclose(np.diag(rho), np.diag(omega), rtol=0, atol=atol))
