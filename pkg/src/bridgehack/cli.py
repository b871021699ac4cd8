"""``bridgehack`` command-line interface.

Every command prints (or writes to ``--out``) one JSON document or CSV table.
Exit codes: 0 success or feasible, 1 input error, 2 non-convergence or
infeasible, 3 singularity or rank deficiency. Log verbosity follows the
``BRIDGEHACK_LOG`` environment variable (quiet, info, debug); logs go to
stderr.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import classical, imaging, io, quantum
from .errors import DivisionSingularity, InvalidInput, RankDeficient

log = logging.getLogger("bridgehack")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_FAILED = 2
EXIT_SINGULAR = 3

_LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

_CLASSICAL_EXIT = {
    classical.Status.CONVERGED: EXIT_OK,
    classical.Status.MAX_ITERATIONS: EXIT_FAILED,
    classical.Status.SINGULAR: EXIT_SINGULAR,
}
_QUANTUM_EXIT = {
    quantum.QStatus.CONVERGED: EXIT_OK,
    quantum.QStatus.MAX_ITERATIONS: EXIT_FAILED,
    quantum.QStatus.RANK_DEFICIENT: EXIT_SINGULAR,
}


def _configure_logging():
    name = os.environ.get("BRIDGEHACK_LOG", "quiet").lower()
    level = _LOG_LEVELS.get(name)
    if level is None:
        raise InvalidInput(f"BRIDGEHACK_LOG must be one of {sorted(_LOG_LEVELS)}, got {name!r}")
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)
    log.propagate = False


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# loading helpers


def _stochastic(path):
    doc = io.load_channel(path)
    if doc.kind != "stochastic":
        raise InvalidInput(f"{path}: classical commands need a stochastic channel")
    return doc.data


def _probability(path):
    doc = io.load_state(path)
    if doc.kind != "probability":
        raise InvalidInput(f"{path}: expected a probability vector")
    return doc.data


def _kraus(path):
    """Kraus channel; a stochastic document is embedded on diagonal states."""
    doc = io.load_channel(path)
    if doc.kind == "stochastic":
        return quantum.KrausChannel.from_stochastic(doc.data, name=doc.name)
    return doc.data


def _density(path):
    """Density matrix; a probability document becomes a diagonal state."""
    doc = io.load_state(path)
    if doc.kind == "probability":
        return np.diag(doc.data).astype(complex)
    return doc.data


# ---------------------------------------------------------------------------
# commands


def cmd_classical_hack(args) -> int:
    e, p, q = _stochastic(args.channel), _probability(args.target), _probability(args.evidence)
    sol = classical.prior_hack_ras(e, p, q, tol=args.tol, max_iter=args.max_iters, seed=args.seed)
    log.info("status %s after %d iterations, residual %.3e", sol.status.value, sol.iterations, sol.residual)
    if sol.plateau:
        log.warning("residual plateaued at %.3e; the instance is likely infeasible", sol.residual)
    _emit(io.write_json(io.classical_solution_doc(sol)), args.out)
    return _CLASSICAL_EXIT[sol.status]


def cmd_classical_feasible(args) -> int:
    e, p, q = _stochastic(args.channel), _probability(args.target), _probability(args.evidence)
    verdict = classical.check_feasibility(e, p, q)
    log.info("feasible: %s", verdict.feasible)
    _emit(io.write_json(io.verdict_doc(verdict)), args.out)
    return EXIT_OK if verdict.feasible else EXIT_FAILED


def classical_bridge_document(e, p, q, tol, max_iter, seed) -> dict:
    """Run the hack, then build the bridge and its residuals when it converged."""
    sol = classical.prior_hack_ras(e, p, q, tol=tol, max_iter=max_iter, seed=seed)
    if not sol.converged:
        return io.classical_bridge_doc(sol)
    bridge = classical.bridge_from_prior(e, sol, p, q)
    forward = float(np.sum(np.abs(bridge @ p - q)))
    try:
        gap = classical.bayes_inverse(bridge, p) - classical.bayes_inverse(e, sol.prior)
        duality = float(np.max(np.abs(gap)))
    except DivisionSingularity:
        duality = None
    return io.classical_bridge_doc(sol, bridge, forward, duality)


def cmd_classical_bridge(args) -> int:
    e, p, q = _stochastic(args.channel), _probability(args.target), _probability(args.evidence)
    doc = classical_bridge_document(e, p, q, args.tol, args.max_iters, args.seed)
    _emit(io.write_json(doc), args.out)
    return _CLASSICAL_EXIT[classical.Status(doc["status"])]


def cmd_quantum_hack(args) -> int:
    e, rho, omega = _kraus(args.channel), _density(args.target), _density(args.evidence)
    sol = quantum.quantum_prior_hack(e, rho, omega, tol=args.tol, max_iter=args.max_iters, seed=args.seed)
    log.info("status %s after %d iterations, residual %.3e", sol.status.value, sol.iterations, sol.residual)
    _emit(io.write_json(io.quantum_solution_doc(sol)), args.out)
    return _QUANTUM_EXIT[sol.status]


def cmd_quantum_bridge(args) -> int:
    e, rho, omega = _kraus(args.channel), _density(args.target), _density(args.evidence)
    if args.mode == "hermitian":
        res = quantum.qsb_hermitian(e, rho, omega, tol=args.tol, max_iter=args.max_iters)
    else:
        res = quantum.qsb_inference_consistent(e, rho, omega, tol=args.tol, max_iter=args.max_iters, seed=args.seed)
    log.info("status %s, forward %.3e, tp %.3e", res.status.value, res.forward_residual, res.tp_residual)
    _emit(io.write_json(io.quantum_bridge_doc(res, args.mode)), args.out)
    return _QUANTUM_EXIT[res.status]


def cmd_image(args) -> int:
    seed = 0 if args.seed is None else args.seed
    if args.kind == "classical":
        if args.entropy is None:
            raise InvalidInput("classical images need --entropy")
        samples = imaging.hack_image_classical(
            _stochastic(args.channel), _probability(args.evidence), args.entropy, args.samples, seed
        )
    else:
        if args.purity is None:
            raise InvalidInput("quantum images need --purity")
        samples = imaging.hack_image_quantum(
            _kraus(args.channel), _density(args.evidence), args.purity, args.samples, seed
        )
    flagged = sum(s.flag != "ok" for s in samples)
    if flagged:
        log.warning("%d of %d samples could not be evaluated", flagged, len(samples))
    header, rows = io.image_rows(samples, args.kind)
    _emit(io.write_csv(header, rows), args.out)
    return EXIT_OK


def _parse_vector(text: str, dim=None):
    if text == "uniform":
        if dim is None:
            raise InvalidInput("'uniform' needs --dim")
        return np.full(dim, 1.0 / dim)
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise InvalidInput(f"cannot parse vector {text!r}") from exc


def _parse_ints(text: str):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise InvalidInput(f"cannot parse integer list {text!r}") from exc


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise InvalidInput(f"{args.kind} needs " + ", ".join("--" + m.replace("_", "-") for m in missing))


def build_channel(args) -> io.ChannelDocument:
    kind = args.kind.replace("_", "-")
    if kind == "permutation":
        _require(args, "perm")
        return io.ChannelDocument("stochastic", classical.permutation_channel(_parse_ints(args.perm)), kind)
    if kind == "erasure":
        _require(args, "target")
        target = _parse_vector(args.target, args.dim)
        return io.ChannelDocument("stochastic", classical.erasure_channel(target, args.in_dim), kind)
    if kind == "bistochastic":
        _require(args, "dim", "mix")
        return io.ChannelDocument("stochastic", classical.bistochastic_channel(args.dim, args.mix), kind)
    if kind == "absorber":
        _require(args, "dim", "absorbing", "rate")
        e = classical.absorber_channel(args.dim, _parse_ints(args.absorbing), args.rate)
        return io.ChannelDocument("stochastic", e, kind)
    if kind == "block-symmetric":
        _require(args, "flip")
        dim = 3 if args.dim is None else args.dim
        block = (0, 1) if args.block is None else _parse_ints(args.block)
        return io.ChannelDocument("stochastic", classical.block_symmetric_channel(args.flip, dim, block), kind)
    if kind == "random-positive":
        _require(args, "dim", "seed")
        e = classical.random_positive_channel(args.dim, args.seed, args.out_dim)
        return io.ChannelDocument("stochastic", e, kind)
    if kind in ("depolarising", "dephasing", "amplitude-damping"):
        _require(args, "lam")
        ch = quantum.make_qubit_channel(kind, args.lam)
        return io.ChannelDocument("kraus", ch, ch.name)
    if kind == "random-kraus":
        _require(args, "dim", "seed")
        ch = quantum.random_channel(args.dim, args.seed, args.out_dim, args.env_dim)
        return io.ChannelDocument("kraus", ch, ch.name)
    raise InvalidInput(f"unknown channel kind {args.kind!r}")


def cmd_make_channel(args) -> int:
    _emit(io.save_channel(build_channel(args)), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _solver_flags(p, tol):
    p.add_argument("--tol", type=float, default=tol)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=None)


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bridgehack", description="Prior hacking and Schrödinger bridges.")
    sub = parser.add_subparsers(dest="command", required=True)

    def problem(name, func, help_text, tol=None):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("channel", help="channel document (JSON)")
        p.add_argument("target", help="conclusion state document: p or rho")
        p.add_argument("evidence", help="evidence state document: q or omega")
        if tol is not None:
            _solver_flags(p, tol)
        p.add_argument("--out", default=None)
        p.set_defaults(func=func)
        return p

    problem("classical-hack", cmd_classical_hack, "find a prior whose Bayes update maps q to p", 1e-10)
    problem("classical-feasible", cmd_classical_feasible, "decide classical hackability by subset enumeration")
    problem("classical-bridge", cmd_classical_bridge, "classical Schrödinger bridge from p to q", 1e-10)
    problem("quantum-hack", cmd_quantum_hack, "find a prior whose Petz map sends omega to rho", 1e-8)
    qb = problem("quantum-bridge", cmd_quantum_bridge, "quantum Schrödinger bridge from rho to omega", 1e-8)
    qb.add_argument("--mode", choices=["hermitian", "ic"], default="hermitian")

    img = sub.add_parser("image", help="sample a hacking image as CSV")
    img.add_argument("kind", choices=["classical", "quantum"])
    img.add_argument("channel")
    img.add_argument("evidence")
    img.add_argument("--entropy", type=float, default=None)
    img.add_argument("--purity", type=float, default=None)
    img.add_argument("--samples", type=int, default=100)
    img.add_argument("--seed", type=int, default=0)
    img.add_argument("--out", default=None)
    img.set_defaults(func=cmd_image)

    mk = sub.add_parser("make-channel", help="write a channel document for a named family")
    mk.add_argument("kind")
    mk.add_argument("--dim", type=int)
    mk.add_argument("--in-dim", type=int)
    mk.add_argument("--out-dim", type=int)
    mk.add_argument("--env-dim", type=int, default=2)
    mk.add_argument("--target", help="'uniform' or comma-separated probabilities")
    mk.add_argument("--perm", help="comma-separated permutation")
    mk.add_argument("--absorbing", help="comma-separated absorbing states")
    mk.add_argument("--block", help="comma-separated block states")
    mk.add_argument("--rate", type=float)
    mk.add_argument("--mix", type=float)
    mk.add_argument("--flip", type=float)
    mk.add_argument("--lambda", dest="lam", type=float)
    mk.add_argument("--seed", type=int)
    mk.add_argument("--out", default=None)
    mk.set_defaults(func=cmd_make_channel)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _configure_logging()
        return args.func(args)
    except InvalidInput as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (RankDeficient, DivisionSingularity) as exc:
        log.error("%s", exc)
        return EXIT_SINGULAR


if __name__ == "__main__":
    sys.exit(main())
