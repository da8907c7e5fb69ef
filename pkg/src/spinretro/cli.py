"""Command-line front end.

Exit codes: 0 success, 1 domain failure (violations, infeasible geometry,
failed checks), 2 usage or parse error.  ``--format json`` prints one JSON
object per line; every object has a ``record`` field naming its kind.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import published
from .audit import errata_check
from .construction import (
    ConstraintError,
    InfeasibleError,
    axes_from_gram,
    axis_gram,
    construct_basis,
    feasibility,
    solve_coefficients,
    table_gram,
)
from .fileformat import ProtocolParseError, load_protocol
from .network import (
    CircuitParseError,
    NetworkProtocolBinding,
    apply,
    builtin_networks,
    end_to_end,
    parse_circuit,
    verify_measurement_mapping,
    verify_preparation,
)
from .protocol import (
    IncompleteBasisError,
    LookupTable,
    derive_table,
    enumerate_outcomes,
    exact_success_probability,
    run_trials,
    verify_protocol,
)
from .rng import DEFAULT_SEED

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


class Output:
    def __init__(self, fmt: str, stream=None):
        self.fmt = fmt
        self.stream = stream or sys.stdout

    def record(self, kind: str, human: str | None = None, /, **fields):
        if self.fmt == "json":
            self.stream.write(json.dumps(_jsonable({"record": kind, **fields}), sort_keys=True) + "\n")
        elif human is not None:
            self.stream.write(human + "\n")


def _fmt_c(z: complex) -> str:
    # adding 0.0 turns -0.0 into 0.0 so tiny negatives do not print as "-0.000"
    re, im = (round(v, 12) + 0.0 for v in (z.real, z.imag))
    return f"{re:+.12f}{im:+.12f}i"


# -- loading -------------------------------------------------------------

def _load_protocol(args):
    if args.builtin and args.path:
        raise UsageError("give either a file or --builtin, not both")
    if args.builtin:
        if args.builtin not in published.FACTORIES:
            raise UsageError(f"unknown builtin protocol {args.builtin!r}; choose from {', '.join(published.FACTORIES)}")
        protocol = published.builtin_protocol(args.builtin)
    elif args.path:
        try:
            protocol = load_protocol(args.path)
        except OSError as exc:
            raise UsageError(f"cannot read {args.path}: {exc.strerror}") from None
        except (ProtocolParseError, ValueError) as exc:
            raise UsageError(f"{args.path}: {exc}") from None
    else:
        raise UsageError("no protocol given; pass a file or --builtin NAME")
    if getattr(args, "table", "printed") == "consistent":
        table = derive_table(protocol, args.tol)
        if table is None:
            raise InfeasibleError("no table is consistent with this state and basis")
        protocol = protocol.with_table(table)
    return protocol


def _table_lines(table: LookupTable) -> list[str]:
    return [f"  lambda_{j + 1}: {' '.join(r)}" for j, r in enumerate(table.rows())]


# -- verify --------------------------------------------------------------

def cmd_verify(args, out: Output) -> int:
    protocol = _load_protocol(args)
    rep = verify_protocol(protocol, args.tol)
    out.record("table", "look-up table (rows = outcomes, columns = axes):\n" + "\n".join(_table_lines(protocol.table)),
               protocol=protocol.name, rows=protocol.table.rows())
    out.record("verification", rep.summary(), protocol=protocol.name, ok=rep.ok,
               violations=len(rep.violations), warnings=len(rep.warnings),
               orthonormality_error=rep.orthonormality_error)
    for f in rep.violations:
        out.record("violation", None, **f.as_record())
    for f in rep.warnings:
        out.record("warning", None, **f.as_record())
    if not rep.ok and args.builtin in published.FACTORIES:
        _emit_audit(errata_check(args.builtin, args.tol), out)
    return EXIT_OK if rep.ok else EXIT_FAIL


# -- simulate ------------------------------------------------------------

def cmd_simulate(args, out: Output) -> int:
    if args.n < 0:
        raise UsageError("-n must be non-negative")
    protocol = _load_protocol(args)
    stats = run_trials(protocol, args.n, seed=args.seed, keep_records=args.records)
    exact = exact_success_probability(protocol)
    joint = enumerate_outcomes(protocol)
    rate = stats.success_rate
    out.record("simulation",
               f"protocol {protocol.name}: {stats.successes}/{stats.n_trials} correct"
               f" (sampled rate {'n/a' if stats.n_trials == 0 else f'{rate:.6f}'}, exact {exact:.12f}), seed {args.seed}",
               protocol=protocol.name, seed=args.seed, trials=stats.n_trials, successes=stats.successes,
               success_rate=None if stats.n_trials == 0 else rate, exact_success=exact)
    for l in range(protocol.n_axes):
        n_l = int(stats.axis_trials[l])
        s_l = int(stats.axis_successes[l])
        p_exact = float(joint[l].sum())
        out.record("axis",
                   f"  axis {l + 1}: {s_l}/{n_l} correct, chosen {n_l} times (expected {p_exact * stats.n_trials:.1f})",
                   axis=l + 1, trials=n_l, successes=s_l, expected_fraction=p_exact)
    if stats.n_trials:
        freq = stats.joint_counts / stats.n_trials
        sigma = np.sqrt(joint * (1 - joint) / stats.n_trials)
        z = np.where(sigma > 0, np.abs(freq - joint) / np.where(sigma > 0, sigma, 1), 0.0)
        out.record("exact_vs_sampled", f"  largest deviation from exact joint distribution: {z.max():.2f} sigma",
                   max_sigma=float(z.max()))
    if args.records:
        for r in stats.records:
            out.record("trial", None, index=r.index, axis=r.chosen_axis + 1, bob=r.bob_outcome,
                       alice=r.alice_outcome + 1, answers=list(r.retrodictions), correct=r.correct)
    return EXIT_OK if stats.successes == stats.n_trials else EXIT_FAIL


# -- circuit -------------------------------------------------------------

def _load_circuit(args):
    if args.builtin and args.path:
        raise UsageError("give either a file or --builtin, not both")
    if args.builtin:
        nets = builtin_networks()
        if args.builtin not in nets:
            raise UsageError(f"unknown builtin network {args.builtin!r}; choose from {', '.join(nets)}")
        return nets[args.builtin]
    if not args.path:
        raise UsageError("no circuit given; pass a file or --builtin NAME")
    try:
        with open(args.path, encoding="utf-8") as fh:
            return parse_circuit(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {args.path}: {exc.strerror}") from None
    except (CircuitParseError, ValueError) as exc:
        raise UsageError(f"{args.path}: {exc}") from None


def cmd_circuit(args, out: Output) -> int:
    loaded = _load_circuit(args)
    circuit = loaded.circuit if isinstance(loaded, NetworkProtocolBinding) else loaded
    if args.action == "run":
        bits = args.input or "0" * circuit.n_qubits
        if len(bits) != circuit.n_qubits or set(bits) - {"0", "1"}:
            raise UsageError(f"--input must be {circuit.n_qubits} bits")
        state = np.zeros(circuit.dim, dtype=complex)
        state[int(bits, 2)] = 1.0
        final = apply(circuit, state)
        for k, amp in enumerate(final):
            label = format(k, f"0{circuit.n_qubits}b")
            out.record("amplitude", f"|{label}>  {_fmt_c(amp)}", basis=label, amplitude=amp)
        return EXIT_OK

    if isinstance(loaded, NetworkProtocolBinding):
        binding = loaded
        if args.protocol:
            raise UsageError("--protocol only applies to circuit files")
    else:
        if circuit.split is None:
            raise UsageError("circuit check needs a BOB line separating preparation and measurement")
        if not args.protocol:
            raise UsageError("circuit check on a file needs --protocol NAME for the expected state and basis")
        if args.protocol not in published.FACTORIES:
            raise UsageError(f"unknown builtin protocol {args.protocol!r}")
        try:
            binding = NetworkProtocolBinding(args.path, circuit, published.builtin_protocol(args.protocol))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    prep = verify_preparation(binding, args.tol)
    mapping = verify_measurement_mapping(binding, binding.basis, args.tol)
    checks = prep.checks() + mapping.checks(circuit.n_qubits)
    table = None
    if args.table == "consistent":
        table = derive_table(binding.protocol)
    e2e = end_to_end(binding, table)
    for c in checks:
        extra = {k: v for k, v in c.detail.items() if k in ("outcome", "target")}
        human = f"{'PASS' if c.passed else 'FAIL'} {c.name} residual {c.residual:.3e}"
        if extra:
            human += " " + " ".join(f"{k}={v}" for k, v in extra.items())
        out.record("check", human, **c.as_record())
    out.record("check",
               f"{'PASS' if e2e.consistent else 'FAIL'} end_to_end_consistency "
               f"(network readout violations {len(e2e.violations)}, protocol verifier {len(e2e.reference)})",
               name="end_to_end_consistency", passed=e2e.consistent, residual=0.0 if e2e.consistent else 1.0,
               network_violations=len(e2e.violations), verifier_violations=len(e2e.reference))
    ok = all(c.passed for c in checks) and e2e.consistent
    return EXIT_OK if ok else EXIT_FAIL


# -- construct -----------------------------------------------------------

def _read_matrix(path: str) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            rows = [line.split("#", 1)[0].split() for line in fh]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    rows = [r for r in rows if r]
    try:
        m = np.array([[float(x) for x in r] for r in rows])
    except ValueError:
        raise UsageError(f"{path}: malformed number") from None
    if m.ndim != 2:
        raise UsageError(f"{path}: rows have different lengths")
    return m


def _read_table(args) -> LookupTable:
    if args.table_builtin:
        tables = {"orthogonal": published.ORTHOGONAL_TABLE, "m4": published.M4_TABLE, "m3": published.M3_TABLE}
        return tables[args.table_builtin]
    if not args.table_file:
        raise UsageError("give a table file or --table-builtin")
    try:
        with open(args.table_file, encoding="utf-8") as fh:
            rows = [line.split("#", 1)[0].strip() for line in fh]
        return LookupTable.from_rows([r for r in rows if r])
    except OSError as exc:
        raise UsageError(f"cannot read {args.table_file}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(f"{args.table_file}: {exc}") from None


def _parse_floats(text: str, k: int | None, what: str) -> np.ndarray:
    try:
        vals = np.array([float(t) for t in text.replace(",", " ").split()])
    except ValueError:
        raise UsageError(f"malformed {what}") from None
    if k is not None and vals.size != k:
        raise UsageError(f"{what} needs {k} values, got {vals.size}")
    return vals


def cmd_construct(args, out: Output) -> int:
    table = _read_table(args)
    k, m = table.n_outcomes, table.n_axes
    sources = [x for x in (args.gram, args.axes, args.b) if x]
    if len(sources) != 1:
        raise UsageError("give exactly one of --gram, --axes, --b")
    axes = None
    if args.axes:
        axes = _read_matrix(args.axes)
        if axes.shape != (m, 3):
            raise UsageError(f"axes file must have {m} rows of 3 numbers")
    verdict = feasibility(m, axes) if (m != 4 or axes is not None) else None
    if verdict is not None and not verdict.feasible:
        out.record("infeasible", f"infeasible: {verdict.reason}", reason=verdict.reason)
        return EXIT_FAIL
    if args.b:
        b = np.full(k, 1 / np.sqrt(k)) if args.b == "uniform" else _parse_floats(args.b, k, "--b")
        gram = table_gram(table, b)
        d = np.sqrt(np.clip(np.diag(gram), 0, None))
        if np.max(np.abs(d - 1)) > args.tol:
            out.record("infeasible", f"sum of b_j^2 is {float(np.sum(b ** 2)):.12g}, must be 1", sum_b2=float(np.sum(b**2)))
            return EXIT_FAIL
        axes = axes_from_gram(gram)
    else:
        gram = _read_matrix(args.gram) if args.gram else axis_gram(axes)
        if gram.shape != (m, m):
            raise UsageError(f"Gram matrix must be {m}x{m}")
        b = solve_coefficients(table, gram)
        if axes is None:
            axes = axes_from_gram(gram)
    verdict = feasibility(m, axes)
    if not verdict.feasible:
        out.record("infeasible", f"infeasible: {verdict.reason}", reason=verdict.reason)
        return EXIT_FAIL
    n_gen = (k // 2) ** 2 - 1
    kwargs = {}
    for name in ("theta_plus", "theta_minus"):
        val = getattr(args, name)
        if val:
            kwargs[name] = _parse_floats(val, n_gen, f"--{name.replace('_', '-')}")
    result = construct_basis(table, b, axes, lambda_plus=args.lambda_plus, lambda_minus=args.lambda_minus,
                             tol=args.tol, **kwargs)
    out.record("coefficients", "b = " + " ".join(f"{x:.12f}" for x in b), b=b)
    out.record("axes", "axes:\n" + "\n".join(f"  n_{l + 1} = ({n[0]:+.12f}, {n[1]:+.12f}, {n[2]:+.12f})"
                                             for l, n in enumerate(result.axes)),
               axes=result.axes, sum_norm=float(np.linalg.norm(result.axes.sum(axis=0))))
    out.record("initial_state", "psi = " + "  ".join(_fmt_c(z) for z in result.initial), amplitudes=result.initial)
    for j in range(k):
        vec = result.basis[:, j]
        out.record("basis_vector", f"phi_{j + 1} = " + "  ".join(_fmt_c(z) for z in vec), outcome=j + 1, amplitudes=vec)
    failures = 0
    for rec in result.constraints.records():
        passed = abs(rec["residual"]) <= args.tol or not rec.get("enforced", True)
        failures += not passed
        out.record("constraint", None, passed=passed, **rec)
    ortho = result.orthonormality_error()
    expansions = result.expansion_residuals()
    out.record("residuals",
               f"constraint residual {result.constraints.max_residual:.3e}, orthonormality {ortho:.3e}, "
               f"spin expansions {expansions.max():.3e}",
               constraint_max=result.constraints.max_residual, orthonormality=ortho, spin_expansion=expansions)
    ok = failures == 0 and ortho <= args.tol and expansions.max() <= args.tol
    if args.compare_paper:
        printed = np.column_stack(published.m4_basis())
        if printed.shape != result.basis.shape:
            raise UsageError("--compare-paper m4 needs a six-outcome table")
        for j in range(k):
            for i in range(k):
                d = abs(printed[i, j] - result.basis[i, j])
                if d > args.tol:
                    out.record("printed_diff", f"  phi_{j + 1}[{i}]: printed {_fmt_c(printed[i, j])} "
                                             f"constructed {_fmt_c(result.basis[i, j])}",
                               outcome=j + 1, entry=i, printed=printed[i, j], constructed=result.basis[i, j],
                               abs_diff=d)
        audit = errata_check("m4-symmetric", args.tol)
        for rec in audit.find("completion_diff") + audit.find("orthogonality") + audit.find("basis_norm"):
            if not rec.passed:
                out.record("printed_discrepancy", f"  {rec.check} {rec.subject}: {rec.message}", **rec.as_record())
    return EXIT_OK if ok else EXIT_FAIL


# -- audit ---------------------------------------------------------------

def _emit_audit(report, out: Output):
    bad = report.discrepancies
    out.record("audit", f"audit {report.protocol}: {len(bad)} discrepancies", protocol=report.protocol,
               discrepancies=len(bad))
    for rec in bad:
        out.record("discrepancy", f"  {rec.check} [{rec.subject}] residual {rec.residual:.3e}: {rec.message}",
                   protocol=report.protocol, **rec.as_record())


def cmd_audit(args, out: Output) -> int:
    names = args.names or list(published.FACTORIES)
    for n in names:
        if n not in published.FACTORIES:
            raise UsageError(f"unknown builtin protocol {n!r}")
    failed = False
    for n in names:
        rep = errata_check(n, args.tol)
        _emit_audit(rep, out)
        failed |= not rep.ok
    return EXIT_FAIL if failed else EXIT_OK


# -- argument parsing ----------------------------------------------------

def _tolerance(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("human", "json"), default="human")
    common.add_argument("--tol", type=_tolerance, default=1e-10, help="numerical tolerance (default 1e-10)")

    p = argparse.ArgumentParser(prog="spinretro", description="Spin retrodiction protocols: verify, simulate, build.")
    sub = p.add_subparsers(dest="command", required=True)

    def protocol_source(sp):
        sp.add_argument("path", nargs="?", help="protocol definition file")
        sp.add_argument("--builtin", help=f"one of {', '.join(published.FACTORIES)}")
        sp.add_argument("--table", choices=("printed", "consistent"), default="printed",
                        help="use the stored table or the one implied by state and basis")

    v = sub.add_parser("verify", parents=[common], help="check every retrodiction exhaustively")
    protocol_source(v)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo rounds")
    protocol_source(s)
    s.add_argument("-n", type=int, default=10000, help="number of trials")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"random seed (default {DEFAULT_SEED})")
    s.add_argument("--records", action="store_true", help="emit one record per trial")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("circuit", parents=[common], help="run or check a gate network")
    c.add_argument("action", choices=("run", "check"))
    c.add_argument("path", nargs="?", help="circuit file")
    c.add_argument("--builtin", help="vaa-network or singlet-network")
    c.add_argument("--input", help="computational input state as bits (run only)")
    c.add_argument("--protocol", help="builtin protocol supplying the expected state and basis (check on files)")
    c.add_argument("--table", choices=("printed", "consistent"), default="printed")
    c.set_defaults(func=cmd_circuit)

    k = sub.add_parser("construct", parents=[common], help="build a protocol from a table and geometry")
    k.add_argument("table_file", nargs="?", help="file with one row of +/- signs per outcome")
    k.add_argument("--table-builtin", choices=("orthogonal", "m4", "m3"))
    k.add_argument("--gram", help="file with the axis Gram matrix")
    k.add_argument("--axes", help="file with one axis (3 numbers) per line")
    k.add_argument("--b", help="coefficients b_j (comma separated) or 'uniform'")
    k.add_argument("--theta-plus", help="su(d) parameters for the +1 block")
    k.add_argument("--theta-minus", help="su(d) parameters for the -1 block")
    k.add_argument("--lambda-plus", type=float, default=0.0)
    k.add_argument("--lambda-minus", type=float, default=0.0)
    k.add_argument("--compare-paper", choices=("m4",), help="diff against the printed basis")
    k.set_defaults(func=cmd_construct)

    a = sub.add_parser("audit", parents=[common], help="numerical audit of the builtin protocols as printed")
    a.add_argument("names", nargs="*", help="builtin protocol names (default: all)")
    a.set_defaults(func=cmd_audit)
    return p


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Output(args.format, stdout)
    try:
        return args.func(args, out)
    except UsageError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (InfeasibleError, ConstraintError, IncompleteBasisError) as exc:
        out.record("error", f"error: {exc}", message=str(exc))
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
