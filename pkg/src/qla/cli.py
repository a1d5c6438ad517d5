"""Command-line interface: ``qla <subcommand> --model model.json ...``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure (the error
class name is printed on stderr).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

from . import asymptotics, chains
from .arith import HIGH_PRECISION_DIGITS, arith, precision_from_env
from .distributions import DistributionSpec, Zero, from_dict, is_degenerate
from .errors import NUMERIC_ERRORS, InvalidConfig, QlaError
from .simulator import SimConfig, simulate

QUEUE_KINDS = ("mg1n_vacation", "mg1n", "gim1n")
_MODEL_KEYS = {"arrival_rate", "service", "vacation", "queue_kind"}


@dataclass(frozen=True)
class ModelConfig:
    """A parsed model file.

    For ``gim1n`` the ``service`` law is the interarrival law and
    ``arrival_rate`` is the exponential service rate.
    """

    kind: str
    rate: float
    service: DistributionSpec
    vacation: DistributionSpec

    @property
    def gim1(self) -> bool:
        return self.kind == "gim1n"

    def queue_model(self) -> chains.QueueModel:
        if self.gim1:
            return chains.dual_model(self.service, self.rate)
        return chains.QueueModel(self.rate, self.service, self.vacation)


def parse_model(obj) -> ModelConfig:
    if not isinstance(obj, dict):
        raise InvalidConfig("model file must hold a JSON object")
    unknown = set(obj) - _MODEL_KEYS
    if unknown:
        raise InvalidConfig(f"unknown model fields {sorted(unknown)}")
    for key in ("arrival_rate", "service"):
        if key not in obj:
            raise InvalidConfig(f"missing model field {key!r}")
    kind = obj.get("queue_kind", "mg1n_vacation")
    if kind not in QUEUE_KINDS:
        raise InvalidConfig(f"queue_kind must be one of {QUEUE_KINDS}")
    rate = obj["arrival_rate"]
    if isinstance(rate, bool) or not isinstance(rate, (int, float)):
        raise InvalidConfig("arrival_rate must be a number")
    service = from_dict(obj["service"])
    vacation = from_dict(obj["vacation"]) if "vacation" in obj else Zero()
    if kind == "mg1n_vacation" and "vacation" not in obj:
        raise InvalidConfig("mg1n_vacation needs a 'vacation' law")
    if kind != "mg1n_vacation" and not is_degenerate(vacation):
        raise InvalidConfig(f"{kind} takes no vacation law")
    config = ModelConfig(kind, float(rate), service, vacation)
    config.queue_model()  # validates rate and moments
    return config


def load_model(path: str) -> ModelConfig:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InvalidConfig(f"cannot read model file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"model file is not valid JSON: {exc}") from exc
    return parse_model(obj)


def parse_capacities(capacity, sweep) -> list[int]:
    if capacity is not None:
        values = [capacity]
    else:
        try:
            parts = [int(p) for p in sweep.split(":")]
        except ValueError as exc:
            raise InvalidConfig(f"bad sweep {sweep!r}, expected N1:N2:step") from exc
        if len(parts) == 2:
            parts.append(1)
        if len(parts) != 3 or parts[2] < 1 or parts[0] > parts[1]:
            raise InvalidConfig(f"bad sweep {sweep!r}, expected N1:N2:step")
        values = list(range(parts[0], parts[1] + 1, parts[2]))
    if min(values) < 1:
        raise InvalidConfig("capacities must be >= 1")
    return values


# -- row computations (module level so sweeps can run in worker processes) --

def _exact_value(config: ModelConfig, N: int, dps):
    if config.gim1:
        return chains.gim1_loss_exact(config.service, config.rate, N, dps)
    model = config.queue_model()
    return chains.loss_probability_exact(model, N, chains.finite_solution(model, N, dps))


def _offset_in(config: ModelConfig, est, dps):
    # offset recomputed in working precision: exact - offset cancels badly
    if est.offset == 0:
        return 0
    ar = arith(dps)
    rho = config.queue_model().rho_in(ar)
    return 1 - rho if config.gim1 else 1 - 1 / rho


def exact_row(config: ModelConfig, dps, with_tv: bool, N: int) -> dict:
    if config.gim1:
        pi0 = chains.gim1_loss_dual(config.service, config.rate, N, dps)
        loss = chains.gim1_loss_exact(config.service, config.rate, N, dps)
    else:
        model = config.queue_model()
        solution = chains.finite_solution(model, N, dps)
        pi0 = solution.values[0]
        loss = chains.loss_probability_exact(model, N, solution)
    row = {"N": N, "pi0N": float(pi0), "ploss_exact": float(loss)}
    if with_tv:
        if config.gim1:
            raise InvalidConfig("the total-variation distance is defined for mg1n models")
        row["tv_distance"] = chains.tv_distance(config.queue_model(), N,
                                                dps=dps or HIGH_PRECISION_DIGITS).value
    return row


def estimate_for(config: ModelConfig):
    if config.gim1:
        return asymptotics.gim1_loss(config.service, config.rate)
    return asymptotics.asymptotic_loss(config.queue_model())


def asymptotic_row(config: ModelConfig, dps, with_exact: bool, N: int) -> dict:
    est = estimate_for(config)
    row = {"N": N, "regime": est.regime.value, "offset": est.offset, "rate": est.rate,
           "poly_order": est.poly_order, "constant": est.constant * est.slowly_varying,
           "ploss_asym": est.evaluate(N)}
    if with_exact:
        exact = _exact_value(config, N, dps)
        row["ploss_exact"] = float(exact)
        row["ratio"] = float(exact - _offset_in(config, est, dps)) / est.deviation(N)
    return row


def compare_row(config: ModelConfig, dps, sim: dict | None, N: int) -> dict:
    est = estimate_for(config)
    exact = _exact_value(config, N, dps)
    row = {"N": N, "regime": est.regime.value, "ploss_exact": float(exact),
           "ploss_asym": est.evaluate(N),
           "ratio": float(exact - _offset_in(config, est, dps)) / est.deviation(N)}
    if sim is not None:
        result = simulate(SimConfig(config.queue_model(), N, **sim))
        row["sim_point"] = result.point
        row["sim_half_width"] = result.half_width_95
    return row


def _rows(func, capacities, jobs):
    if jobs > 1 and len(capacities) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, capacities))
    return [func(N) for N in capacities]


# -- output -----------------------------------------------------------------

def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render(rows: list[dict], columns: list[str], emit: str) -> str:
    if emit == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
        return buf.getvalue()
    cells = [[f"{row[c]:.10g}" if isinstance(row[c], float) else str(row[c])
              for c in columns] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


# -- subcommands ------------------------------------------------------------

def cmd_exact(args, config, dps):
    capacities = parse_capacities(args.capacity, args.sweep)
    rows = _rows(partial(exact_row, config, dps, args.tv), capacities, args.jobs)
    columns = ["N", "pi0N", "ploss_exact"] + (["tv_distance"] if args.tv else [])
    return rows, columns


def cmd_asymptotic(args, config, dps):
    capacities = parse_capacities(args.capacity, args.sweep)
    rows = _rows(partial(asymptotic_row, config, dps, args.with_exact), capacities, args.jobs)
    columns = ["N", "regime", "offset", "rate", "poly_order", "constant", "ploss_asym"]
    if args.with_exact:
        columns += ["ploss_exact", "ratio"]
    return rows, columns


def _sim_options(args) -> dict:
    return {"warmup_arrivals": args.warmup, "measured_arrivals": args.arrivals,
            "batches": args.batches, "seed": args.seed}


def cmd_simulate(args, config, dps):
    if config.gim1:
        raise InvalidConfig("the simulator handles mg1n_vacation models only")
    result = simulate(SimConfig(config.queue_model(), args.capacity, **_sim_options(args)))
    row = {"N": args.capacity, "point": result.point, "half_width": result.half_width_95,
           "arrivals": result.arrivals_seen, "blocked": result.blocked, "seed": args.seed}
    return [row], ["N", "point", "half_width", "arrivals", "blocked", "seed"]


def cmd_compare(args, config, dps):
    capacities = parse_capacities(args.capacity, args.sweep)
    sim = None
    if args.simulate:
        if config.gim1:
            raise InvalidConfig("the simulator handles mg1n_vacation models only")
        sim = _sim_options(args)
    rows = _rows(partial(compare_row, config, dps, sim), capacities, args.jobs)
    columns = ["N", "regime", "ploss_exact", "ploss_asym", "ratio"]
    if sim is not None:
        columns += ["sim_point", "sim_half_width"]
    return rows, columns


def cmd_kernel_dump(args, config, dps):
    kernel = config.queue_model().kernel(args.n_max, dps)
    rows = [{"j": j, "a_j": float(kernel.a[j]), "nu_j": float(kernel.nu[j]),
             "b_j": float(kernel.b[j])} for j in range(args.n_max + 1)]
    return rows, ["j", "a_j", "nu_j", "b_j"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qla", description="Loss probabilities of finite-buffer M/G/1 queues "
        "with multiple vacations, the standard M/G/1/N and GI/M/1/N queues.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sweep=True):
        p.add_argument("--model", required=True, help="JSON model file")
        if sweep:
            g = p.add_mutually_exclusive_group(required=True)
            g.add_argument("--capacity", type=int, help="buffer size N")
            g.add_argument("--sweep", help="capacities N1:N2:step (inclusive)")
        p.add_argument("--precision", type=int, default=HIGH_PRECISION_DIGITS,
                       help="significant digits, 0 for hardware doubles "
                       "(QLA_PRECISION overrides)")
        p.add_argument("--emit", choices=("csv", "table"), default="csv")
        p.add_argument("--out", help="write data here instead of stdout")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    def sim_flags(p):
        p.add_argument("--arrivals", type=int, default=1_000_000, help="measured arrivals")
        p.add_argument("--warmup", type=int, default=100_000, help="discarded arrivals")
        p.add_argument("--batches", type=int, default=20)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("exact", help="exact loss probability from the embedded chain")
    common(p)
    p.add_argument("--tv", action="store_true", help="add the total-variation distance")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("asymptotic", help="asymptotic loss estimate")
    common(p)
    p.add_argument("--with-exact", action="store_true",
                   help="add the exact value and the exact/asymptotic ratio")
    p.set_defaults(func=cmd_asymptotic)

    p = sub.add_parser("simulate", help="discrete-event simulation")
    common(p, sweep=False)
    p.add_argument("--capacity", type=int, required=True)
    sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="exact vs asymptotic convergence table")
    common(p)
    p.add_argument("--simulate", action="store_true", help="add simulated estimates")
    sim_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("kernel-dump", help="arrival-count sequences a_j, nu_j, b_j")
    common(p, sweep=False)
    p.add_argument("--n-max", type=int, default=20)
    p.set_defaults(func=cmd_kernel_dump)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        digits = precision_from_env(args.precision if args.precision > 0 else None)
        config = load_model(args.model)
        rows, columns = args.func(args, config, digits)
        text = render(rows, columns, args.emit)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except NUMERIC_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (QlaError, ValueError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())
