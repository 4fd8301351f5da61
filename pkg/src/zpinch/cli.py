"""Command-line driver: config ingestion, study orchestration and export.

Every subcommand reads the same JSON config; ``run`` executes all stages.
Outputs land in one artifact directory with CSV tables, a deterministic
``summary.json`` and plain-text plot data.
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import evolve_mode, fit_growth_rate
from .energy import ModeIndex
from .equilibrium import (build_equilibrium, check_admissibility, interchange_criterion_scan,
                          sausage_criterion_scan)
from .errors import (AdmissibilityViolation, BVPFailure, ConfigError, MissingArtifact,
                     NonConvergedGrid, NonpositiveIntegrand, SolverStall, ZPinchError)
from .grid import GridSpec
from .profiles import profile_from_config
from .scaling import fit_scaling_exponent
from .spectrum import solve_mode, sweep_modes

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICS, EXIT_PARTIAL = 0, 2, 3, 4
STAGES = ("equilibrium", "criteria", "sweep", "scaling", "dynamics")
THREADS_ENV = "ZPINCH_THREADS"
NUMERICAL_FAILURES = (NonConvergedGrid, SolverStall, BVPFailure)
INPUT_FAILURES = (ConfigError, AdmissibilityViolation, NonpositiveIntegrand)

EQUILIBRIUM_COLUMNS = ("r", "p", "dp", "rho", "B", "dB", "J")
CRITERIA_COLUMNS = ("m", "r", "value")
SPECTRUM_COLUMNS = ("m", "k", "lambda", "mu", "el_residual", "bc_residual", "n_grid")
MINIMIZER_COLUMNS = ("component", "r", "value")
SCALING_COLUMNS = ("alpha", "k", "J_value", "E_value", "lambda_upper")
DYNAMICS_COLUMNS = ("t", "kinetic", "potential", "total", "log_norm")


# --- configuration ----------------------------------------------------------------------------


def _block(raw, name, default=None):
    value = raw.get(name, default)
    if value is not None and not isinstance(value, dict):
        raise ConfigError(f"'{name}' must be a mapping")
    return value


def _positive(value, name, integer=False):
    try:
        num = int(value) if integer else float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number") from exc
    if integer and num != value:
        raise ConfigError(f"{name} must be an integer")
    if not num > 0:
        raise ConfigError(f"{name} must be positive")
    return num


@dataclass
class ModeBlock:
    m_min: int = 0
    m_max: int = 0
    k_min: int = 1
    k_max: int = 4
    k_values: list = None

    def __post_init__(self):
        for name in ("m_min", "m_max", "k_min", "k_max"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ConfigError(f"modes.{name} must be an integer")
        if self.m_max < self.m_min:
            raise ConfigError("empty m range")
        if self.k_values is not None:
            if not self.k_values:
                raise ConfigError("empty k_values")
            self.k_values = [int(k) for k in self.k_values]
        elif self.k_max < self.k_min:
            raise ConfigError("empty k range")

    @property
    def ms(self):
        return list(range(int(self.m_min), int(self.m_max) + 1))

    @property
    def ks(self):
        if self.k_values is not None:
            return list(self.k_values)
        return list(range(int(self.k_min), int(self.k_max) + 1))


@dataclass
class SolverBlock:
    grid: int = 256
    refinements: int = 0
    rtol: float = 1e-6
    residuals: bool = True

    def __post_init__(self):
        self.grid = _positive(self.grid, "solver.grid", integer=True)
        GridSpec(self.grid)
        if int(self.refinements) != self.refinements or self.refinements < 0:
            raise ConfigError("solver.refinements must be a nonnegative integer")
        self.rtol = _positive(self.rtol, "solver.rtol")


@dataclass
class ScalingBlock:
    alpha: list = field(default_factory=lambda: [0.5, 0.75])
    k_powers: list = field(default_factory=lambda: [4, 10])

    def __post_init__(self):
        if not self.alpha:
            raise ConfigError("scaling.alpha is empty")
        for a in self.alpha:
            if not 0.0 < float(a) < 1.0:
                raise ConfigError("scaling.alpha values must lie in (0, 1)")
        if len(self.k_powers) != 2 or self.k_powers[1] <= self.k_powers[0]:
            raise ConfigError("scaling.k_powers must be [low, high] with low < high")

    @property
    def k_list(self):
        lo, hi = (int(p) for p in self.k_powers)
        return [2.0**p for p in range(lo, hi + 1)]


@dataclass
class DynamicsBlock:
    t_end: float = None
    dt: float = None
    grid: int = 64
    initial: str = "eigenvector"
    modes: list = None
    e_folds: float = 5.0

    def __post_init__(self):
        if self.t_end is not None:
            self.t_end = _positive(self.t_end, "dynamics.t_end")
        if self.dt is not None:
            self.dt = _positive(self.dt, "dynamics.dt")
        if self.e_folds is not None:
            self.e_folds = _positive(self.e_folds, "dynamics.e_folds")
        self.grid = _positive(self.grid, "dynamics.grid", integer=True)
        if self.initial not in ("eigenvector", "random"):
            raise ConfigError("dynamics.initial must be 'eigenvector' or 'random'")
        if self.modes is not None:
            try:
                self.modes = [[int(m), int(k)] for m, k in self.modes]
            except (TypeError, ValueError) as exc:
                raise ConfigError("dynamics.modes must be a list of [m, k] pairs") from exc


@dataclass
class OutputBlock:
    directory: str = "zpinch-out"
    formats: list = field(default_factory=lambda: ["csv", "json", "dat"])

    def __post_init__(self):
        unknown = set(self.formats) - {"csv", "json", "dat"}
        if unknown:
            raise ConfigError(f"unknown output formats {sorted(unknown)}")


@dataclass
class StudyConfig:
    """Validated study description; ``to_mapping`` round-trips through JSON."""

    profile: dict
    modes: ModeBlock = field(default_factory=ModeBlock)
    solver: SolverBlock = field(default_factory=SolverBlock)
    scaling: ScalingBlock = None
    dynamics: DynamicsBlock = None
    output: OutputBlock = field(default_factory=OutputBlock)
    rw: float = None
    seed: int = 0
    strict_admissibility: bool = False

    @classmethod
    def from_mapping(cls, raw, base_dir=None):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {"profile", "modes", "solver", "scaling", "dynamics", "output", "rw", "seed",
                 "strict_admissibility"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        profile = _block(raw, "profile")
        if profile is None:
            raise ConfigError("config needs a 'profile' block")
        profile_from_config(profile, base_dir)
        profile = dict(profile)
        if "path" in profile and base_dir is not None and not Path(profile["path"]).is_absolute():
            profile["path"] = str(Path(base_dir) / profile["path"])

        def build(kind, name, default):
            block = _block(raw, name, default)
            if block is None:
                return None
            try:
                return kind(**block)
            except TypeError as exc:
                raise ConfigError(f"bad '{name}' block: {exc}") from exc

        seed = raw.get("seed", 0)
        if int(seed) != seed or seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        rw = raw.get("rw")
        return cls(profile=dict(profile), modes=build(ModeBlock, "modes", {}),
                   solver=build(SolverBlock, "solver", {}), scaling=build(ScalingBlock, "scaling", None),
                   dynamics=build(DynamicsBlock, "dynamics", None),
                   output=build(OutputBlock, "output", {}),
                   rw=None if rw is None else float(rw), seed=int(seed),
                   strict_admissibility=bool(raw.get("strict_admissibility", False)))

    def to_mapping(self):
        out = asdict(self)
        return {key: value for key, value in out.items() if value is not None}


def load_config(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return StudyConfig.from_mapping(raw, base_dir=path.parent)


# --- writers and loaders ----------------------------------------------------------------------


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def read_csv(path):
    """Rows as dicts of floats (ints where exact, strings where not numeric, ``None`` for blanks)."""
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(f"{path} does not exist")
    out = []
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for key, text in row.items():
                if text == "":
                    parsed[key] = None
                    continue
                try:
                    parsed[key] = int(text)
                except ValueError:
                    try:
                        parsed[key] = float(text)
                    except ValueError:
                        parsed[key] = text
            out.append(parsed)
    return out


def load_spectrum(path):
    """``{ModeIndex: row}`` from a spectrum table."""
    return {ModeIndex(r["m"], r["k"]): r for r in read_csv(path)}


def load_minimizer(path):
    """Nodal ``xi`` with its radii and per-element ``eta``, ``zeta`` with midpoints."""
    rows = read_csv(path)
    parts = {}
    for row in rows:
        parts.setdefault(row["component"], ([], []))
        parts[row["component"]][0].append(row["r"])
        parts[row["component"]][1].append(row["value"])
    return {name: (np.array(r), np.array(v)) for name, (r, v) in parts.items()}


def minimizer_rows(result):
    ops = result.operators
    xi, eta, zeta = ops.split(result.coefficients)
    nodes = ops.nodes
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    rows = [{"component": "xi", "r": r, "value": v} for r, v in zip(nodes, xi)]
    rows += [{"component": "eta", "r": r, "value": v} for r, v in zip(mids, eta)]
    if zeta is not None:
        rows += [{"component": "zeta", "r": r, "value": v} for r, v in zip(mids, zeta)]
    if ops.vacuum is not None:
        scale = ops.vacuum.coupling * xi[-1]
        rows += [{"component": "Qr", "r": r, "value": scale * v}
                 for r, v in zip(ops.vacuum.nodes, ops.vacuum.q_unit)]
    return rows


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if np.isfinite(value) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_json_ready(payload), indent=2, sort_keys=True) + "\n")


# --- stages -----------------------------------------------------------------------------------


@dataclass
class StudyOutcome:
    status: int
    directory: Path
    summary: dict


def _stage_equilibrium(cfg, out, state, summary):
    profile = profile_from_config(cfg.profile)
    eq = build_equilibrium(profile, GridSpec(cfg.solver.grid), rw=cfg.rw,
                           strict=cfg.strict_admissibility)
    state["eq"] = eq
    rows = [dict(zip(EQUILIBRIUM_COLUMNS, row)) for row in eq.to_rows()]
    write_csv(out / "equilibrium.csv", EQUILIBRIUM_COLUMNS, rows)
    report = check_admissibility(profile, eq)
    summary["equilibrium"] = {"profile": profile.to_config(), "r0": eq.r0, "rw": eq.rw,
                              "n_grid": len(eq.grid) - 1, "admissible": report.admissible,
                              "admissibility_failures": report.failures()}


def _stage_criteria(cfg, out, state, summary):
    eq = state["eq"]
    rows, verdicts = [], {}
    for m in sorted({abs(m) for m in cfg.modes.ms}):
        rep = sausage_criterion_scan(eq) if m == 0 else interchange_criterion_scan(eq, m)
        rows += [{"m": m, "r": r, "value": v} for r, v in zip(rep.radii, rep.scan)]
        verdicts[str(m)] = {"verdict": rep.verdict, "witness_r": rep.witness_r,
                            "witness_value": rep.witness_value}
    write_csv(out / "criteria.csv", CRITERIA_COLUMNS, rows)
    summary["criteria"] = verdicts


def _stage_sweep(cfg, out, state, summary):
    eq = state["eq"]
    table = sweep_modes(eq, cfg.modes.ms, cfg.modes.ks, GridSpec(cfg.solver.grid),
                        threads=state["threads"], refinements=cfg.solver.refinements,
                        residuals=cfg.solver.residuals)
    state["sweep"] = table
    write_csv(out / "spectrum.csv", SPECTRUM_COLUMNS, table.rows())
    for mode, res in sorted(table.unstable.items(), key=lambda item: (item[0].m, item[0].k)):
        write_csv(out / "minimizers" / f"{mode}.csv", MINIMIZER_COLUMNS, minimizer_rows(res))
    m0 = [res for mode, res in table.unstable.items() if mode.m == 0]
    summary["spectrum"] = {
        "modes_solved": len(table.results),
        "unstable_modes": len(table.unstable),
        "sup_mu": table.sup_mu,
        "m0_instability_found": bool(m0),
        "failed_modes": {str(mode): f"{type(err).__name__}: {err}" for mode, err in
                         sorted(table.errors.items(), key=lambda item: (item[0].m, item[0].k))},
        "symmetry_violations": len(table.symmetry_violations),
    }
    if table.errors:
        first = next(iter(table.errors.values()))
        state["partial"] = True
        if isinstance(first, NUMERICAL_FAILURES) and not table.results:
            raise first


def _stage_scaling(cfg, out, state, summary):
    eq = state["eq"]
    rows, studies = [], {}
    for alpha in cfg.scaling.alpha:
        study = fit_scaling_exponent(eq, float(alpha), k_list=cfg.scaling.k_list,
                                     threads=state["threads"])
        rows += [dict(row, alpha=float(alpha)) for row in study.rows()]
        studies[repr(float(alpha))] = study.summary()
    write_csv(out / "scaling.csv", SCALING_COLUMNS, rows)
    summary["scaling"] = studies


def _dynamics_modes(cfg, state):
    if cfg.dynamics.modes is not None:
        return [ModeIndex(m, k) for m, k in cfg.dynamics.modes]
    table = state.get("sweep")
    if table is None:
        return []
    ranked = sorted(table.unstable.items(), key=lambda item: (-item[1].mu, item[0].m, item[0].k))
    return [mode for mode, _ in ranked[:3]]


def _stage_dynamics(cfg, out, state, summary):
    eq = state["eq"]
    dyn = cfg.dynamics
    rng = np.random.default_rng(cfg.seed)
    report = {}
    for mode in _dynamics_modes(cfg, state):
        res = solve_mode(eq, mode, GridSpec(dyn.grid), residuals=False)
        if dyn.initial == "eigenvector":
            initial = res.coefficients
        else:
            initial = rng.standard_normal(res.operators.size)
        # an explicit horizon wins; otherwise run for e_folds growth times
        t_end = dyn.t_end
        if t_end is None:
            t_end = dyn.e_folds / res.mu if res.mu else dyn.e_folds
        traj = evolve_mode(eq, mode, initial, t_end, dt=dyn.dt, ops=res.operators)
        write_csv(out / "dynamics" / f"{mode}.csv", DYNAMICS_COLUMNS, traj.rows())
        entry = {"t_end": t_end, "dt": traj.dt, "steps": traj.steps,
                 "ledger_drift": traj.ledger_drift(), "lambda": res.lam, "mu_spectral": res.mu}
        try:
            fit = fit_growth_rate(traj)
            entry.update(mu_fitted=fit.mu, mu_interval=list(fit.interval))
        except ZPinchError as exc:
            entry["fit_error"] = f"{type(exc).__name__}: {exc}"
        report[str(mode)] = entry
    summary["dynamics"] = report


STAGE_RUNNERS = {"equilibrium": _stage_equilibrium, "criteria": _stage_criteria,
                 "sweep": _stage_sweep, "scaling": _stage_scaling, "dynamics": _stage_dynamics}


def _verdicts(summary):
    out = {}
    spec = summary.get("spectrum")
    if spec is not None:
        out["m0_instability_found"] = spec["m0_instability_found"]
        out["sup_mu"] = spec["sup_mu"]
    crit = summary.get("criteria")
    if crit is not None:
        out["criterion_witnesses"] = {m: v["witness_r"] for m, v in crit.items()}
    scal = summary.get("scaling")
    if scal is not None:
        out["scaling_verdicts"] = {a: s["verdict"] for a, s in scal.items()}
    return out


def run_study(config, stages=None, out_dir=None, threads=None, seed=None):
    """Run ``stages`` (all by default) and write artifacts; returns a ``StudyOutcome``.

    Stage failures are recorded with their stage name; files from earlier
    stages stay on disk.
    """
    cfg = config
    if seed is not None:
        cfg.seed = int(seed)
    out = Path(out_dir if out_dir is not None else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    stages = list(STAGES if stages is None else stages)
    if "scaling" in stages and cfg.scaling is None:
        stages.remove("scaling")
    if "dynamics" in stages and cfg.dynamics is None:
        stages.remove("dynamics")
    if stages and stages[0] != "equilibrium":
        stages.insert(0, "equilibrium")

    state = {"threads": max(int(threads), 1), "partial": False}
    summary = {"config": cfg.to_mapping(), "stages": stages, "errors": []}
    status = EXIT_OK
    for stage in stages:
        try:
            STAGE_RUNNERS[stage](cfg, out, state, summary)
        except INPUT_FAILURES as exc:
            summary["errors"].append({"stage": stage, "type": type(exc).__name__, "message": str(exc)})
            status = EXIT_CONFIG
            break
        except NUMERICAL_FAILURES as exc:
            summary["errors"].append({"stage": stage, "type": type(exc).__name__, "message": str(exc)})
            status = EXIT_NUMERICS
            if stage == "equilibrium":
                break
        except ZPinchError as exc:
            summary["errors"].append({"stage": stage, "type": type(exc).__name__, "message": str(exc)})
            status = status or EXIT_PARTIAL
            if stage == "equilibrium":
                break
    if status == EXIT_OK and state["partial"]:
        status = EXIT_PARTIAL
    summary["verdicts"] = _verdicts(summary)
    summary["status"] = status
    if "json" in cfg.output.formats:
        write_json(out / "summary.json", summary)
    if "dat" in cfg.output.formats and status in (EXIT_OK, EXIT_PARTIAL):
        emit_plot_data(out, strict=False)
    return StudyOutcome(status, out, summary)


# --- plot data --------------------------------------------------------------------------------


def _write_dat(path, header, rows):
    with Path(path).open("w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in rows:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def emit_plot_data(artifact_dir, strict=True):
    """Whitespace-separated x-y(-z) files for gnuplot or any plotting tool.

    Writes ``mu_map.dat`` from ``spectrum.csv``, ``loglog.dat`` from
    ``scaling.csv`` and ``criteria.dat`` from ``criteria.csv``.  With
    ``strict`` a missing spectrum table raises ``MissingArtifact``.
    """
    out = Path(artifact_dir)
    written = []
    spectrum = out / "spectrum.csv"
    if spectrum.exists():
        rows = [(r["m"], r["k"], r["mu"]) for r in read_csv(spectrum) if r["mu"] is not None]
        _write_dat(out / "mu_map.dat", ("m", "k", "mu"), rows)
        written.append(out / "mu_map.dat")
    elif strict:
        raise MissingArtifact(f"{spectrum} does not exist")
    scaling = out / "scaling.csv"
    if scaling.exists():
        rows = [(r["alpha"], np.log(r["k"]), np.log(-r["lambda_upper"]))
                for r in read_csv(scaling) if r["lambda_upper"] < 0.0]
        _write_dat(out / "loglog.dat", ("alpha", "log_k", "log_minus_lambda"), rows)
        written.append(out / "loglog.dat")
    criteria = out / "criteria.csv"
    if criteria.exists():
        rows = [(r["m"], r["r"], r["value"]) for r in read_csv(criteria)]
        _write_dat(out / "criteria.dat", ("m", "r", "value"), rows)
        written.append(out / "criteria.dat")
    return written


# --- argument parsing -------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON study config")
    common.add_argument("--out", type=Path, help="artifact directory (overrides the config)")
    common.add_argument("--threads", type=int, help=f"worker threads (env {THREADS_ENV})")
    common.add_argument("--seed", type=int, help="seed for random initial data")
    common.add_argument("--strict-admissibility", action="store_true",
                        help="reject pressures that are not admissible")

    parser = argparse.ArgumentParser(prog="zpinch", description="Linear stability of the z-pinch.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("equilibrium", parents=[common], help="tabulate the equilibrium")
    sub.add_parser("criteria", parents=[common], help="interchange and sausage criterion scans")
    solve = sub.add_parser("solve", parents=[common], help="one Fourier mode")
    solve.add_argument("--m", type=int, required=True)
    solve.add_argument("--k", type=int, required=True)
    sub.add_parser("sweep", parents=[common], help="growth rates over the configured mode range")
    sub.add_parser("scaling", parents=[common], help="ill-posedness scaling study")
    sub.add_parser("evolve", parents=[common], help="time integration of unstable modes")
    report = sub.add_parser("report", help="plot data from an existing artifact directory")
    report.add_argument("artifact_dir", type=Path)
    sub.add_parser("run", parents=[common], help="all stages")
    return parser


def _resolve_threads(args):
    if args.threads is not None:
        return args.threads
    return int(os.environ.get(THREADS_ENV, "1"))


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "report":
        try:
            for path in emit_plot_data(args.artifact_dir):
                print(path)
        except MissingArtifact as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARTIAL
        return EXIT_OK
    if args.config is None:
        print("error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if args.strict_admissibility:
            cfg.strict_admissibility = True
        threads = _resolve_threads(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "solve":
        return _solve_one(cfg, args, threads)
    stages = {"equilibrium": ["equilibrium"], "criteria": ["equilibrium", "criteria"],
              "sweep": ["equilibrium", "sweep"], "scaling": ["equilibrium", "scaling"],
              "evolve": ["equilibrium", "sweep", "dynamics"], "run": None}[args.command]
    if args.command == "scaling" and cfg.scaling is None:
        cfg.scaling = ScalingBlock()
    if args.command == "evolve" and cfg.dynamics is None:
        cfg.dynamics = DynamicsBlock()
    if args.command == "evolve" and cfg.dynamics.modes is not None:
        stages = ["equilibrium", "dynamics"]
    outcome = run_study(cfg, stages, out_dir=args.out, threads=threads, seed=args.seed)
    for err in outcome.summary["errors"]:
        print(f"[{err['stage']}] {err['type']}: {err['message']}", file=sys.stderr)
    print(outcome.directory / "summary.json")
    return outcome.status


def _solve_one(cfg, args, threads):
    out = Path(args.out if args.out is not None else cfg.output.directory)
    try:
        eq = build_equilibrium(profile_from_config(cfg.profile), GridSpec(cfg.solver.grid),
                               rw=cfg.rw, strict=cfg.strict_admissibility)
        mode = ModeIndex(args.m, args.k)
        res = solve_mode(eq, mode, GridSpec(cfg.solver.grid), refinements=cfg.solver.refinements,
                         residuals=cfg.solver.residuals)
    except INPUT_FAILURES as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_FAILURES as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except ZPinchError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    write_csv(out / "minimizers" / f"{mode}.csv", MINIMIZER_COLUMNS, minimizer_rows(res))
    row = {"m": mode.m, "k": mode.k, "lambda": res.lam, "mu": res.mu if res.mu is not None else "",
           "el_residual": res.el_residual, "bc_residual": res.bc_residual, "n_grid": res.n_grid}
    write_csv(out / f"solve_{mode}.csv", SPECTRUM_COLUMNS, [row])
    print(f"{mode}: lambda = {res.lam!r}" + (f", mu = {res.mu!r}" if res.mu else ""))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
