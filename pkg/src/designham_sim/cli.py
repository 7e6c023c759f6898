"""Command-line driver: ``designham-sim run|typical|verify-oracle``.

Experiments are described by a single JSON config.  Every run writes its
CSV/JSON outputs plus ``manifest.json`` listing a SHA-256 digest per file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .designham import (
    design_timeline,
    effective_z_hamiltonian,
    bundled_schedule,
    load_schedule,
    sample_lambda,
    save_schedule,
)
from .mqc import (
    default_phis,
    deviation_epsilon,
    mqc_spectrum,
    signal_of_state,
    typical_profile,
)
from .propagate import (
    DENSE_MAX_QUBITS,
    PauliString,
    conjugate_operator,
    oracle_refocusing_propagator,
    phase_distance,
    segment_propagator,
    z_phase_diagonal,
)
from .randomness import (
    ScheduleFamily,
    convergence_curves,
    convergence_vs_size,
    design_ensemble,
    design_timelines,
    frame_potential_estimates,
    frame_potential_exact,
    haar_ensemble,
    halfperiod_times,
    otoc_frame_potential,
)
from .seeding import child_seed, default_threads
from .spinsys import SlotMap, builtin_12spin, load_molecule_with_slots, random_system

MODES = ("frame-potential", "mqc", "verify-oracle", "otoc-check", "convergence")

# counters used with child_seed for the sub-tasks of a run
SEED_SYSTEM = 0
SEED_DESIGN = 1
SEED_HAAR = 2
SEED_PAIRS = 3
SEED_SCHEDULE = 4
SEED_TRIALS = 5


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CsvSchema:
    filename: str
    columns: tuple[str, ...]


SCHEMAS = {
    "frame_potential": CsvSchema("frame_potential.csv",
                                 ("t_s", "k", "f_tilde", "f", "ensemble_size", "pair_count")),
    "haar_frame_potential": CsvSchema("haar_frame_potential.csv",
                                      ("t_s", "k", "f_tilde", "f", "ensemble_size", "pair_count")),
    "convergence": CsvSchema("convergence.csv",
                             ("t_s", "k", "f_tilde", "f", "ensemble_size", "pair_count")),
    "fp_vs_size": CsvSchema("fp_vs_size.csv", ("ensemble_size", "k", "f_tilde")),
    "spectra": CsvSchema("spectra.csv", ("t_s", "nu", "intensity")),
    "signal": CsvSchema("signal.csv", ("t_s", "phi", "re_S", "im_S")),
    "typical": CsvSchema("typical.csv", ("nu", "intensity")),
    "oracle": CsvSchema("oracle.csv", ("trial", "t_half_s", "distance")),
    "otoc": CsvSchema("otoc.csv", ("n", "k", "frame_potential", "otoc_frame_potential",
                                   "difference")),
}


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    molecule: str = "builtin12"
    period_s: float = 0.030
    rounds: int = 2
    ensemble_size: int = 120
    k_list: tuple[int, ...] = (1, 2)
    rng_seed: int | None = None
    initial_operator: str = "Z7"
    phi_points: int = 256
    output_dir: str = "results"
    schedule: str | None = None
    max_pairs: int | None = None
    haar_baseline: bool = True
    n: int | None = None
    trials: int = 50
    n_list: tuple[int, ...] = (1, 2)

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise ConfigError(f"unknown config field(s): {unknown}")
        if "mode" not in doc:
            raise ConfigError("config needs a 'mode'")
        doc = dict(doc)
        for key in ("k_list", "n_list"):
            if key in doc:
                doc[key] = tuple(int(k) for k in doc[key])
        try:
            config = cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        config.validate()
        return config

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        stochastic = self.mode != "mqc" or self.schedule is None
        if stochastic and self.rng_seed is None:
            raise ConfigError(f"mode {self.mode!r} needs an explicit rng_seed")
        if not (self.period_s > 0 and math.isfinite(self.period_s)):
            raise ConfigError("period_s must be positive")
        if self.rounds < 1:
            raise ConfigError("rounds must be at least 1")
        if any(k < 1 for k in self.k_list) or not self.k_list:
            raise ConfigError("k_list must hold positive integers")
        if self.mode in ("frame-potential", "convergence") and self.ensemble_size < 2:
            raise ConfigError("ensemble_size must be at least 2")
        if self.mode == "mqc" and self.phi_points < 1:
            raise ConfigError("phi_points must be positive")
        if self.mode == "verify-oracle":
            if self.n is None or not 1 <= self.n <= DENSE_MAX_QUBITS:
                raise ConfigError(f"verify-oracle needs 1 <= n <= {DENSE_MAX_QUBITS}")
            if self.trials < 1:
                raise ConfigError("trials must be positive")

    @property
    def halfperiods(self) -> int:
        return 2 * self.rounds

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["k_list"] = list(self.k_list)
        doc["n_list"] = list(self.n_list)
        return doc


@dataclass
class RunManifest:
    config: dict
    code_version: str
    started_utc: str
    finished_utc: str = ""
    seeds: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def verify(self, output_dir: str | Path) -> bool:
        return all(_digest(Path(output_dir) / name) == digest
                   for name, digest in self.outputs.items())


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def emit_outputs(records: Iterable, schema: CsvSchema, output_dir: str | Path) -> dict[str, str]:
    """Write ``records`` (mappings or sequences in column order) as a CSV file.

    Floats use 17 significant digits; UTF-8 with LF line endings.  Returns
    ``{filename: sha256}``.
    """
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(schema.columns)
    for rec in records:
        if isinstance(rec, dict):
            missing = [c for c in schema.columns if c not in rec]
            if missing:
                raise ValueError(f"record lacks columns {missing} for {schema.filename}")
            row = [rec[c] for c in schema.columns]
        else:
            row = list(rec)
            if len(row) != len(schema.columns):
                raise ValueError(f"record has {len(row)} fields, {schema.filename} wants "
                                 f"{len(schema.columns)}")
        writer.writerow([_fmt(v) for v in row])
    path = out / schema.filename
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(buf.getvalue())
    return {schema.filename: _digest(path)}


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj).__name__)


def emit_json(doc, filename: str, output_dir: str | Path) -> dict[str, str]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / filename
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    return {filename: _digest(path)}


def resolve_system(config: ExperimentConfig):
    """SpinSystem and SlotMap named by ``config.molecule``.

    ``"builtin12"`` is the bundled molecule, ``"random:N"`` a random N-spin
    system (one slot per spin) seeded from the run seed, anything else a
    molecule file path.
    """
    name = config.molecule
    if name == "builtin12":
        return builtin_12spin()
    if name.startswith("random:"):
        n = int(name.split(":", 1)[1])
        seed = child_seed(config.rng_seed or 0, SEED_SYSTEM)
        return random_system(n, seed), SlotMap.one_per_qubit(n)
    system, slot_map = load_molecule_with_slots(name)
    return system, slot_map or SlotMap.one_per_qubit(system.n)


def _estimate_rows(t, estimates) -> list[dict]:
    return [
        {"t_s": t, "k": e.k, "f_tilde": e.f_tilde, "f": e.f,
         "ensemble_size": e.ensemble_size, "pair_count": e.pair_count}
        for e in estimates
    ]


def _run_frame_potential(config, out, manifest, threads):
    system, slot_map = resolve_system(config)
    family = ScheduleFamily(slot_map, config.period_s, config.halfperiods)
    t_end = config.halfperiods * config.period_s / 2
    design_seed = child_seed(config.rng_seed, SEED_DESIGN)
    pair_seed = child_seed(config.rng_seed, SEED_PAIRS)
    manifest.seeds.update(design=design_seed, pairs=pair_seed)
    ens = design_ensemble(system, family, t_end, config.ensemble_size, design_seed)
    est = frame_potential_estimates(ens, config.k_list, config.max_pairs, pair_seed, threads)
    manifest.outputs.update(emit_outputs(_estimate_rows(t_end, est.values()),
                                         SCHEMAS["frame_potential"], out))
    manifest.summary["design"] = {str(k): e.f_tilde for k, e in est.items()}
    if config.max_pairs is None:
        sizes = list(range(2, config.ensemble_size + 1))
        curves = convergence_vs_size(ens, config.k_list, sizes, threads)
        rows = [(s, k, v) for k, c in curves.items() for s, v in zip(sizes, c.values)]
        manifest.outputs.update(emit_outputs(rows, SCHEMAS["fp_vs_size"], out))
    if config.haar_baseline:
        haar_seed = child_seed(config.rng_seed, SEED_HAAR)
        manifest.seeds["haar"] = haar_seed
        haar = haar_ensemble(system.n, config.ensemble_size, haar_seed)
        hest = frame_potential_estimates(haar, config.k_list, config.max_pairs, pair_seed, threads)
        manifest.outputs.update(emit_outputs(_estimate_rows(t_end, hest.values()),
                                             SCHEMAS["haar_frame_potential"], out))
        manifest.summary["haar"] = {str(k): e.f_tilde for k, e in hest.items()}


def _run_convergence(config, out, manifest, threads):
    system, slot_map = resolve_system(config)
    family = ScheduleFamily(slot_map, config.period_s, config.halfperiods)
    design_seed = child_seed(config.rng_seed, SEED_DESIGN)
    manifest.seeds["design"] = design_seed
    times = halfperiod_times(config.period_s, config.halfperiods)
    curves = convergence_curves(system, family, times, config.k_list, config.ensemble_size,
                                design_seed, config.max_pairs, threads)
    rows = []
    for ti, t in enumerate(times):
        rows += _estimate_rows(t, [curves[k].estimates[ti] for k in config.k_list])
    manifest.outputs.update(emit_outputs(rows, SCHEMAS["convergence"], out))
    manifest.summary["final"] = {str(k): float(c.values[-1]) for k, c in curves.items()}


def _mqc_schedule(config, slot_map):
    if config.schedule is None:
        seed = child_seed(config.rng_seed, SEED_SCHEDULE)
        return sample_lambda(seed, slot_map.n_slots, config.halfperiods, config.period_s,
                             slot_map)
    if config.schedule in ("experiment1", "experiment2", "transient"):
        sched = bundled_schedule(config.schedule, slot_map)
    else:
        sched = load_schedule(config.schedule, slot_map)
    if sched.halfperiods < config.halfperiods:
        raise ConfigError(f"schedule has {sched.halfperiods} half-periods, "
                          f"{config.halfperiods} needed")
    if not math.isclose(sched.period_s, config.period_s, rel_tol=1e-12):
        raise ConfigError(f"schedule period {sched.period_s} s differs from period_s "
                          f"{config.period_s} s")
    return sched.truncated(config.halfperiods)


def _run_mqc(config, out, manifest, threads):
    system, slot_map = resolve_system(config)
    try:
        op = PauliString.parse(config.initial_operator, system.n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if op.is_identity:
        raise ConfigError("initial operator must not be the identity")
    schedule = _mqc_schedule(config, slot_map)
    manifest.seeds["schedule"] = schedule.seed
    timeline = design_timeline(schedule, system)
    save_schedule(schedule, Path(out) / "schedule.json")
    manifest.outputs["schedule.json"] = _digest(Path(out) / "schedule.json")

    half = config.period_s / 2
    ref = typical_profile(system.n)
    phis = default_phis(config.phi_points)
    rho = op.to_dense(normalized=True)
    spectra, signal, eps = [], [], []
    for m in range(config.halfperiods + 1):
        t = m * half
        if m > 0:
            rho = conjugate_operator(segment_propagator(timeline, (m - 1) * half, t), rho)
        spectrum = mqc_spectrum(rho)
        spectra += [(t, nu, i) for nu, i in zip(spectrum.orders, spectrum.intensities)]
        eps.append({"t_s": t, "halfperiods": m, "epsilon": deviation_epsilon(spectrum, ref)})
        if m > 0 and m % 2 == 0:
            sig = signal_of_state(rho, phis)
            signal += [(t, p, v.real, v.imag) for p, v in zip(sig.phis, sig.values)]
    manifest.outputs.update(emit_outputs(spectra, SCHEMAS["spectra"], out))
    manifest.outputs.update(emit_outputs(signal, SCHEMAS["signal"], out))
    doc = {"initial_operator": str(op), "period_s": config.period_s, "series": eps,
           "final_epsilon": eps[-1]["epsilon"]}
    manifest.outputs.update(emit_json(doc, "epsilon.json", out))
    manifest.summary["final_epsilon"] = eps[-1]["epsilon"]


def verify_oracle(n: int, trials: int, seed: int, period_s: float = 0.030) -> dict:
    """Compare the pulse-level oracle with the effective Hamiltonian on random
    systems, timing fractions and half-period lengths."""
    rows = []
    for trial in range(trials):
        rng = np.random.default_rng(child_seed(seed, SEED_TRIALS, trial))
        system = random_system(n, rng)
        slot_map = SlotMap.one_per_qubit(n)
        lam = rng.uniform(0, 1, size=n)
        t_half = float(rng.uniform(0.1, 1.0) * period_s / 2)
        exact = oracle_refocusing_propagator(system, lam, slot_map, t_half)
        h_eff = effective_z_hamiltonian(system, lam, slot_map)
        approx = np.diag(z_phase_diagonal(h_eff, t_half).phases)
        rows.append((trial, t_half, phase_distance(exact, approx)))
    return {"n": n, "trials": trials, "seed": seed, "rows": rows,
            "max_distance": max(r[2] for r in rows)}


def _run_verify_oracle(config, out, manifest, threads):
    report = verify_oracle(config.n, config.trials, config.rng_seed, config.period_s)
    manifest.outputs.update(emit_outputs(report["rows"], SCHEMAS["oracle"], out))
    summary = {k: v for k, v in report.items() if k != "rows"}
    summary["passed"] = report["max_distance"] < 1e-10
    manifest.outputs.update(emit_json(summary, "oracle_report.json", out))
    manifest.summary.update(summary)


def _run_otoc_check(config, out, manifest, threads):
    rows = []
    for n in config.n_list:
        for k in config.k_list:
            seed = child_seed(config.rng_seed, SEED_HAAR, n, k)
            ens = haar_ensemble(n, config.ensemble_size, seed)
            try:
                otoc = otoc_frame_potential(ens, k)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            fp = frame_potential_exact(ens, k, threads)
            rows.append((n, k, fp, otoc, abs(fp - otoc)))
    manifest.outputs.update(emit_outputs(rows, SCHEMAS["otoc"], out))
    manifest.summary["max_difference"] = max(r[4] for r in rows)


_RUNNERS = {
    "frame-potential": _run_frame_potential,
    "convergence": _run_convergence,
    "mqc": _run_mqc,
    "verify-oracle": _run_verify_oracle,
    "otoc-check": _run_otoc_check,
}


def run_experiment(config: ExperimentConfig, output_dir: str | Path | None = None,
                   threads: int | None = None) -> RunManifest:
    """Run one configured experiment and write its outputs and manifest."""
    config.validate()
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    threads = default_threads() if threads is None else threads
    manifest = RunManifest(config.to_dict(), __version__, _now())
    manifest.seeds["master"] = config.rng_seed
    _RUNNERS[config.mode](config, out, manifest, threads)
    manifest.finished_utc = _now()
    emit_json(dataclasses.asdict(manifest), "manifest.json", out)
    if not manifest.verify(out):
        raise RuntimeError("output digests do not match the files on disk")
    return manifest


def _fail(exc: Exception, code: int = 2) -> int:
    json.dump({"error": str(exc), "type": type(exc).__name__}, sys.stderr)
    sys.stderr.write("\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="designham-sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--output-dir", type=Path)
    p_run.add_argument("--threads", type=int)

    p_typ = sub.add_parser("typical", help="typical MQC profile C(2n, n-nu)/4^n")
    p_typ.add_argument("--n", type=int, required=True)
    p_typ.add_argument("--output-dir", type=Path)

    p_orc = sub.add_parser("verify-oracle", help="check the effective Hamiltonian against "
                                                 "pulse-level simulation")
    p_orc.add_argument("--n", type=int, required=True)
    p_orc.add_argument("--trials", type=int, default=50)
    p_orc.add_argument("--seed", type=int, required=True)
    p_orc.add_argument("--output-dir", type=Path)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            try:
                doc = json.loads(args.config.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
            config = ExperimentConfig.from_dict(doc)
            manifest = run_experiment(config, args.output_dir, args.threads)
            json.dump({"outputs": sorted(manifest.outputs), "summary": manifest.summary},
                      sys.stdout, indent=2, default=_json_default)
            sys.stdout.write("\n")
        elif args.command == "typical":
            if args.n < 1:
                raise ConfigError("--n must be positive")
            prof = typical_profile(args.n)
            rows = list(zip(prof.orders, prof.intensities))
            if args.output_dir is None:
                writer = csv.writer(sys.stdout, lineterminator="\n")
                writer.writerow(SCHEMAS["typical"].columns)
                writer.writerows([[_fmt(v) for v in r] for r in rows])
            else:
                emit_outputs(rows, SCHEMAS["typical"], args.output_dir)
        elif args.command == "verify-oracle":
            if not 1 <= args.n <= DENSE_MAX_QUBITS:
                raise ConfigError(f"--n must be in 1..{DENSE_MAX_QUBITS}")
            report = verify_oracle(args.n, args.trials, args.seed)
            summary = {k: v for k, v in report.items() if k != "rows"}
            summary["passed"] = report["max_distance"] < 1e-10
            if args.output_dir is not None:
                emit_outputs(report["rows"], SCHEMAS["oracle"], args.output_dir)
                emit_json(summary, "oracle_report.json", args.output_dir)
            json.dump(summary, sys.stdout, indent=2)
            sys.stdout.write("\n")
            return 0 if summary["passed"] else 1
    except (ConfigError, ValueError) as exc:
        return _fail(exc, 2)
    except OSError as exc:
        return _fail(exc, 3)
    return 0


if __name__ == "__main__":
    sys.exit(main())
