"""Command-line front end: ``qspec simulate | compare | plan | validate``.

Configs are TOML with an optional [units] block (frequency, time, field);
internally everything runs in angular frequency and matching time units.
Runs are deterministic for a fixed config and seed, and every output
directory carries a manifest (resolved config, seed, package version) that
suffices to reproduce it byte for byte; floats are written with 17
significant digits for that reason.

Exit codes: 0 success, 2 configuration errors, 3 numerical failures
(including Nyquist violations under --strict).
"""

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__
from .baths import (
    BathModel,
    CentralSpinSpec,
    DissipationSpec,
    SpinBosonSpec,
    build_central_spin,
    build_spin_boson,
    dissipative_free_evolution,
    single_qubit_bath,
    spin_boson_mode_baths,
)
from .channels import RimConfig, build_cycle, build_rim_channel, concatenate
from .comparison import run_comparison
from .correlation import (
    CorrelationSeries,
    channel_correlation_stream,
    exact_channel_correlation,
    mode_table,
    sum_series,
)
from .decoupling import CpmgConfig, conditional_cycle, conditional_propagators
from .errors import ConfigError, QspecError
from .linalg import expm_hermitian
from .spectrum import (
    annotate_peaks,
    find_peaks,
    reconstruct_spectrum,
    validate_sampling,
)
from .trajectories import (
    active_backend,
    derive_seeds,
    estimate_correlation,
    plan_samples,
    sample_trajectories,
)
from .units import field_multiplier, frequency_multiplier, larmor_frequency, time_multiplier

MODE_EXACT = "exact"
MODE_MC = "monte-carlo"

FREE_IDEAL_B = "ideal-b"
FREE_CONDITIONAL = "conditional"


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment: physical quantities in angular units."""

    raw: dict
    title: str
    bath_kind: str
    bath: BathModel | None
    boson_spec: SpinBosonSpec | None
    rim: RimConfig
    tau2: float
    n_points: int
    free_evolution: str
    n_pulses: int
    dissipation: DissipationSpec
    sampling_mode: str
    n_samples: int | None
    seed: int
    out_dir: Path
    formats: tuple
    peak_threshold: float
    compare: dict = dataclass_field(default_factory=dict)

    @property
    def tau(self) -> float:
        return self.rim.tau1 + self.tau2


def load_config(path, seed=None, out=None, fmt=None, sampling=None,
                n_points=None) -> ExperimentConfig:
    """Parse and resolve a TOML config, applying CLI overrides."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return resolve_config(raw, seed=seed, out=out, fmt=fmt, sampling=sampling,
                          n_points=n_points)


def _section(raw, name, required=True) -> dict:
    sec = raw.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing [{name}] section")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _get(sec, name, kind, default=None, section=""):
    value = sec.get(name, default)
    if value is None:
        raise ConfigError(f"missing key {name!r} in [{section}]")
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {section}.{name}: {value!r}") from exc


def resolve_config(raw: dict, seed=None, out=None, fmt=None, sampling=None,
                   n_points=None) -> ExperimentConfig:
    units = _section(raw, "units", required=False)
    try:
        f_mult = frequency_multiplier(units.get("frequency", "dimensionless"))
        t_mult = time_multiplier(units.get("time", "dimensionless"))
        b_mult = field_multiplier(units.get("field", "T"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    bath_sec = _section(raw, "bath")
    kind = _get(bath_sec, "kind", str, section="bath")
    boson_spec = None
    bath = None
    if kind == "single-qubit":
        bath = single_qubit_bath(a=f_mult * _get(bath_sec, "a", float, section="bath"),
                                 b=f_mult * _get(bath_sec, "b", float, section="bath"))
    elif kind == "spin-boson":
        boson_spec = SpinBosonSpec(
            alpha=_get(bath_sec, "alpha", float, section="bath"),
            omega_max=f_mult * _get(bath_sec, "omega_max", float, section="bath"),
            n_modes=_get(bath_sec, "n_modes", int, section="bath"),
            beta=_get(bath_sec, "beta", float, section="bath") / f_mult,
            n_max=bath_sec.get("n_max"))
    elif kind == "central-spin":
        hyperfine = bath_sec.get("hyperfine")
        if not hyperfine:
            raise ConfigError("central-spin bath needs hyperfine vectors")
        vectors = tuple(tuple(f_mult * float(c) for c in vec) for vec in hyperfine)
        larmor = 0.0
        if "field" in bath_sec:
            larmor = larmor_frequency(b_mult * float(bath_sec["field"]))
        positions = bath_sec.get("positions")
        if positions is not None:
            positions = tuple(tuple(float(c) for c in p) for p in positions)
        couplings = bath_sec.get("couplings")
        if couplings is not None:
            couplings = np.asarray(couplings, dtype=float) * f_mult
        spec = CentralSpinSpec(
            hyperfine_vectors=vectors, larmor=larmor,
            probe_subspace=_get(bath_sec, "subspace", str, section="bath"),
            positions=positions, coupling_matrix=couplings)
        bath = build_central_spin(spec)
    else:
        raise ConfigError(f"unknown bath kind {kind!r}")

    rim_sec = _section(raw, "rim")
    rim_kwargs = {"tau1": t_mult * _get(rim_sec, "tau1", float, section="rim")}
    if "delta_phi" in rim_sec:
        rim_kwargs["delta_phi"] = float(rim_sec["delta_phi"])
    rim = RimConfig(**rim_kwargs)

    proto = _section(raw, "protocol")
    tau2 = t_mult * _get(proto, "tau2", float, section="protocol")
    n_pts = _get(proto, "n_points", int, section="protocol")
    free_mode = proto.get("free_evolution", FREE_IDEAL_B)
    if free_mode not in (FREE_IDEAL_B, FREE_CONDITIONAL):
        raise ConfigError(f"unknown free_evolution {free_mode!r}")
    n_pulses = int(proto.get("n_pulses", 0))
    dissipation = DissipationSpec(gamma1=f_mult * float(proto.get("gamma1", 0.0)),
                                  gamma_phi=f_mult * float(proto.get("gamma_phi", 0.0)))
    if not dissipation.is_trivial and free_mode == FREE_CONDITIONAL:
        raise ConfigError("dissipation with conditional free evolution is "
                          "not supported; use ideal-b")
    if kind == "spin-boson" and (free_mode == FREE_CONDITIONAL
                                 or not dissipation.is_trivial):
        raise ConfigError("spin-boson baths support only ideal-b free "
                          "evolution without dissipation")

    samp = _section(raw, "sampling", required=False)
    mode = samp.get("mode", MODE_EXACT)
    if sampling is not None:
        mode = sampling
    if mode not in (MODE_EXACT, MODE_MC):
        raise ConfigError(f"unknown sampling mode {mode!r}")
    n_samples = samp.get("n_samples")
    if n_samples is None and "delta" in samp and "epsilon" in samp:
        n_samples = plan_samples(float(samp["delta"]),
                                 float(samp["epsilon"])).n_samples
    if mode == MODE_MC and n_samples is None:
        raise ConfigError("monte-carlo sampling needs n_samples or "
                          "(delta, epsilon)")
    run_seed = int(samp.get("seed", 0))
    if seed is not None:
        run_seed = int(seed)

    out_sec = _section(raw, "output", required=False)
    out_dir = Path(out) if out is not None else Path(out_sec.get("directory", "qspec-out"))
    formats = tuple(out_sec.get("formats", ["csv"]))
    if fmt is not None:
        formats = (fmt,)
    for f in formats:
        if f not in ("csv", "json"):
            raise ConfigError(f"unknown output format {f!r}")
    threshold = float(out_sec.get("peak_threshold", 0.25))

    if n_points is not None:
        n_pts = int(n_points)
    if n_pts < 1:
        raise ConfigError("protocol.n_points must be >= 1")

    return ExperimentConfig(
        raw=raw, title=str(raw.get("title", "")), bath_kind=kind, bath=bath,
        boson_spec=boson_spec, rim=rim, tau2=tau2, n_points=n_pts,
        free_evolution=free_mode, n_pulses=n_pulses, dissipation=dissipation,
        sampling_mode=mode, n_samples=None if n_samples is None else int(n_samples),
        seed=run_seed, out_dir=out_dir, formats=formats,
        peak_threshold=threshold, compare=_section(raw, "compare", required=False))


def _sampling_diagnostics(cfg: ExperimentConfig):
    if cfg.bath_kind == "spin-boson":
        baths = spin_boson_mode_baths(cfg.boson_spec)
    else:
        baths = [cfg.bath]
    merged_aliased = []
    ok = True
    diag = None
    for b in baths:
        diag = validate_sampling(b, cfg.tau)
        ok = ok and diag.ok
        merged_aliased.extend(diag.aliased)
    return ok, tuple(merged_aliased), diag.nyquist


def _exact_series(cfg: ExperimentConfig) -> CorrelationSeries:
    if cfg.bath_kind == "spin-boson":
        parts = [channel_correlation_stream(b, cfg.rim, cfg.tau, cfg.n_points)
                 for b in spin_boson_mode_baths(cfg.boson_spec)]
        return sum_series(parts)
    bath = cfg.bath
    if not cfg.dissipation.is_trivial:
        free = dissipative_free_evolution(bath, cfg.dissipation, cfg.tau2)
        ch = concatenate(build_rim_channel(bath, cfg.rim), free, cfg.tau)
    elif cfg.free_evolution == FREE_CONDITIONAL:
        evolver = conditional_propagators(bath, CpmgConfig(cfg.n_pulses, cfg.tau2))
        ch = conditional_cycle(bath, cfg.rim, cfg.tau, evolver)
    else:
        ch = build_cycle(bath, cfg.rim, cfg.tau)
    return exact_channel_correlation(ch, bath.rho0, cfg.n_points)


def _mc_series(cfg: ExperimentConfig) -> CorrelationSeries:
    if cfg.bath_kind == "spin-boson":
        baths = spin_boson_mode_baths(cfg.boson_spec)
        seeds = derive_seeds(cfg.seed, len(baths))
        parts = []
        for b, s in zip(baths, seeds):
            evolver = expm_hermitian(b.b_op, cfg.tau2)
            batch = sample_trajectories(b, cfg.rim, evolver, cfg.n_points,
                                        cfg.n_samples, int(s), tau=cfg.tau)
            parts.append(estimate_correlation(batch, cfg.n_points))
        return sum_series(parts)
    bath = cfg.bath
    if not cfg.dissipation.is_trivial:
        evolver = dissipative_free_evolution(bath, cfg.dissipation, cfg.tau2)
    elif cfg.free_evolution == FREE_CONDITIONAL:
        evolver = conditional_propagators(bath, CpmgConfig(cfg.n_pulses, cfg.tau2))
    else:
        evolver = expm_hermitian(bath.b_op, cfg.tau2)
    batch = sample_trajectories(bath, cfg.rim, evolver, cfg.n_points,
                                cfg.n_samples, cfg.seed, tau=cfg.tau)
    return estimate_correlation(batch, cfg.n_points)


def _annotation_frequencies(cfg: ExperimentConfig, nyquist: float) -> np.ndarray:
    if cfg.bath_kind == "spin-boson":
        spec = cfg.boson_spec
        omegas = np.array([spec.omega(l) for l in range(1, spec.n_modes + 1)])
    else:
        omegas = np.unique(np.round(np.abs(mode_table(cfg.bath, damping="none").omega), 12))
        omegas = omegas[omegas > 0]
    return np.abs(((omegas + nyquist) % (2.0 * nyquist)) - nyquist)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_rows(out_dir: Path, stem: str, header, rows, formats):
    written = []
    if "csv" in formats:
        path = out_dir / f"{stem}.csv"
        lines = [",".join(header)]
        lines += [",".join(row) for row in rows]
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    if "json" in formats:
        path = out_dir / f"{stem}.json"
        payload = [dict(zip(header, row)) for row in rows]
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written


def _write_manifest(cfg: ExperimentConfig, extra: dict):
    manifest = {
        "title": cfg.title,
        "config": cfg.raw,
        "version": __version__,
        "seed": cfg.seed,
        "tau": cfg.tau,
        "n_points": cfg.n_points,
        "sampling_mode": cfg.sampling_mode,
    }
    manifest.update(extra)
    path = cfg.out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def cmd_simulate(cfg: ExperimentConfig, strict: bool = False) -> int:
    ok, aliased, nyquist = _sampling_diagnostics(cfg)
    if not ok:
        for omega, folded in aliased:
            print(f"warning: line at {omega:.6g} exceeds the window "
                  f"{nyquist:.6g}; folded image at {folded:.6g}", file=sys.stderr)
        if strict:
            print("error: Nyquist violation with --strict", file=sys.stderr)
            return 3

    if cfg.bath is not None and not cfg.rim.is_weak(cfg.bath.a_norm_eff):
        print(f"warning: tau1 * ||A||_eff = "
              f"{cfg.rim.tau1 * cfg.bath.a_norm_eff:.3f} is not weak",
              file=sys.stderr)

    series = (_mc_series(cfg) if cfg.sampling_mode == MODE_MC
              else _exact_series(cfg))

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    rows = [(str(m + 1), _fmt(t), _fmt(v), series.provenance)
            for m, (t, v) in enumerate(zip(series.times, series.values))]
    written = _write_rows(cfg.out_dir, "correlation",
                          ("m", "t", "value", "provenance"), rows, cfg.formats)

    if series.n >= 2:
        spec = reconstruct_spectrum(series)
        rows = [(_fmt(w), _fmt(a.real), _fmt(a.imag), _fmt(abs(a)))
                for w, a in zip(spec.frequencies, spec.amplitudes)]
        written += _write_rows(cfg.out_dir, "spectrum",
                               ("omega", "re", "im", "magnitude"), rows, cfg.formats)

        peaks = find_peaks(spec, cfg.peak_threshold)
        peaks = annotate_peaks(peaks, _annotation_frequencies(cfg, nyquist),
                               2.0 * spec.resolution)
        rows = [(_fmt(p.center), _fmt(p.height), _fmt(p.fwhm),
                 "" if p.matched_mode is None else str(p.matched_mode))
                for p in peaks]
        written += _write_rows(cfg.out_dir, "peaks",
                               ("center", "height", "fwhm", "matched_mode"),
                               rows, cfg.formats)
    else:
        print("note: fewer than 2 points; spectrum and peaks skipped")

    extra = {"aliasing": not ok,
             "total_detection_time": series.total_detection_time}
    if cfg.sampling_mode == MODE_MC:
        extra["n_samples"] = cfg.n_samples
        extra["backend"] = active_backend()
    written.append(_write_manifest(cfg, extra))
    for path in written:
        print(f"wrote {path}")
    return 0


_COMPARE_HEADER = ("method", "n_points", "tau", "tau1", "n_samples",
                   "total_detection_time", "resource_complexity",
                   "estimation_error")


def cmd_compare(cfg: ExperimentConfig, strict: bool = False) -> int:
    if cfg.bath is None:
        raise ConfigError("compare needs a finite-dimensional bath "
                          "(single-qubit or central-spin)")
    ok, aliased, nyquist = _sampling_diagnostics(cfg)
    if not ok and strict:
        print("error: Nyquist violation with --strict", file=sys.stderr)
        return 3

    comp = cfg.compare
    grid = [int(x) for x in comp.get("n_samples_grid", [])]
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if not grid:
        written = _write_rows(cfg.out_dir, "comparison", _COMPARE_HEADER, [],
                              cfg.formats)
    else:
        reports = run_comparison(
            cfg.bath, cfg.rim, cfg.tau, cfg.n_points,
            dissipation=cfg.dissipation,
            n_samples_grid=tuple(grid),
            tau1_multipliers=tuple(float(x) for x in
                                   comp.get("tau1_multipliers", (1.0, 2.0, 4.0))),
            n_ref_factor=int(comp.get("n_ref_factor", 16)),
            master_seed=cfg.seed,
            use_mc=bool(comp.get("use_mc", False)))
        rows = [(r.method, str(r.n_points), _fmt(r.tau), _fmt(r.tau1),
                 str(r.n_samples), _fmt(r.total_detection_time),
                 _fmt(r.resource_complexity), _fmt(r.estimation_error))
                for r in reports]
        written = _write_rows(cfg.out_dir, "comparison", _COMPARE_HEADER, rows,
                              cfg.formats)
    written.append(_write_manifest(cfg, {"aliasing": not ok,
                                         "n_samples_grid": grid}))
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_plan(delta: float, epsilon: float) -> int:
    plan = plan_samples(delta, epsilon)
    print(f"delta={_fmt(plan.delta)} epsilon={_fmt(plan.epsilon)} "
          f"n_samples={plan.n_samples}")
    return 0


def cmd_validate(cfg: ExperimentConfig, strict: bool = False) -> int:
    ok, aliased, nyquist = _sampling_diagnostics(cfg)
    print(f"window=[0, {_fmt(nyquist)}] ok={'yes' if ok else 'no'}")
    for omega, folded in aliased:
        print(f"aliased: omega={_fmt(omega)} folded={_fmt(folded)}")
    if not ok and strict:
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qspec",
        description="Noise spectroscopy simulation via repeated weak measurements")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--strict", action="store_true",
                       help="fail on Nyquist violations")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="output format override")

    p_sim = sub.add_parser("simulate", help="run one experiment")
    add_common(p_sim)
    p_sim.add_argument("--sampling", choices=(MODE_EXACT, MODE_MC), default=None,
                       help="sampling mode override")
    p_sim.add_argument("--n", type=int, default=None, dest="n_points",
                       help="number of correlation points override")

    p_cmp = sub.add_parser("compare", help="resource comparison of both methods")
    add_common(p_cmp)

    p_plan = sub.add_parser("plan", help="Hoeffding sample budget")
    p_plan.add_argument("--delta", type=float, required=True)
    p_plan.add_argument("--epsilon", type=float, required=True)

    p_val = sub.add_parser("validate", help="Nyquist check for a config")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--strict", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plan":
            return cmd_plan(args.delta, args.epsilon)
        if args.command == "validate":
            cfg = load_config(args.config)
            return cmd_validate(cfg, strict=args.strict)
        cfg = load_config(args.config, seed=args.seed, out=args.out,
                          fmt=args.format,
                          sampling=getattr(args, "sampling", None),
                          n_points=getattr(args, "n_points", None))
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            if args.command == "simulate":
                return cmd_simulate(cfg, strict=args.strict)
            return cmd_compare(cfg, strict=args.strict)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (QspecError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
