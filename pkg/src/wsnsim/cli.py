"""Command-line front end: run, compare and sweep experiments.

All randomness flows from the --seed list, so repeated invocations with the
same arguments write byte-identical outputs. Configuration can also come
from a flat key=value file (--config); explicit flags win over file values.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .engine import (
    EecsParams,
    FuzzyFormation,
    HeedParams,
    KmeansFormation,
    LeachParams,
    Protocol,
    run_simulation,
)
from .metrics import (
    alive_series,
    bs_series,
    export_csv,
    export_json,
    summarize,
)
from .model import NetworkConfig, Position, RadioModel

PROTOCOL_CHOICES = ("leach", "heed", "eecs", "kmeans", "fuzzy")

# NetworkConfig presets; the alternate geometry uses the larger arena with
# the base station just outside the top edge
PRESETS = {
    "default": dict(n_nodes=100, width=100.0, height=100.0, bs_x=50.0, bs_y=175.0),
    "table1": dict(n_nodes=100, width=1000.0, height=1000.0, bs_x=500.0, bs_y=200.0),
}


class CliError(Exception):
    """Invalid configuration; the message names the offending field."""


@dataclass
class RunSpec:
    protocols: list[str]
    seeds: list[int]
    n_nodes: int = 100
    width: float = 100.0
    height: float = 100.0
    bs_x: float = 50.0
    bs_y: float = 175.0
    initial_energy: float = 0.5
    e_elec: float = 50e-9
    e_amp: float = 100e-12
    e_da: float = 5e-9
    data_bits: int = 4000
    header_bits: int = 200
    max_rounds: int = 3000
    thin: int = 1
    out_dir: Path = field(default_factory=lambda: Path("out"))
    formats: tuple[str, ...] = ("csv", "json")
    leach_p: float = 0.05
    heed_c_prob: float = 0.05
    heed_p_min: float = 1e-4
    heed_radius: float = 20.0
    eecs_p: float = 0.5
    eecs_w: float = 0.5
    k: int | None = None
    fcm_m: float = 2.0
    fcm_tol: float = 1e-4
    fcm_max_iter: int = 100
    ch_separation: float = 0.0
    grid: list[int] = field(default_factory=list)

    def network_config(self, seed: int) -> NetworkConfig:
        try:
            return NetworkConfig(
                n_nodes=self.n_nodes,
                arena=(self.width, self.height),
                bs_pos=Position(self.bs_x, self.bs_y),
                initial_energy=self.initial_energy,
                radio=RadioModel(
                    e_elec=self.e_elec,
                    e_amp=self.e_amp,
                    e_da=self.e_da,
                    data_bits=self.data_bits,
                    header_bits=self.header_bits,
                ),
                seed=seed,
            )
        except ValueError as exc:
            raise CliError(str(exc)) from exc

    def protocol(self, name: str) -> Protocol:
        try:
            if name == "leach":
                return LeachParams(p=self.leach_p, ch_separation=self.ch_separation)
            if name == "heed":
                return HeedParams(
                    c_prob=self.heed_c_prob,
                    p_min=self.heed_p_min,
                    cluster_radius=self.heed_radius,
                    ch_separation=self.ch_separation,
                )
            if name == "eecs":
                return EecsParams(p=self.eecs_p, w=self.eecs_w,
                                  ch_separation=self.ch_separation)
            if name == "kmeans":
                return KmeansFormation(k=self.k, max_iter=self.fcm_max_iter)
            if name == "fuzzy":
                return FuzzyFormation(k=self.k, m=self.fcm_m, tol=self.fcm_tol,
                                      max_iter=self.fcm_max_iter)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
        raise CliError(f"unknown protocol {name!r}")

    def validate(self) -> None:
        if not self.protocols:
            raise CliError("at least one protocol required (protocols)")
        for name in self.protocols:
            if name not in PROTOCOL_CHOICES:
                raise CliError(f"unknown protocol {name!r} (protocols)")
        if not self.seeds:
            raise CliError("at least one seed required (seeds)")
        if self.max_rounds < 1:
            raise CliError("max_rounds must be >= 1")
        if self.thin < 1:
            raise CliError("thin must be >= 1")
        if self.k is not None and self.k > self.n_nodes:
            raise CliError(f"k={self.k} exceeds n_nodes={self.n_nodes} (k)")
        if self.k is not None and self.k < 1:
            raise CliError("k must be >= 1 (k)")


def _read_config_file(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


_INT_KEYS = {"n_nodes", "data_bits", "header_bits", "max_rounds", "thin", "k",
             "fcm_max_iter"}
_FLOAT_KEYS = {"width", "height", "bs_x", "bs_y", "initial_energy", "e_elec",
               "e_amp", "e_da", "leach_p", "heed_c_prob", "heed_p_min",
               "heed_radius", "eecs_p", "eecs_w", "fcm_m", "fcm_tol",
               "ch_separation"}


def _apply_config_values(spec: RunSpec, values: dict[str, str]) -> None:
    for key, raw in values.items():
        if key == "protocols":
            spec.protocols = [p.strip() for p in raw.split(",") if p.strip()]
        elif key == "seeds":
            spec.seeds = [int(s) for s in raw.replace(",", " ").split()]
        elif key == "grid":
            spec.grid = [int(s) for s in raw.replace(",", " ").split()]
        elif key == "out_dir":
            spec.out_dir = Path(raw)
        elif key == "formats":
            spec.formats = tuple(f.strip() for f in raw.split(",") if f.strip())
        elif key in _INT_KEYS:
            try:
                setattr(spec, key, int(raw))
            except ValueError as exc:
                raise CliError(f"invalid integer for {key}: {raw!r}") from exc
        elif key in _FLOAT_KEYS:
            try:
                setattr(spec, key, float(raw))
            except ValueError as exc:
                raise CliError(f"invalid number for {key}: {raw!r}") from exc
        else:
            raise CliError(f"unknown config key {key!r}")


def _parse_grid(text: str) -> list[int]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CliError("grid range must be start:stop:step")
        start, stop, step = (int(p) for p in parts)
        if step <= 0:
            raise CliError("grid step must be > 0 (grid)")
        return list(range(start, stop + 1, step))
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wsnsim",
        description="Round-based clustered sensor-network lifetime simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, help="flat key=value config file")
        p.add_argument("--preset", choices=sorted(PRESETS),
                       help="geometry preset overriding arena and BS position")
        p.add_argument("--protocol", action="append", choices=PROTOCOL_CHOICES,
                       help="protocol to run (repeatable)")
        p.add_argument("--seed", action="append", type=int,
                       help="RNG seed (repeatable)")
        p.add_argument("--nodes", type=int, dest="n_nodes")
        p.add_argument("--width", type=float)
        p.add_argument("--height", type=float)
        p.add_argument("--bs-x", type=float, dest="bs_x")
        p.add_argument("--bs-y", type=float, dest="bs_y")
        p.add_argument("--initial-energy", type=float, dest="initial_energy")
        p.add_argument("--rounds", type=int, dest="max_rounds")
        p.add_argument("--thin", type=int, help="sample every Nth round in series output")
        p.add_argument("--out", type=Path, dest="out_dir", help="output directory")
        p.add_argument("--format", choices=("csv", "json", "both"), dest="format")
        p.add_argument("--leach-p", type=float, dest="leach_p")
        p.add_argument("--heed-c-prob", type=float, dest="heed_c_prob")
        p.add_argument("--heed-p-min", type=float, dest="heed_p_min")
        p.add_argument("--heed-radius", type=float, dest="heed_radius")
        p.add_argument("--eecs-p", type=float, dest="eecs_p")
        p.add_argument("--eecs-w", type=float, dest="eecs_w")
        p.add_argument("--k", type=int, help="cluster count for kmeans/fuzzy")
        p.add_argument("--fcm-m", type=float, dest="fcm_m")
        p.add_argument("--fcm-tol", type=float, dest="fcm_tol")
        p.add_argument("--fcm-max-iter", type=int, dest="fcm_max_iter")
        p.add_argument("--ch-separation", type=float, dest="ch_separation")

    p_run = sub.add_parser("run", help="simulate selected protocols and export results")
    add_common(p_run)
    p_cmp = sub.add_parser("compare", help="run >=2 protocols and emit comparison tables")
    add_common(p_cmp)
    p_sweep = sub.add_parser("sweep", help="cluster-count sweep of kmeans vs fuzzy formation")
    add_common(p_sweep)
    p_sweep.add_argument("--grid", type=str,
                         help="cluster counts, e.g. 10,20,30 or 10:100:10")
    return parser


def _spec_from_args(args) -> RunSpec:
    spec = RunSpec(protocols=[], seeds=[])
    if args.config:
        _apply_config_values(spec, _read_config_file(args.config))
    if args.preset:
        for key, value in PRESETS[args.preset].items():
            setattr(spec, key, value)
    for key in ("n_nodes", "width", "height", "bs_x", "bs_y", "initial_energy",
                "max_rounds", "thin", "out_dir", "leach_p", "heed_c_prob",
                "heed_p_min", "heed_radius", "eecs_p", "eecs_w", "k", "fcm_m",
                "fcm_tol", "fcm_max_iter", "ch_separation"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(spec, key, value)
    if args.protocol:
        spec.protocols = list(args.protocol)
    if args.seed:
        spec.seeds = list(args.seed)
    if not spec.seeds:
        spec.seeds = [1]
    if getattr(args, "format", None):
        spec.formats = ("csv", "json") if args.format == "both" else (args.format,)
    if getattr(args, "grid", None):
        spec.grid = _parse_grid(args.grid)
    return spec


def _execute(spec: RunSpec) -> dict[tuple[str, int], object]:
    results = {}
    for name in spec.protocols:
        protocol = spec.protocol(name)
        for seed in spec.seeds:
            config = spec.network_config(seed)
            results[(name, seed)] = run_simulation(config, protocol, spec.max_rounds)
    return results


def _sample_rounds(results, thin: int) -> list[int]:
    horizon = max((len(r.reports) for r in results.values()), default=0)
    return list(range(0, horizon, thin))


def _write_outputs(spec: RunSpec, results) -> None:
    out = spec.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from exc
    if "json" in spec.formats:
        for (name, seed), res in sorted(results.items()):
            export_json(res, out / f"{name}_seed{seed}.json")
    if "csv" in spec.formats:
        sample = _sample_rounds(results, spec.thin)
        # series averaged per protocol would hide seed variance; emit the
        # first seed's series plus the cross-seed summary
        first_seed = spec.seeds[0]
        per_protocol = {name: results[(name, first_seed)] for name in spec.protocols}
        export_csv(alive_series(per_protocol, sample), out / "alive_series.csv")
        export_csv(bs_series(per_protocol, sample), out / "bs_series.csv")
        export_csv(summarize(results), out / "summary.csv")


def _print_run_lines(results) -> None:
    for (name, seed), res in sorted(results.items()):
        first = res.first_death_round if res.first_death_round is not None else "-"
        print(f"{name} seed={seed} first_death={first} "
              f"bs_messages={res.total_bs_messages}")


def cmd_run(spec: RunSpec) -> int:
    spec.validate()
    results = _execute(spec)
    _write_outputs(spec, results)
    _print_run_lines(results)
    return 0


def cmd_compare(spec: RunSpec) -> int:
    if len(spec.protocols) < 2:
        raise CliError("compare needs at least two protocols (protocols)")
    spec.validate()
    results = _execute(spec)
    _write_outputs(spec, results)
    _print_run_lines(results)
    stats = summarize(results)
    ranked = sorted(
        (p for p in stats.per_protocol if p.mean_first_death is not None),
        key=lambda p: -(p.mean_first_death or 0),
    )
    if ranked:
        order = " > ".join(p.protocol for p in ranked)
        print(f"mean first-death ordering: {order}")
    else:
        print("mean first-death ordering: (no deaths observed)")
    return 0


def cmd_sweep(spec: RunSpec) -> int:
    if not spec.grid:
        raise CliError("sweep needs a non-empty cluster-count grid (grid)")
    if not spec.protocols:
        spec.protocols = ["kmeans", "fuzzy"]  # the sweep always compares these two
    spec.validate()
    for k in spec.grid:
        if not 1 <= k <= spec.n_nodes:
            raise CliError(f"grid value {k} outside 1..n_nodes (grid)")
    out = spec.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from exc

    from .engine import sweep_iterations

    rows = sweep_iterations(
        base_config=spec.network_config(spec.seeds[0]),
        grid=spec.grid,
        seeds=spec.seeds,
        fcm_m=spec.fcm_m,
        fcm_tol=spec.fcm_tol,
        max_iter=spec.fcm_max_iter,
    )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cluster_count", "kmeans_iterations", "fuzzy_iterations"])
    for k, km, fz in rows:
        writer.writerow([k, repr(km), repr(fz)])
    (out / "iteration_sweep.csv").write_text(buf.getvalue(), encoding="utf-8")
    for k, km, fz in rows:
        print(f"k={k} kmeans_mean_iters={km:.2f} fuzzy_mean_iters={fz:.2f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = _spec_from_args(args)
        if args.command == "run":
            return cmd_run(spec)
        if args.command == "compare":
            return cmd_compare(spec)
        if args.command == "sweep":
            return cmd_sweep(spec)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
