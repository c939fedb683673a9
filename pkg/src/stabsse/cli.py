"""Command-line driver: ``stabsse run | ed | compare``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import sys
from dataclasses import dataclass, fields

from . import __version__
from .ed import (build_dense, mean_energy_full, mean_energy_truncated,
                 symmetric_eigenvalues)
from .engine import run_schedule, temperature_grid
from .errors import CapabilityError
from .models import (build_cnot_chain, build_field_only, build_tfi_chain,
                     build_z2_plaquette_model)

MODELS = ("cnot_chain", "tfi_chain", "z2_plaquette", "field")
RUN_HEADER = ["T", "beta", "mean_n", "energy", "energy_stderr", "state_accept", "op_accept", "seed"]
ED_HEADER = ["T", "beta", "energy_truncated_L", "energy_full"]
# ED above this many qubits is refused: dense storage and cubic diagonalization
ED_MAX_QUBITS = 11


@dataclass(frozen=True)
class RunConfig:
    model: str = "cnot_chain"
    n: int = 10
    h: float = 4.0
    j: float = 1.0
    lx: int = 2
    ly: int = 2
    j_star: float = 1.0
    j_plaq: float = 1.0
    L: int = 40
    t_start: float = 10.0
    t_end: float = 0.4
    t_step: float = 0.4
    therm: int = 50_000
    meas: int = 50_000
    seed: int = 12345
    flip: bool = False
    out: str = "-"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        if not self.t_start >= self.t_end > 0:
            raise ValueError("need t_start >= t_end > 0")
        if not self.t_step > 0:
            raise ValueError("t_step must be positive")
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if self.therm < 1 or self.meas < 1:
            raise ValueError("cycle counts must be at least 1")
        if self.model == "z2_plaquette":
            if self.lx < 1 or self.ly < 1:
                raise ValueError("lattice dimensions must be positive")
        elif self.n < 1:
            raise ValueError("n must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def n_qubits(self) -> int:
        return 2 * self.lx * self.ly if self.model == "z2_plaquette" else self.n

    def catalog(self):
        if self.model == "cnot_chain":
            return build_cnot_chain(self.n, self.h, self.j)
        if self.model == "tfi_chain":
            return build_tfi_chain(self.n, self.h, self.j)
        if self.model == "field":
            return build_field_only(self.n, self.h)
        return build_z2_plaquette_model(self.lx, self.ly, self.j_star, self.j_plaq)

    def temperatures(self) -> list[float]:
        return temperature_grid(self.t_start, self.t_end, self.t_step)

    def to_lines(self) -> list[str]:
        return [f"{f.name}={_fmt_value(getattr(self, f.name))}" for f in fields(self)]

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> RunConfig:
        kinds = {f.name: f.type for f in fields(cls)}
        parsed = {}
        for key, raw in values.items():
            key = key.strip().replace("-", "_")
            if key not in kinds:
                raise ValueError(f"unknown config key {key!r}")
            parsed[key] = _parse_value(kinds[key], raw.strip(), key)
        return cls(**parsed)


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(kind: str, raw: str, key: str):
    try:
        if kind == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind == "int":
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ValueError(f"bad value for {key}: {raw!r}") from None
    return raw


def read_config_file(path: str) -> dict[str, str]:
    """Plain ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def read_header_config(path: str) -> RunConfig:
    """Rebuild the RunConfig echoed in a CSV's comment header."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body.startswith("config "):
                key, value = body[len("config "):].split("=", 1)
                values[key] = value
    return RunConfig.from_mapping(values)


def _num(x: float) -> str:
    return repr(float(x))


def _provenance(config: RunConfig, kind: str) -> list[str]:
    lines = [f"# stabsse {__version__} {kind}"]
    lines += [f"# config {line}" for line in config.to_lines()]
    return lines


def _emit(path: str, comments: list[str], header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def cmd_run(config: RunConfig) -> str:
    result = run_schedule(config.catalog(), config.L, config.temperatures(), config.therm,
                          config.meas, config.seed, flip=config.flip)
    rows = [[_num(r.T), _num(r.beta), _num(r.mean_n), _num(r.energy), _num(r.energy_stderr),
             _num(r.state_accept_rate), _num(r.op_accept_rate), str(config.seed)]
            for r in result.records]
    return _emit(config.out, _provenance(config, "run"), RUN_HEADER, rows)


def cmd_ed(config: RunConfig) -> str:
    n = config.n_qubits
    if n > ED_MAX_QUBITS:
        raise CapabilityError(
            f"exact diagonalization on {n} qubits refused (limit {ED_MAX_QUBITS}): "
            f"dense eigensolver cost grows as O(8^N)")
    spectrum = symmetric_eigenvalues(build_dense(config.catalog()))
    rows = []
    for T in config.temperatures():
        beta = 1.0 / T
        rows.append([_num(T), _num(beta), _num(mean_energy_truncated(spectrum, beta, config.L)),
                     _num(mean_energy_full(spectrum, beta))])
    return _emit(config.out, _provenance(config, "ed"), ED_HEADER, rows)


@dataclass
class Comparison:
    temperatures: list[float]
    rel_errors: list[float]
    threshold: float

    @property
    def max_error(self) -> float:
        return max(self.rel_errors)

    @property
    def worst_T(self) -> float:
        return self.temperatures[self.rel_errors.index(self.max_error)]

    @property
    def passed(self) -> bool:
        return self.max_error < self.threshold


def _read_table(path: str) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def compare_tables(mc_rows, ed_rows, threshold: float = 0.01) -> Comparison:
    if len(mc_rows) != len(ed_rows):
        raise ValueError(f"grid mismatch: {len(mc_rows)} MC rows vs {len(ed_rows)} ED rows")
    temps, errs = [], []
    for i, (mc, ed) in enumerate(zip(mc_rows, ed_rows)):
        t_mc, t_ed = float(mc["T"]), float(ed["T"])
        if abs(t_mc - t_ed) > 1e-9 * max(1.0, abs(t_ed)):
            raise ValueError(f"grid mismatch at row {i}: T={t_mc} vs T={t_ed}")
        e_mc, e_ed = float(mc["energy"]), float(ed["energy_truncated_L"])
        temps.append(t_ed)
        errs.append(abs(e_mc - e_ed) / abs(e_ed) if e_ed else abs(e_mc - e_ed))
    if not errs:
        raise ValueError("no data rows to compare")
    return Comparison(temps, errs, threshold)


def cmd_compare(mc_csv: str, ed_csv: str, threshold: float = 0.01, out=None) -> Comparison:
    out = out or sys.stdout
    cmp = compare_tables(_read_table(mc_csv), _read_table(ed_csv), threshold)
    out.write("T,rel_error\n")
    for T, err in zip(cmp.temperatures, cmp.rel_errors):
        out.write(f"{_num(T)},{_num(err)}\n")
    verdict = "PASS" if cmp.passed else "FAIL"
    out.write(f"# max_rel_error={_num(cmp.max_error)} at T={_num(cmp.worst_T)} "
              f"threshold={_num(threshold)} {verdict}\n")
    return cmp


_FLAG_KEYS = {"model": str, "n": int, "h": float, "j": float, "lx": int, "ly": int,
              "j_star": float, "j_plaq": float, "L": int, "t_start": float, "t_end": float,
              "t_step": float, "therm": float, "meas": float, "seed": int, "out": str}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; explicit flags take precedence")
    for key, kind in _FLAG_KEYS.items():
        flag = "--" + key.replace("_", "-")
        extra = {"choices": MODELS} if key == "model" else {}
        p.add_argument(flag, dest=key, type=kind, default=None, **extra)
    p.add_argument("--flip", action="store_true", default=None,
                   help="single-site-flip state proposals instead of uniform resampling")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    base = RunConfig.from_mapping(values) if values else RunConfig()
    updates = {}
    for key in list(_FLAG_KEYS) + ["flip"]:
        v = getattr(args, key)
        if v is None:
            continue
        if key in ("therm", "meas"):
            if v != int(v):
                raise ValueError(f"--{key} must be a whole number")
            v = int(v)
        updates[key] = v
    return dataclasses.replace(base, **updates)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stabsse", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_config_flags(sub.add_parser("run", help="SSE temperature sweep to CSV"))
    _add_config_flags(sub.add_parser("ed", help="exact-diagonalization reference CSV"))
    p = sub.add_parser("compare", help="relative error of an SSE CSV against an ED CSV")
    p.add_argument("mc_csv")
    p.add_argument("ed_csv")
    p.add_argument("--threshold", type=float, default=0.01)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "compare":
            cmp = cmd_compare(args.mc_csv, args.ed_csv, args.threshold)
            return 0 if cmp.passed else 1
        config = config_from_args(args)
        if args.command == "run":
            cmd_run(config)
        else:
            cmd_ed(config)
    except (ValueError, CapabilityError, OSError) as exc:
        print(f"stabsse: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
