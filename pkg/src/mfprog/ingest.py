"""Reading C-MAPSS text files and screening out non-informative sensors."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import spearmanr

# Column order of the 21 sensor channels in the public distribution.
SENSOR_NAMES: tuple[str, ...] = (
    "T2", "T24", "T30", "T50", "P2", "P15", "P30", "Nf", "Nc", "epr", "Ps30",
    "phi", "NRf", "NRc", "BPR", "farB", "htBleed", "Nf_dmd", "PCNfR_dmd",
    "W31", "W32",
)
N_SENSORS = len(SENSOR_NAMES)
N_FIELDS = 2 + 3 + N_SENSORS

# The nine channels used for the FD001 study (1-based ids).
FD001_INFORMATIVE: tuple[int, ...] = (2, 3, 4, 7, 11, 12, 15, 20, 21)


class IngestError(ValueError):
    pass


class ParseError(IngestError):
    """Malformed line in a unit or RUL file."""

    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


class StructuralError(IngestError):
    """Well-formed lines that do not assemble into valid engine series."""


def sensor_id(name_or_id: str | int) -> int:
    """Resolve a sensor name (``"T24"``) or 1-based id to its id."""
    if isinstance(name_or_id, (int, np.integer)):
        sid = int(name_or_id)
    else:
        s = str(name_or_id).strip()
        if s.isdigit():
            sid = int(s)
        else:
            lookup = {n.lower(): i + 1 for i, n in enumerate(SENSOR_NAMES)}
            if s.lower() not in lookup:
                raise IngestError(f"unknown sensor name {s!r}")
            sid = lookup[s.lower()]
    if not 1 <= sid <= N_SENSORS:
        raise IngestError(f"sensor id {sid} outside 1..{N_SENSORS}")
    return sid


def sensor_name(sid: int) -> str:
    return SENSOR_NAMES[sid - 1]


@dataclass(frozen=True, eq=False)
class RawEngineSeries:
    unit_id: int
    cycles: np.ndarray       # (T,) int, 1..T
    op_settings: np.ndarray  # (T, 3)
    sensors: np.ndarray      # (T, 21)

    def __post_init__(self):
        T = len(self.cycles)
        if T < 2:
            raise StructuralError(f"unit {self.unit_id}: needs at least 2 cycles, got {T}")
        if self.op_settings.shape != (T, 3) or self.sensors.shape != (T, N_SENSORS):
            raise StructuralError(f"unit {self.unit_id}: misaligned arrays")
        if not np.array_equal(self.cycles, np.arange(1, T + 1)):
            raise StructuralError(f"unit {self.unit_id}: cycles are not contiguous from 1")

    @property
    def length(self) -> int:
        return len(self.cycles)


@dataclass(frozen=True, eq=False)
class MultiSensorSeries:
    unit_id: int
    endpoint_cycle: int
    sensor_ids: tuple[int, ...]
    values: np.ndarray  # (T, J)

    def __post_init__(self):
        if self.values.shape != (self.endpoint_cycle, len(self.sensor_ids)):
            raise StructuralError(
                f"unit {self.unit_id}: values shape {self.values.shape} does not match "
                f"endpoint {self.endpoint_cycle} x {len(self.sensor_ids)} sensors"
            )

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_ids)

    def truncated(self, length: int) -> "MultiSensorSeries":
        """First ``length`` cycles, as if observation had stopped there."""
        if not 2 <= length <= self.endpoint_cycle:
            raise StructuralError(f"unit {self.unit_id}: cannot truncate to {length} cycles")
        return MultiSensorSeries(self.unit_id, length, self.sensor_ids, self.values[:length].copy())


def _parse_float(tok: str, path, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(path, lineno, f"non-numeric token {tok!r}") from None


def _parse_int(tok: str, path, lineno: int) -> int:
    x = _parse_float(tok, path, lineno)
    if not np.isfinite(x) or x != int(x):
        raise ParseError(path, lineno, f"expected an integer, got {tok!r}")
    return int(x)


def parse_unit_lines(lines: Iterable[str], path="<string>") -> list[RawEngineSeries]:
    rows: dict[int, list[tuple[int, list[float]]]] = {}
    for lineno, line in enumerate(lines, start=1):
        toks = line.split()
        if not toks:
            continue
        if len(toks) != N_FIELDS:
            raise ParseError(path, lineno, f"expected {N_FIELDS} fields, got {len(toks)}")
        unit = _parse_int(toks[0], path, lineno)
        cycle = _parse_int(toks[1], path, lineno)
        vals = [_parse_float(t, path, lineno) for t in toks[2:]]
        rows.setdefault(unit, []).append((cycle, vals))

    out = []
    for unit in sorted(rows):
        recs = rows[unit]
        cycles = np.array([c for c, _ in recs], dtype=int)
        if not np.array_equal(cycles, np.arange(1, len(cycles) + 1)):
            raise StructuralError(f"{path}: unit {unit} has non-contiguous cycles")
        data = np.array([v for _, v in recs], dtype=float)
        out.append(RawEngineSeries(unit, cycles, data[:, :3], data[:, 3:]))
    return out


def parse_unit_file(path: str | Path) -> list[RawEngineSeries]:
    """Parse a 26-column train/test file into one series per unit, ordered by id."""
    path = Path(path)
    with path.open() as fh:
        return parse_unit_lines(fh, path)


def format_unit_lines(series: Sequence[RawEngineSeries]) -> str:
    # repr() gives the shortest round-tripping decimal, so reparsing is bit-exact.
    out = []
    for s in series:
        for k in range(s.length):
            fields = [str(s.unit_id), str(int(s.cycles[k]))]
            fields += [repr(float(x)) for x in s.op_settings[k]]
            fields += [repr(float(x)) for x in s.sensors[k]]
            out.append(" ".join(fields))
    return "\n".join(out) + "\n"


def write_unit_file(series: Sequence[RawEngineSeries], path: str | Path) -> None:
    Path(path).write_text(format_unit_lines(series))


def parse_rul_file(path: str | Path) -> list[int]:
    path = Path(path)
    out = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            toks = line.split()
            if not toks:
                continue
            if len(toks) != 1:
                raise ParseError(path, lineno, f"expected one value, got {len(toks)}")
            try:
                v = int(toks[0])
            except ValueError:
                raise ParseError(path, lineno, f"not an integer: {toks[0]!r}") from None
            if v < 0:
                raise ParseError(path, lineno, f"negative RUL {v}")
            out.append(v)
    return out


@dataclass(frozen=True)
class ScreenConfig:
    """Thresholds for :func:`screen_sensors`.

    ``const_tol`` and the two-level rule are the plain "constant / binary"
    tests. ``rel_tol`` and ``max_levels`` catch channels that move only by a
    few quantisation steps over a whole life (FD001's Nf, NRf, htBleed);
    set them to 0 to disable.
    """

    const_tol: float = 1e-9
    consistency: float = 0.9
    rel_tol: float = 1e-4
    max_levels: int = 20


@dataclass(frozen=True)
class SensorScreenReport:
    constant_ids: frozenset[int]
    inconsistent_ids: frozenset[int]
    informative_ids: tuple[int, ...]
    trend_sign: dict[int, int]
    reasons: dict[int, str] = field(default_factory=dict)
    agreement: dict[int, float] = field(default_factory=dict)

    @property
    def informative_names(self) -> list[str]:
        return [sensor_name(i) for i in self.informative_ids]


def _trend_sign(cycles: np.ndarray, x: np.ndarray) -> int:
    if np.ptp(x) == 0:
        return 0
    rho = spearmanr(cycles, x).statistic
    if not np.isfinite(rho) or rho == 0:
        return 0
    return 1 if rho > 0 else -1


def screen_sensors(train: Sequence[RawEngineSeries], cfg: ScreenConfig = ScreenConfig()) -> SensorScreenReport:
    if not train:
        raise IngestError("screen_sensors needs at least one training series")
    constant, inconsistent, informative = set(), set(), []
    signs, reasons, agreement = {}, {}, {}
    for sid in range(1, N_SENSORS + 1):
        cols = [s.sensors[:, sid - 1] for s in train]
        stds = np.array([np.std(c) for c in cols])
        levels = np.array([len(np.unique(c)) for c in cols])
        if np.all((stds <= cfg.const_tol) | (levels <= 2)):
            constant.add(sid)
            reasons[sid] = "constant" if np.all(stds <= cfg.const_tol) else "binary"
            continue
        means = np.array([abs(np.mean(c)) for c in cols])
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(means > 0, stds / means, np.inf)
        if cfg.rel_tol > 0 and np.median(rel) <= cfg.rel_tol:
            constant.add(sid)
            reasons[sid] = "negligible relative variation"
            continue
        if cfg.max_levels > 0 and np.median(levels) <= cfg.max_levels:
            constant.add(sid)
            reasons[sid] = "coarsely quantised"
            continue

        s = np.array([_trend_sign(e.cycles, c) for e, c in zip(train, cols)])
        n_pos, n_neg = int(np.sum(s > 0)), int(np.sum(s < 0))
        major = 1 if n_pos >= n_neg else -1
        frac = max(n_pos, n_neg) / len(train)
        agreement[sid] = frac
        if frac < cfg.consistency:
            inconsistent.add(sid)
            reasons[sid] = f"inconsistent trend ({frac:.2f} agree)"
        else:
            informative.append(sid)
            signs[sid] = major
            reasons[sid] = "informative"
    return SensorScreenReport(
        frozenset(constant), frozenset(inconsistent), tuple(informative), signs, reasons, agreement
    )


def select_sensors(series: RawEngineSeries, ids: Sequence[int | str]) -> MultiSensorSeries:
    if len(ids) == 0:
        raise IngestError("empty sensor selection")
    sids = tuple(sensor_id(i) for i in ids)
    cols = [i - 1 for i in sids]
    return MultiSensorSeries(series.unit_id, series.length, sids, series.sensors[:, cols].copy())
