"""Trajectory records, EMA/ultrasound pairing and the CSV formats.

Input corpus CSV (long format, one sample per row)::

    speaker,word,modality,channel,rep,t,x

Result CSV (one fitted gesture per row)::

    speaker,word,modality,channel,rep,gesture_index,t_start,t_end,
    b,k,T,damping_class,r2_pos,r2_vel,converged

Lines starting with ``#`` are provenance comments and are ignored on input.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CORPUS_COLUMNS = ("speaker", "word", "modality", "channel", "rep", "t", "x")
RESULT_COLUMNS = (
    "speaker", "word", "modality", "channel", "rep", "gesture_index",
    "t_start", "t_end", "b", "k", "T", "damping_class",
    "r2_pos", "r2_vel", "converged",
)
KNOWN_CHANNELS = ("TDx", "TDy", "JAWx", "JAWy")
GRID_RTOL = 0.01


class Modality(str, enum.Enum):
    EMA = "EMA"
    US = "US"

    def __str__(self):
        return self.value


class CorpusFormatError(ValueError):
    """Malformed corpus or result file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NonUniformGridError(CorpusFormatError):
    pass


class DuplicateRecordError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class PairKey:
    speaker_id: str
    word: str
    channel: str
    rep: int

    def __post_init__(self):
        if self.rep < 0:
            raise ValueError("repetition index must be >= 0")


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One channel of one token on a uniform time grid.

    Sample ``i`` lies at ``t0 + i / sample_rate``; positions are in mm.
    """

    speaker_id: str
    word: str
    modality: Modality
    channel: str
    sample_rate: float
    t0: float
    positions: np.ndarray
    rep: int = 0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 1 or pos.size < 2:
            raise ValueError("positions must be a 1-D series of at least 2 samples")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "modality", Modality(self.modality))

    @property
    def key(self) -> PairKey:
        return PairKey(self.speaker_id, self.word, self.channel, self.rep)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.positions.size) / self.sample_rate

    def replace_positions(self, positions, sample_rate=None, t0=None) -> "TrajectoryRecord":
        return TrajectoryRecord(
            speaker_id=self.speaker_id,
            word=self.word,
            modality=self.modality,
            channel=self.channel,
            sample_rate=self.sample_rate if sample_rate is None else sample_rate,
            t0=self.t0 if t0 is None else t0,
            positions=positions,
            rep=self.rep,
        )


@dataclass
class PairingReport:
    pairs: list = field(default_factory=list)
    unpaired: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)


def _data_lines(source):
    """Yield ``(line_number, text)`` skipping ``#`` comments and blank lines."""
    for lineno, line in enumerate(source, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, line


def _open_text(source):
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8")
    return None


def _parse_float(text, lineno, column):
    try:
        value = float(text)
    except ValueError:
        raise CorpusFormatError(f"column {column!r}: not a number: {text!r}", lineno) from None
    if not math.isfinite(value):
        raise CorpusFormatError(f"column {column!r}: non-finite value {text!r}", lineno)
    return value


def _parse_int(text, lineno, column):
    try:
        return int(text)
    except ValueError:
        raise CorpusFormatError(f"column {column!r}: not an integer: {text!r}", lineno) from None


def _rows(source, required):
    handle = _open_text(source)
    stream = handle if handle is not None else source
    try:
        lines = list(_data_lines(stream))
    finally:
        if handle is not None:
            handle.close()
    if not lines:
        raise CorpusFormatError("empty input: header row required")
    numbers = [n for n, _ in lines]
    reader = csv.reader(text for _, text in lines)
    header = [h.strip() for h in next(reader)]
    missing = [c for c in required if c not in header]
    if missing:
        raise CorpusFormatError(f"missing required column(s): {', '.join(missing)}", numbers[0])
    index = {name: header.index(name) for name in required}
    for lineno, row in zip(numbers[1:], reader):
        if len(row) != len(header):
            raise CorpusFormatError(f"expected {len(header)} fields, got {len(row)}", lineno)
        yield lineno, {name: row[i].strip() for name, i in index.items()}


def read_trajectories(source) -> list[TrajectoryRecord]:
    """Parse a corpus CSV (path or text stream) into trajectory records.

    Rows are grouped by ``(speaker, word, modality, channel, rep)``. Within a
    group, time must increase strictly and be uniform to 1%; the sample rate
    is ``1 / median(dt)``. Records come back sorted by group.
    """
    groups = defaultdict(list)
    for lineno, row in _rows(source, CORPUS_COLUMNS):
        try:
            modality = Modality(row["modality"])
        except ValueError:
            raise CorpusFormatError(f"unknown modality {row['modality']!r}", lineno) from None
        if not row["channel"]:
            raise CorpusFormatError("empty channel label", lineno)
        rep = _parse_int(row["rep"], lineno, "rep")
        if rep < 0:
            raise CorpusFormatError("rep must be >= 0", lineno)
        key = (row["speaker"], row["word"], modality.value, row["channel"], rep)
        groups[key].append((lineno, _parse_float(row["t"], lineno, "t"), _parse_float(row["x"], lineno, "x")))

    records = []
    for key in sorted(groups):
        rows = groups[key]
        label = "/".join(str(part) for part in key)
        if len(rows) < 2:
            raise CorpusFormatError(f"group {label} has fewer than 2 samples", rows[0][0])
        t = np.array([r[1] for r in rows])
        dt = np.diff(t)
        bad = np.flatnonzero(dt <= 0)
        if bad.size:
            raise CorpusFormatError(f"time not increasing in group {label}", rows[bad[0] + 1][0])
        step = float(np.median(dt))
        off = np.flatnonzero(np.abs(dt - step) > GRID_RTOL * step)
        if off.size:
            raise NonUniformGridError(
                f"non-uniform time grid in group {label}: dt={dt[off[0]]:g} vs median {step:g}",
                rows[off[0] + 1][0],
            )
        speaker, word, modality, channel, rep = key
        records.append(
            TrajectoryRecord(
                speaker_id=speaker,
                word=word,
                modality=Modality(modality),
                channel=channel,
                sample_rate=1.0 / step,
                t0=float(t[0]),
                positions=np.array([r[2] for r in rows]),
                rep=rep,
            )
        )
    return records


def write_trajectories(records, sink, header_lines=()):
    """Write records in the corpus CSV format (inverse of ``read_trajectories``)."""
    handle = open(sink, "w", newline="", encoding="utf-8") if isinstance(sink, (str, Path)) else None
    out = handle if handle is not None else sink
    try:
        for line in header_lines:
            out.write(f"# {line}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CORPUS_COLUMNS)
        for rec in records:
            for t, x in zip(rec.times, rec.positions):
                writer.writerow((rec.speaker_id, rec.word, rec.modality.value, rec.channel,
                                 rec.rep, repr(float(t)), repr(float(x))))
    finally:
        if handle is not None:
            handle.close()


def pair_records(records) -> PairingReport:
    """Match EMA and ultrasound records that share a :class:`PairKey`.

    Returns a :class:`PairingReport` whose ``pairs`` holds
    ``(key, ema_record, us_record)`` sorted by key and whose ``unpaired``
    holds every record lacking a partner.
    """
    by_key = defaultdict(dict)
    for rec in records:
        slot = by_key[rec.key]
        if rec.modality in slot:
            raise DuplicateRecordError(f"duplicate {rec.modality.value} record for {rec.key}")
        slot[rec.modality] = rec
    report = PairingReport()
    for key in sorted(by_key):
        slot = by_key[key]
        if Modality.EMA in slot and Modality.US in slot:
            report.pairs.append((key, slot[Modality.EMA], slot[Modality.US]))
        else:
            report.unpaired.extend(slot.values())
    return report


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def result_row(res) -> dict:
    p = res.params
    return {
        "speaker": res.key.speaker_id,
        "word": res.key.word,
        "modality": Modality(res.modality).value,
        "channel": res.key.channel,
        "rep": res.key.rep,
        "gesture_index": res.gesture_index,
        "t_start": float(res.t_start),
        "t_end": float(res.t_end),
        "b": float(p.b),
        "k": float(p.k),
        "T": float(p.T),
        "damping_class": p.damping_class,
        "r2_pos": None if res.r2_pos is None else float(res.r2_pos),
        "r2_vel": None if res.r2_vel is None else float(res.r2_vel),
        "converged": bool(res.converged),
    }


def write_results(results, sink, header_lines=()):
    """Write fit results as CSV to a path or text stream.

    ``header_lines`` are emitted first as ``#`` comments. Floats use their
    shortest round-trip representation; an undefined R^2 is an empty field.
    """
    handle = open(sink, "w", newline="", encoding="utf-8") if isinstance(sink, (str, Path)) else None
    out = handle if handle is not None else sink
    try:
        for line in header_lines:
            out.write(f"# {line}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for res in results:
            row = result_row(res)
            writer.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])
    finally:
        if handle is not None:
            handle.close()


def _optional_float(text, lineno, column):
    return None if text == "" else _parse_float(text, lineno, column)


def read_results(source):
    """Parse a result CSV back into ``FitResult`` objects.

    ``n_iter`` is not part of the file format and reads back as 0.
    """
    from .estimate import FitResult
    from .oscillator import OscillatorParams

    out = []
    for lineno, row in _rows(source, RESULT_COLUMNS):
        try:
            modality = Modality(row["modality"])
        except ValueError:
            raise CorpusFormatError(f"unknown modality {row['modality']!r}", lineno) from None
        if row["converged"] not in ("true", "false"):
            raise CorpusFormatError(f"converged must be true/false, got {row['converged']!r}", lineno)
        out.append(
            FitResult(
                key=PairKey(row["speaker"], row["word"], row["channel"], _parse_int(row["rep"], lineno, "rep")),
                modality=modality,
                gesture_index=_parse_int(row["gesture_index"], lineno, "gesture_index"),
                t_start=_parse_float(row["t_start"], lineno, "t_start"),
                t_end=_parse_float(row["t_end"], lineno, "t_end"),
                params=OscillatorParams(
                    b=_parse_float(row["b"], lineno, "b"),
                    k=_parse_float(row["k"], lineno, "k"),
                    T=_parse_float(row["T"], lineno, "T"),
                ),
                r2_pos=_optional_float(row["r2_pos"], lineno, "r2_pos"),
                r2_vel=_optional_float(row["r2_vel"], lineno, "r2_vel"),
                converged=row["converged"] == "true",
                n_iter=0,
            )
        )
    return out


def to_text(writer, items, **kwargs) -> str:
    """Render ``writer(items, stream)`` into a string (handy for tests)."""
    buf = io.StringIO()
    writer(items, buf, **kwargs)
    return buf.getvalue()
