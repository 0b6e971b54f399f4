"""
Channel Core
Alphabets, priors, channel matrices and the min-entropy quantities built on them.
All entropies are in bits.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import AlphabetMismatch, InvalidAlphabet, InvalidChannel, InvalidDistribution, MatrixFormatError
from .settings import DEFAULT_SETTINGS

STOCHASTIC_TOL = DEFAULT_SETTINGS.stochastic_tol


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of distinct element names"""
    labels: Tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        object.__setattr__(self, 'labels', labels)
        if len(labels) < 1:
            raise InvalidAlphabet("alphabet needs at least one label")
        if len(set(labels)) != len(labels):
            dupes = sorted({label for label in labels if labels.count(label) > 1})
            raise InvalidAlphabet(f"alphabet labels must be distinct (duplicates: {', '.join(dupes)})")

    @classmethod
    def range(cls, n: int, prefix: str = "") -> 'Alphabet':
        return cls(tuple(f"{prefix}{i}" for i in range(n)))

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"'{label}' is not in the alphabet") from None

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)


@dataclass(frozen=True)
class PriorDistribution:
    """Probability distribution over an alphabet (attacker side information)"""
    alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen_array(self.probs)
        object.__setattr__(self, 'probs', probs)
        if probs.shape != (self.alphabet.size,):
            raise InvalidDistribution(
                f"prior has {probs.size} entries for an alphabet of {self.alphabet.size}")
        if not np.all(np.isfinite(probs)):
            raise InvalidDistribution(f"prior has non-finite entries: {probs.tolist()!r}")
        if np.any(probs < 0):
            raise InvalidDistribution(f"prior has negative entry {probs.min()!r}")
        total = float(probs.sum())
        if abs(total - 1.0) > STOCHASTIC_TOL:
            raise InvalidDistribution(f"prior sums to {total!r}, not 1")


@dataclass(frozen=True)
class Violation:
    """One failed stochasticity check"""
    row: int
    kind: str  # "negative", "non_finite" or "row_sum"
    deviation: float
    column: Optional[int] = None

    def describe(self) -> str:
        if self.kind == "negative":
            return f"row {self.row}: negative entry {self.deviation:.3g} at column {self.column}"
        if self.kind == "non_finite":
            return f"row {self.row}: non-finite entry {self.deviation} at column {self.column}"
        return f"row {self.row}: row sum deviates from 1 by {self.deviation:.3g}"


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: List[Violation] = field(default_factory=list)


def validate(m, tol: float = STOCHASTIC_TOL) -> ValidationReport:
    """Check nonnegativity (strict, no tolerance) and row sums within tol of 1

    Accepts a ChannelMatrix or any 2D array-like.
    """
    entries = m.entries if isinstance(m, ChannelMatrix) else np.asarray(m, dtype=np.float64)
    violations = []
    if entries.ndim != 2:
        return ValidationReport(False, [Violation(0, "row_sum", float('nan'))])

    for i, row in enumerate(entries):
        finite = np.isfinite(row)
        for j in np.flatnonzero(~finite):
            violations.append(Violation(i, "non_finite", float(row[j]), int(j)))
        if not finite.all():
            continue
        for j in np.flatnonzero(row < 0):
            violations.append(Violation(i, "negative", float(row[j]), int(j)))
        deviation = float(row.sum()) - 1.0
        if abs(deviation) > tol:
            violations.append(Violation(i, "row_sum", abs(deviation)))

    return ValidationReport(not violations, violations)


@dataclass(frozen=True)
class ChannelMatrix:
    """Row-stochastic matrix, entries[i][j] = p(output_j | input_i)"""
    input: Alphabet
    output: Alphabet
    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen_array(self.entries)
        object.__setattr__(self, 'entries', entries)
        if entries.shape != (self.input.size, self.output.size):
            raise InvalidChannel(
                f"matrix shape {entries.shape} does not match alphabets "
                f"{self.input.size}x{self.output.size}")
        report = validate(entries)
        if not report.passed:
            raise InvalidChannel(
                f"matrix is not row-stochastic ({len(report.violations)} violations)",
                report.violations)

    @classmethod
    def from_rows(cls, rows, input_labels=None, output_labels=None) -> 'ChannelMatrix':
        entries = np.array(rows, dtype=np.float64)
        n_rows, n_cols = entries.shape
        inp = Alphabet(tuple(input_labels)) if input_labels is not None else Alphabet.range(n_rows)
        out = Alphabet(tuple(output_labels)) if output_labels is not None else Alphabet.range(n_cols)
        return cls(inp, out, entries)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    def with_entries(self, entries, output: Optional[Alphabet] = None) -> 'ChannelMatrix':
        """Same input alphabet, new entries (and optionally new output alphabet)"""
        return ChannelMatrix(self.input, output or self.output, entries)

    def column_maxima(self) -> np.ndarray:
        return self.entries.max(axis=0)

    def nonzero_columns(self) -> np.ndarray:
        return np.flatnonzero(self.column_maxima() > 0)

    def __repr__(self):
        return f"ChannelMatrix({self.input.size}x{self.output.size})"


@dataclass(frozen=True)
class LeakageFigures:
    h_inf_prior: float
    h_inf_posterior: float
    leakage: float
    capacity: float


def require_same_alphabet(a: Alphabet, b: Alphabet, what: str):
    if a != b:
        raise AlphabetMismatch(f"{what}: alphabets differ ({a.size} vs {b.size} labels)")


def uniform_prior(alphabet: Alphabet) -> PriorDistribution:
    return PriorDistribution(alphabet, np.full(alphabet.size, 1.0 / alphabet.size))


def prior_vulnerability(p: PriorDistribution) -> float:
    """Probability of guessing X in one try before observing anything"""
    return float(p.probs.max())


def posterior_vulnerability(p: PriorDistribution, m: ChannelMatrix) -> float:
    """Expected one-try success after observing the output: sum of joint column maxima"""
    return float(joint(p, m).max(axis=0).sum())


def min_entropy(p: PriorDistribution) -> float:
    top = prior_vulnerability(p)
    return float('inf') if top == 0 else float(-np.log2(top))


def joint(p: PriorDistribution, m: ChannelMatrix) -> np.ndarray:
    """entry[i][j] = p(i) * m[i][j]"""
    require_same_alphabet(p.alphabet, m.input, "joint")
    return p.probs[:, None] * m.entries


def conditional_min_entropy(p: PriorDistribution, m: ChannelMatrix) -> float:
    return float(-np.log2(posterior_vulnerability(p, m)))


def capacity(m: ChannelMatrix) -> float:
    """log2 of the sum of the column maxima (leakage at the uniform prior)"""
    return float(np.log2(m.column_maxima().sum()))


def min_entropy_leakage(p: PriorDistribution, m: ChannelMatrix) -> LeakageFigures:
    prior_h = min_entropy(p)
    posterior_h = conditional_min_entropy(p, m)
    return LeakageFigures(
        h_inf_prior=prior_h,
        h_inf_posterior=posterior_h,
        leakage=prior_h - posterior_h,
        capacity=capacity(m),
    )


def drop_zero_columns(m: ChannelMatrix) -> ChannelMatrix:
    """Remove all-zero columns (keeps the order of the others)"""
    keep = m.nonzero_columns()
    output = Alphabet(tuple(m.output.labels[j] for j in keep))
    return m.with_entries(m.entries[:, keep], output)


def pad_zero_columns(m: ChannelMatrix, n_cols: int, prefix: str = "pad") -> ChannelMatrix:
    """Append all-zero columns until the matrix has n_cols columns"""
    missing = n_cols - m.output.size
    if missing <= 0:
        return m
    extra = []
    k = 0
    while len(extra) < missing:
        label = f"{prefix}{k}"
        if label not in m.output.labels:
            extra.append(label)
        k += 1
    entries = np.hstack([m.entries, np.zeros((m.input.size, missing))])
    return m.with_entries(entries, Alphabet(m.output.labels + tuple(extra)))


# --- CSV / prior I/O ---

def parse_number(text: str) -> float:
    """Plain decimals and exact fractions 'a/b'"""
    try:
        return float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError):
        raise MatrixFormatError(f"cannot parse '{text}' as a number") from None


def read_matrix_csv(path) -> Tuple[Tuple[str, ...], Tuple[str, ...], np.ndarray]:
    """Raw read: (input labels, output labels, entries) without validation

    The header row is taken verbatim so repeated output labels reach Alphabet
    instead of being renamed by pandas.
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype=str, header=None, keep_default_na=False,
                         skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise MatrixFormatError(f"cannot read matrix '{path}': {e}") from None

    cells = df.to_numpy()
    if cells.shape[0] < 2 or cells.shape[1] < 2:
        raise MatrixFormatError(f"'{path}' needs a header row and a label column")
    outputs = tuple(str(c).strip() for c in cells[0, 1:])
    inputs = tuple(str(i).strip() for i in cells[1:, 0])
    entries = np.array([[parse_number(cell) for cell in row] for row in cells[1:, 1:]],
                       dtype=np.float64).reshape(len(inputs), len(outputs))
    return inputs, outputs, entries


def load_matrix(path, tol: float = STOCHASTIC_TOL) -> ChannelMatrix:
    inputs, outputs, entries = read_matrix_csv(path)
    report = validate(entries, tol)
    if not report.passed:
        raise InvalidChannel(f"'{path}' is not a valid channel matrix", report.violations)
    return ChannelMatrix(Alphabet(inputs), Alphabet(outputs), entries)


def write_matrix_csv(m: ChannelMatrix, path, pad_columns: Optional[int] = None):
    """Write with 17 significant digits; pad_columns appends zero columns first"""
    if pad_columns is not None:
        m = pad_zero_columns(m, pad_columns)
    df = pd.DataFrame(m.entries, index=list(m.input.labels), columns=list(m.output.labels))
    df.to_csv(path, float_format="%.17g")


def matrix_to_csv_text(m: ChannelMatrix) -> str:
    df = pd.DataFrame(m.entries, index=list(m.input.labels), columns=list(m.output.labels))
    return df.to_csv(float_format="%.17g")


def load_prior_file(path, alphabet: Alphabet) -> PriorDistribution:
    """One 'label,probability' line per element, any order"""
    probs = np.zeros(alphabet.size)
    seen = set()
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise MatrixFormatError(f"cannot read prior '{path}': {e}") from None

    for line_no, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        parts = [part.strip() for part in line.split(',')]
        if len(parts) != 2:
            raise MatrixFormatError(f"{path}:{line_no}: expected 'label,probability'")
        label, value = parts
        try:
            idx = alphabet.index(label)
        except KeyError as e:
            raise AlphabetMismatch(f"{path}:{line_no}: {e.args[0]}") from None
        probs[idx] = parse_number(value)
        seen.add(idx)

    if len(seen) != alphabet.size:
        missing = [alphabet.labels[i] for i in range(alphabet.size) if i not in seen]
        raise AlphabetMismatch(f"prior file misses labels: {', '.join(missing)}")
    return PriorDistribution(alphabet, probs)


def prior_from_spec(spec: str, alphabet: Alphabet) -> PriorDistribution:
    """'uniform' | 'file:PATH' | 'p=0.1,0.2,...' (fractions allowed)"""
    spec = spec.strip()
    if spec == "uniform":
        return uniform_prior(alphabet)
    if spec.startswith("file:"):
        return load_prior_file(spec[len("file:"):], alphabet)
    if spec.startswith("p="):
        values = [parse_number(v) for v in spec[2:].split(',') if v.strip()]
        if len(values) != alphabet.size:
            raise AlphabetMismatch(
                f"inline prior has {len(values)} entries for {alphabet.size} labels")
        return PriorDistribution(alphabet, values)
    raise MatrixFormatError(f"unknown prior spec '{spec}' (use uniform, file:PATH or p=...)")
