"""Far-field matrices on uniform direction sets and their text format."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ParseError

FORMAT_TOKEN = "ffmv1"


def uniform_directions(n):
    """Unit vectors ``d_j = (cos 2 pi j / n, sin 2 pi j / n)``, ``j = 0..n-1``."""
    if n < 1:
        raise ConfigurationError("need at least one direction")
    t = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(t), np.sin(t)])


@dataclass
class FarFieldMatrix:
    """Samples ``entries[l, m] = u_inf(d_l; d_m)`` (rows observe, columns incide).

    ``provenance`` is ``"SCREEN"`` or ``"AUX"``; ``params`` records the
    surface parameter or impedance used to produce the data.
    """

    entries: np.ndarray
    k: float
    provenance: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        n, m = self.entries.shape
        if n != m:
            raise ConfigurationError("far-field matrix must be square")
        if self.provenance not in ("SCREEN", "AUX"):
            raise ConfigurationError(f"unknown provenance {self.provenance!r}")

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def directions(self):
        return uniform_directions(self.n)

    @property
    def quad_weight(self):
        """Trapezoidal weight ``2 pi / N`` of the discrete L^2(S) product."""
        return 2.0 * np.pi / self.n

    def operator(self):
        """Matrix of the discretised far-field operator (weights folded in)."""
        return self.quad_weight * self.entries


def reciprocity_defect(F):
    """Relative violation of ``u_inf(xhat, d) = u_inf(-d, -xhat)``.

    Returns ``max |F[l, m] - F[m + N/2, l + N/2]| / max |F|``.
    """
    a = F.entries if isinstance(F, FarFieldMatrix) else np.asarray(F)
    n = a.shape[0]
    if n % 2:
        raise ConfigurationError("reciprocity check needs an even number of directions")
    idx = (np.arange(n) + n // 2) % n
    partner = a[np.ix_(idx, idx)].T
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - partner)) / scale)


def _format_params(params):
    def text(v):
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        return repr(v) if isinstance(v, float) else str(v).replace(" ", "")
    return " ".join(f"{key}={text(value)}" for key, value in sorted(params.items()))


def write_farfield(F, path):
    """Write ``F`` in the ``ffmv1`` text format."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{FORMAT_TOKEN}\n")
        fh.write(f"N {F.n}\n")
        fh.write(f"k {float(F.k)!r}\n")
        fh.write(f"provenance {F.provenance}\n")
        fh.write(f"params {_format_params(F.params)}\n")
        for row in F.entries:
            fh.write(" ".join(f"{float(v.real)!r} {float(v.imag)!r}" for v in row))
            fh.write("\n")


def _parse_value(text):
    for conv in (int, float, complex):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def read_farfield(path):
    """Read a matrix written by :func:`write_farfield`."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != FORMAT_TOKEN:
        raise ParseError(f"expected format token {FORMAT_TOKEN!r}", line=1)
    header = {}
    for lineno, key in zip(range(2, 6), ("N", "k", "provenance", "params")):
        if len(lines) < lineno:
            raise ParseError("truncated header", line=lineno)
        parts = lines[lineno - 1].split(maxsplit=1)
        if not parts or parts[0] != key:
            raise ParseError(f"expected {key!r}", line=lineno)
        header[key] = parts[1] if len(parts) > 1 else ""
    try:
        n = int(header["N"])
        k = float(header["k"])
    except ValueError as exc:
        raise ParseError(str(exc), line=2) from None
    params = {}
    for item in header["params"].split():
        key, _, value = item.partition("=")
        params[key] = _parse_value(value)
    rows = lines[5:5 + n]
    if len(rows) < n:
        raise ParseError(f"expected {n} matrix rows, found {len(rows)}", line=5 + len(rows) + 1)
    entries = np.empty((n, n), dtype=complex)
    for i, line in enumerate(rows):
        try:
            vals = np.array(line.split(), dtype=float)
        except ValueError:
            raise ParseError("non-numeric matrix entry", line=6 + i) from None
        if vals.size != 2 * n:
            raise ParseError(f"expected {2 * n} numbers, found {vals.size}", line=6 + i)
        entries[i] = vals[0::2] + 1j * vals[1::2]
    return FarFieldMatrix(entries, k, header["provenance"].strip(), params)
