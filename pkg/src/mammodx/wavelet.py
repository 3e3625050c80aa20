"""Daubechies filter banks and the separable 2D discrete wavelet transform.

Conventions (fixed here, documented once):

* Boundary handling is periodic (circular).  This keeps the transform
  orthonormal, so subband sizes halve exactly and total energy is
  preserved to rounding error.
* Analysis phase: ``out[m] = sum_k taps[k] * x[(2*m + k) % n]``.
* Subband orientation: rows are filtered first, then columns of each
  half.  H is the high-pass-along-columns output of the row-lowpassed
  half (it responds to horizontal edges), V the low-pass-along-columns
  output of the row-highpassed half, D high-pass in both.

Everything operates on float64 and returns fresh arrays; inputs are
never mutated.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

FILTER_NAMES = ("daub4", "daub8")

# Orthonormal Daubechies taps (4 and 8 taps), minimum-phase ordering,
# normalised so sum(h) = sqrt(2).  Computed once by spectral
# factorisation at 60-digit precision and rounded to float64; the
# invariant check below refuses to import if a constant is off.
_DAUB4_LOWPASS = (
    0.4829629131445341433748716,
    0.8365163037378079055752938,
    0.2241438680420133810259728,
    -0.1294095225512603811744494,
)
_DAUB8_LOWPASS = (
    0.2303778133088965008632912,
    0.7148465705529156470899220,
    0.6308807679298589078817163,
    -0.0279837694168598542114138,
    -0.1870348117190930840795707,
    0.0308413818355607636272194,
    0.0328830116668851997354075,
    -0.0105974017850690321048832,
)

_INVARIANT_TOL = 1e-12


@dataclass(frozen=True)
class WaveletFilter:
    """One orthonormal analysis filter pair."""

    name: str
    lowpass: np.ndarray
    highpass: np.ndarray

    def __len__(self) -> int:
        return len(self.lowpass)


class SubbandSet(NamedTuple):
    """Single-level 2D DWT output: approximation plus three detail planes."""

    a: np.ndarray
    h: np.ndarray
    v: np.ndarray
    d: np.ndarray


class DetailBands(NamedTuple):
    """The three detail planes kept per level of a multilevel decomposition.

    The approximation plane is not stored per level: it is consumed by
    the next decomposition step (only the deepest one survives, on the
    enclosing MultilevelDecomposition).
    """

    h: np.ndarray
    v: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class MultilevelDecomposition:
    filter_name: str
    level_count: int
    levels: tuple[DetailBands, ...]  # level 1 (finest) first
    final_approximation: np.ndarray
    original_shape: tuple[int, int]


def _quadrature_mirror(lowpass: np.ndarray) -> np.ndarray:
    # g[k] = (-1)^k * h[L-1-k]
    signs = np.where(np.arange(len(lowpass)) % 2 == 0, 1.0, -1.0)
    return signs * lowpass[::-1]


def _validate_taps(name: str, h: np.ndarray) -> None:
    if abs(h.sum() - np.sqrt(2.0)) > _INVARIANT_TOL:
        raise AssertionError(f"{name}: lowpass sum != sqrt(2)")
    if abs((h * h).sum() - 1.0) > _INVARIANT_TOL:
        raise AssertionError(f"{name}: lowpass energy != 1")
    for shift in range(2, len(h), 2):
        if abs((h[:-shift] * h[shift:]).sum()) > _INVARIANT_TOL:
            raise AssertionError(f"{name}: not orthogonal to even shift {shift}")


def _build_filter(name: str, taps: tuple[float, ...]) -> WaveletFilter:
    h = np.asarray(taps, dtype=np.float64)
    _validate_taps(name, h)
    g = _quadrature_mirror(h)
    h.setflags(write=False)
    g.setflags(write=False)
    return WaveletFilter(name=name, lowpass=h, highpass=g)


_FILTERS = {
    "daub4": _build_filter("daub4", _DAUB4_LOWPASS),
    "daub8": _build_filter("daub8", _DAUB8_LOWPASS),
}


def make_filter(name: str) -> WaveletFilter:
    """Return the validated filter bank for ``daub4`` or ``daub8``."""
    try:
        return _FILTERS[name]
    except KeyError:
        raise ValueError(
            f"unsupported wavelet {name!r}; supported: {', '.join(FILTER_NAMES)}"
        ) from None


def _check_length(n: int, filt: WaveletFilter) -> None:
    if n % 2 != 0:
        raise ValueError(f"signal length {n} is odd")
    if n < len(filt):
        raise ValueError(f"signal length {n} shorter than filter ({len(filt)} taps)")


def _analyze_last_axis(x: np.ndarray, filt: WaveletFilter):
    """Periodic filter-and-downsample along the last axis."""
    n = x.shape[-1]
    taps = len(filt)
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(taps)[None, :]) % n
    windows = x[..., idx]  # (..., n/2, taps)
    return windows @ filt.lowpass, windows @ filt.highpass


def _synthesize_last_axis(approx: np.ndarray, detail: np.ndarray, filt: WaveletFilter) -> np.ndarray:
    """Adjoint of _analyze_last_axis; the exact inverse for orthonormal taps."""
    half = approx.shape[-1]
    n = 2 * half
    out = np.zeros(approx.shape[:-1] + (n,), dtype=np.float64)
    pos = 2 * np.arange(half)
    for k in range(len(filt)):
        # for fixed k the target positions are distinct, so += is safe
        out[..., (pos + k) % n] += approx * filt.lowpass[k] + detail * filt.highpass[k]
    return out


def dwt1d(signal, filt: WaveletFilter):
    """One analysis step: returns (approx, detail), each half the input length."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("dwt1d expects a 1D signal")
    _check_length(x.shape[0], filt)
    return _analyze_last_axis(x, filt)


def idwt1d(approx, detail, filt: WaveletFilter) -> np.ndarray:
    """Inverse of dwt1d; returns a signal of length 2*len(approx)."""
    a = np.asarray(approx, dtype=np.float64)
    d = np.asarray(detail, dtype=np.float64)
    if a.ndim != 1 or d.ndim != 1:
        raise ValueError("idwt1d expects 1D coefficient sequences")
    if a.shape != d.shape:
        raise ValueError(f"approx/detail length mismatch: {a.shape[0]} vs {d.shape[0]}")
    return _synthesize_last_axis(a, d, filt)


def dwt2d(image, filt: WaveletFilter) -> SubbandSet:
    """Separable 2D analysis step: rows first, then columns of each half."""
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("dwt2d expects a 2D plane")
    rows, cols = x.shape
    _check_length(cols, filt)
    _check_length(rows, filt)
    lo, hi = _analyze_last_axis(x, filt)  # along rows
    a, h = (p.T for p in _analyze_last_axis(lo.T, filt))  # along columns
    v, d = (p.T for p in _analyze_last_axis(hi.T, filt))
    return SubbandSet(a=a, h=h, v=v, d=d)


def idwt2d(subbands: SubbandSet, filt: WaveletFilter) -> np.ndarray:
    """Inverse of dwt2d."""
    a, h, v, d = (np.asarray(p, dtype=np.float64) for p in subbands)
    if not (a.shape == h.shape == v.shape == d.shape):
        raise ValueError(
            f"subband shape mismatch: A{a.shape} H{h.shape} V{v.shape} D{d.shape}"
        )
    lo = _synthesize_last_axis(a.T, h.T, filt).T
    hi = _synthesize_last_axis(v.T, d.T, filt).T
    return _synthesize_last_axis(lo, hi, filt)


def decompose_multilevel(image, filt: WaveletFilter, levels: int = 3) -> MultilevelDecomposition:
    """Iterate dwt2d on successive approximations.

    Level 1 is the finest.  Each level keeps only its H/V/D detail
    planes; the approximation is fed to the next level, and the deepest
    one is returned as ``final_approximation``.
    """
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a 2D plane")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    rows, cols = x.shape
    scale = 2 ** levels
    if rows % scale != 0 or cols % scale != 0:
        raise ValueError(
            f"image dims {rows}x{cols} not divisible by 2^{levels} = {scale}"
        )
    details = []
    approx = x
    for _ in range(levels):
        bands = dwt2d(approx, filt)  # re-checks dim >= tap count per level
        details.append(DetailBands(h=bands.h, v=bands.v, d=bands.d))
        approx = bands.a
    return MultilevelDecomposition(
        filter_name=filt.name,
        level_count=levels,
        levels=tuple(details),
        final_approximation=approx,
        original_shape=(rows, cols),
    )


def reconstruct_multilevel(decomp: MultilevelDecomposition, filt: WaveletFilter) -> np.ndarray:
    """Fold idwt2d over the levels; inverse of decompose_multilevel."""
    if filt.name != decomp.filter_name:
        raise ValueError(
            f"decomposition used {decomp.filter_name!r}, got filter {filt.name!r}"
        )
    approx = decomp.final_approximation
    for bands in reversed(decomp.levels):
        approx = idwt2d(SubbandSet(a=approx, h=bands.h, v=bands.v, d=bands.d), filt)
    return approx


def save_decomposition(decomp: MultilevelDecomposition, out_dir) -> list[str]:
    """Write each coefficient plane as a plain text matrix.

    Files are named ``{level}_{subband}.txt`` (subband in H, V, D plus a
    final A at the deepest level), one row of space-separated decimals
    per matrix row, for cross-implementation comparison.  Returns the
    file names written.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for level, bands in enumerate(decomp.levels, start=1):
        for tag, plane in (("H", bands.h), ("V", bands.v), ("D", bands.d)):
            name = f"{level}_{tag}.txt"
            np.savetxt(os.path.join(out_dir, name), plane, fmt="%.17g", delimiter=" ")
            written.append(name)
    name = f"{decomp.level_count}_A.txt"
    np.savetxt(os.path.join(out_dir, name), decomp.final_approximation,
               fmt="%.17g", delimiter=" ")
    written.append(name)
    return written
