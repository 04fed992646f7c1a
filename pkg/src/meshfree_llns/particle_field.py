"""Ordered 1D Lagrangian particle sets, neighbor search and particle management."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import DegenerateFieldError, InsufficientNeighborhoodError, InvalidConfigError
from .gas_model import PrimitiveState

H_FACTOR = 3.0
GAP_MAX = 1.5
GAP_MIN = 0.25
# relative slack on the support radius so exact lattice distances (3*dx0) survive rounding
RADIUS_SLACK = 1e-9


@dataclass(frozen=True)
class Periodic:
    pass


@dataclass(frozen=True)
class FixedState:
    """Far-field states held outside both ends of the domain.

    ``dx_left``/``dx_right`` are the particle spacings used for ghost layers
    and inflow insertion on each side, in cm.
    """

    left: PrimitiveState
    right: PrimitiveState
    dx_left: float
    dx_right: float


Boundary = Union[Periodic, FixedState]


@dataclass
class ParticleField:
    x: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    T: np.ndarray
    domain: tuple
    boundary: Boundary
    dx0: float
    h: float
    # per-particle integer tags; only used to keep identities through a step
    ids: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("x", "rho", "u", "T"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))
        if self.ids is None:
            self.ids = np.arange(self.x.size)

    def __len__(self):
        return self.x.size

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    @property
    def periodic(self) -> bool:
        return isinstance(self.boundary, Periodic)

    def copy(self) -> "ParticleField":
        return replace(self, x=self.x.copy(), rho=self.rho.copy(), u=self.u.copy(),
                       T=self.T.copy(), ids=self.ids.copy())

    def state(self, i: int) -> PrimitiveState:
        return PrimitiveState(float(self.rho[i]), float(self.u[i]), float(self.T[i]))

    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.x) > 0))


def init_uniform(L: float, N: int, state0: PrimitiveState, boundary: Boundary | None = None,
                 x_min: float = 0.0, h_factor: float = H_FACTOR) -> ParticleField:
    """Regular lattice ``x_i = x_min + (i + 1/2) L/N`` carrying ``state0``."""
    if N < 4:
        raise InvalidConfigError(f"need at least 4 particles, got {N}")
    if not L > 0:
        raise InvalidConfigError("domain length must be positive")
    dx0 = L / N
    x = x_min + (np.arange(N) + 0.5) * dx0
    return ParticleField(
        x=x,
        rho=np.full(N, state0.rho),
        u=np.full(N, state0.u),
        T=np.full(N, state0.T),
        domain=(x_min, x_min + L),
        boundary=Periodic() if boundary is None else boundary,
        dx0=dx0,
        h=h_factor * dx0,
    )


def neighbors(field: ParticleField, x: float, exclude: int | None = None, strict: bool = True) -> np.ndarray:
    """Indices of particles within ``field.h`` of ``x``, nearest first.

    Periodic fields use the minimum-image distance. ``exclude`` drops the
    query particle itself. Raises InsufficientNeighborhoodError for fewer
    than two hits unless ``strict`` is false.
    """
    xs = field.x
    h = field.h * (1.0 + RADIUS_SLACK)
    if field.periodic:
        L = field.length
        windows = [(x - h, x + h)]
        lo, hi = field.domain
        if x - h < lo:
            windows.append((x - h + L, hi))
        if x + h >= hi:
            windows.append((lo, x + h - L))
        found = set()
        for a, b in windows:
            i0 = np.searchsorted(xs, a, side="left")
            i1 = np.searchsorted(xs, b, side="right")
            found.update(range(i0, i1))
        idx = np.fromiter(found, dtype=np.intp, count=len(found))
        d = np.abs(xs[idx] - x)
        d = np.minimum(d, L - d)
    else:
        i0 = np.searchsorted(xs, x - h, side="left")
        i1 = np.searchsorted(xs, x + h, side="right")
        idx = np.arange(i0, i1)
        d = np.abs(xs[idx] - x)
    keep = d <= h
    if exclude is not None:
        keep &= idx != exclude
    idx, d = idx[keep], d[keep]
    order = np.lexsort((idx, d))
    idx = idx[order]
    if strict and idx.size < 2:
        raise InsufficientNeighborhoodError(f"only {idx.size} neighbor(s) near x={x:g}")
    return idx


def _gaps(field: ParticleField) -> np.ndarray:
    g = np.diff(field.x)
    if field.periodic:
        g = np.append(g, field.x[0] + field.length - field.x[-1])
    return g


def needs_management(field: ParticleField, gap_max: float = GAP_MAX, gap_min: float = GAP_MIN) -> bool:
    g = _gaps(field)
    return bool(g.size and (g.max() > gap_max * field.dx0 or g.min() < gap_min * field.dx0))


def manage_particles(field: ParticleField, gap_max: float = GAP_MAX, gap_min: float = GAP_MIN):
    """Merge too-close pairs and split too-wide gaps until neither remains.

    Returns ``(new_field, added, removed)``. Merged and inserted particles
    take the midpoint position and the arithmetic-mean state of the pair.
    """
    if not needs_management(field, gap_max, gap_min):
        return field, 0, 0
    L = field.length
    lo = field.domain[0]
    x, rho, u, T = (list(a) for a in (field.x, field.rho, field.u, field.T))
    added = removed = 0
    periodic = field.periodic
    lo_gap, hi_gap = gap_min * field.dx0, gap_max * field.dx0

    def pair_gap(i):
        j = (i + 1) % len(x)
        return x[j] - x[i] + (L if j == 0 else 0.0)

    changed = True
    while changed:
        changed = False
        n_pairs = len(x) if periodic else len(x) - 1
        for i in range(n_pairs):
            if pair_gap(i) < lo_gap:
                j = (i + 1) % len(x)
                xm = x[i] + 0.5 * pair_gap(i)
                merged = (xm, 0.5 * (rho[i] + rho[j]), 0.5 * (u[i] + u[j]), 0.5 * (T[i] + T[j]))
                for arr, val in zip((x, rho, u, T), merged):
                    arr[i] = val
                    del arr[j]
                removed += 1
                changed = True
                break
            if pair_gap(i) > hi_gap:
                j = (i + 1) % len(x)
                xm = x[i] + 0.5 * pair_gap(i)
                new = (xm, 0.5 * (rho[i] + rho[j]), 0.5 * (u[i] + u[j]), 0.5 * (T[i] + T[j]))
                for arr, val in zip((x, rho, u, T), new):
                    arr.insert(i + 1, val)
                added += 1
                changed = True
                break
        if len(x) < 4:
            raise DegenerateFieldError(f"only {len(x)} particles left after management")
    x = np.array(x)
    rho, u, T = np.array(rho), np.array(u), np.array(T)
    if periodic:
        x = np.where(x >= lo + L, x - L, x)
    order = np.argsort(x, kind="stable")
    out = replace(field, x=x[order], rho=rho[order], u=u[order], T=T[order],
                  ids=np.arange(x.size))
    return out, added, removed


def apply_boundary(field: ParticleField):
    """Wrap (periodic) or delete/replenish (fixed-state) boundary particles.

    Returns ``(new_field, added, removed)``.
    """
    lo, hi = field.domain
    if field.periodic:
        L = hi - lo
        x = lo + np.mod(field.x - lo, L)
        x = np.where(x >= hi, x - L, x)
        order = np.argsort(x, kind="stable")
        out = replace(field, x=x[order], rho=field.rho[order], u=field.u[order],
                      T=field.T[order], ids=field.ids[order])
        return out, 0, 0
    bc = field.boundary
    inside = (field.x >= lo) & (field.x <= hi)
    removed = int(np.count_nonzero(~inside))
    x = list(field.x[inside])
    cols = [list(a[inside]) for a in (field.rho, field.u, field.T)]
    added = 0
    if not x:
        raise DegenerateFieldError("all particles left the domain")
    while x[0] - lo >= bc.dx_left:
        x.insert(0, x[0] - bc.dx_left)
        for col, v in zip(cols, (bc.left.rho, bc.left.u, bc.left.T)):
            col.insert(0, v)
        added += 1
    while hi - x[-1] >= bc.dx_right:
        x.append(x[-1] + bc.dx_right)
        for col, v in zip(cols, (bc.right.rho, bc.right.u, bc.right.T)):
            col.append(v)
        added += 1
    out = replace(field, x=np.array(x), rho=np.array(cols[0]), u=np.array(cols[1]),
                  T=np.array(cols[2]), ids=np.arange(len(x)))
    return out, added, removed


def ghost_layers(field: ParticleField):
    """Ghost particles for a fixed-state field as ``(x, rho, u, T, n_left)``.

    Each layer is anchored at the outermost interior particle and extends at
    least ``h`` beyond it at the far-field spacing. Periodic fields have none.
    """
    if field.periodic:
        e = np.empty(0)
        return e, e, e, e, 0
    bc = field.boundary
    h = field.h * (1.0 + RADIUS_SLACK)
    nl = int(math.floor(h / bc.dx_left)) + 1
    nr = int(math.floor(h / bc.dx_right)) + 1
    xl = field.x[0] - bc.dx_left * np.arange(nl, 0, -1)
    xr = field.x[-1] + bc.dx_right * np.arange(1, nr + 1)
    x = np.concatenate([xl, xr])
    rho = np.concatenate([np.full(nl, bc.left.rho), np.full(nr, bc.right.rho)])
    u = np.concatenate([np.full(nl, bc.left.u), np.full(nr, bc.right.u)])
    T = np.concatenate([np.full(nl, bc.left.T), np.full(nr, bc.right.T)])
    return x, rho, u, T, nl


def write_snapshot(path, fields_by_step):
    """CSV with one row per particle: step, x, rho, u, T."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "x", "rho", "u", "T"])
        for step, f in fields_by_step:
            for row in zip(f.x, f.rho, f.u, f.T):
                w.writerow([step, *(repr(float(v)) for v in row)])
