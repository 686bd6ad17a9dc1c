"""Background mesh, interfaces, active meshes and macro-element partition.

The flattened "active element" ordering used throughout the package lists
every pair (subdomain i, background element j) with a non-empty intersection
K = I_j ∩ Ω_i in increasing spatial order.  Macro-elements are contiguous runs
of that ordering, so most downstream kernels work on index ranges.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, NoLargeElement

log = logging.getLogger(__name__)

MIN_CUT = 1e-12


@dataclass(frozen=True)
class BackgroundMesh:
    x_left: float
    x_right: float
    n_elements: int
    physical_left: float | None = None
    physical_right: float | None = None

    def __post_init__(self):
        if self.physical_left is None:
            object.__setattr__(self, "physical_left", float(self.x_left))
        if self.physical_right is None:
            object.__setattr__(self, "physical_right", float(self.x_right))

    @property
    def h(self) -> float:
        return (self.x_right - self.x_left) / self.n_elements

    @property
    def edges(self) -> np.ndarray:
        return self.x_left + self.h * np.arange(self.n_elements + 1)

    def left_edge(self, j):
        return self.x_left + self.h * np.asarray(j)

    def element_of(self, x: float) -> int:
        j = int(np.floor((x - self.x_left) / self.h))
        return min(max(j, 0), self.n_elements - 1)


@dataclass(frozen=True)
class InterfaceSet:
    """Interior interfaces, stored as (background element, cut fraction) pairs."""

    elements: np.ndarray
    fractions: np.ndarray
    h: float
    x_left: float
    alpha_cap: float = 0.0
    seed: int | None = None

    @property
    def positions(self) -> np.ndarray:
        return self.x_left + self.h * (self.elements + self.fractions)

    def __len__(self):
        return len(self.elements)


def build_background_mesh(x_left: float, x_right: float, n: int) -> BackgroundMesh:
    if not x_left < x_right:
        raise GeometryError("degenerate domain: need x_left < x_right")
    if n < 4:
        raise GeometryError("background mesh needs at least 4 elements")
    return BackgroundMesh(float(x_left), float(x_right), int(n))


def _clamp_fractions(fr: np.ndarray) -> np.ndarray:
    small = fr < MIN_CUT
    if np.any(small):
        log.warning("clamping %d cut fractions below %g", int(small.sum()), MIN_CUT)
        fr = np.where(small, MIN_CUT, fr)
    return fr


def generate_interfaces(mesh: BackgroundMesh, cut_region, alpha_cap: float, seed: int) -> InterfaceSet:
    """One random interface per background element whose left edge lies in [a, b).

    Each interface sits at alpha_k * h from the element's left edge, with
    alpha_k = s * alpha_cap and s uniform on [1e-6, 1].
    """
    if not 0.0 < alpha_cap < 1.0:
        raise GeometryError("alpha_cap must lie in (0, 1)")
    a, b = cut_region
    if a < mesh.x_left - 1e-12 or b > mesh.x_right + 1e-12:
        raise GeometryError("cut region outside the domain")
    left = mesh.left_edge(np.arange(mesh.n_elements))
    tol = 1e-9 * mesh.h
    elements = np.nonzero((left >= a - tol) & (left < b - tol))[0]
    rng = np.random.default_rng(seed)
    s = rng.uniform(1e-6, 1.0, size=len(elements))
    fractions = _clamp_fractions(s * alpha_cap)
    return InterfaceSet(elements.astype(int), fractions, mesh.h, mesh.x_left, alpha_cap, seed)


def interfaces_at(mesh: BackgroundMesh, positions) -> InterfaceSet:
    """Interfaces at prescribed coordinates (used for physical interfaces)."""
    positions = np.sort(np.atleast_1d(np.asarray(positions, dtype=float)))
    rel = (positions - mesh.x_left) / mesh.h
    elements = np.floor(rel).astype(int)
    fractions = rel - elements
    if np.any(fractions <= 0.0) or np.any(elements < 0) or np.any(elements >= mesh.n_elements):
        raise GeometryError("interfaces must lie strictly inside background elements")
    if len(np.unique(elements)) != len(elements):
        raise GeometryError("two interfaces share a background element")
    return InterfaceSet(elements, _clamp_fractions(fractions), mesh.h, mesh.x_left)


def no_interfaces(mesh: BackgroundMesh) -> InterfaceSet:
    return InterfaceSet(np.zeros(0, dtype=int), np.zeros(0), mesh.h, mesh.x_left)


def build_unfitted_boundary_mesh(x_l: float, x_r: float, n: int, alpha: float):
    """Background mesh on [x_l - (1-alpha) h, x_r + (1-alpha) h].

    The physical walls x_l and x_r then cut the first and last background
    elements, leaving boundary cells of width alpha*h inside [x_l, x_r].
    """
    if not 0.0 < alpha <= 1.0:
        raise GeometryError("alpha must lie in (0, 1]")
    h = (x_r - x_l) / (n - 2.0 * (1.0 - alpha))
    x_L = x_l - (1.0 - alpha) * h
    x_R = x_r + (1.0 - alpha) * h
    mesh = build_background_mesh(x_L, x_R, n)
    mesh = BackgroundMesh(mesh.x_left, mesh.x_right, n, float(x_l), float(x_r))
    return mesh, no_interfaces(mesh)


@dataclass
class ActiveMesh:
    subdomain: int
    elements: np.ndarray  # background indices
    a: np.ndarray  # intersection left ends
    b: np.ndarray  # intersection right ends
    cut: np.ndarray  # bool

    @property
    def lengths(self) -> np.ndarray:
        return self.b - self.a


def build_active_meshes(mesh: BackgroundMesh, ifaces: InterfaceSet) -> list[ActiveMesh]:
    bounds = np.concatenate(([mesh.physical_left], ifaces.positions, [mesh.physical_right]))
    h = mesh.h
    out = []
    for i in range(len(bounds) - 1):
        lo, hi = bounds[i], bounds[i + 1]
        j0 = mesh.element_of(lo)
        j1 = mesh.element_of(hi)
        # an end sitting exactly on a background edge belongs to the previous element
        if j1 > j0 and hi <= mesh.left_edge(j1) + 1e-14 * h:
            j1 -= 1
        js = np.arange(j0, j1 + 1)
        left = mesh.left_edge(js)
        a = np.maximum(left, lo)
        b = np.minimum(left + h, hi)
        # keep the stored interface offsets exact at the cut ends
        a[0] = lo
        b[-1] = hi
        keep = b - a > 0.0
        js, a, b = js[keep], a[keep], b[keep]
        cut = (b - a) < h * (1.0 - 1e-12)
        out.append(ActiveMesh(i, js, a, b, cut))
    return out


@dataclass
class MacroElement:
    subdomain: int
    owner: int  # background index of the large element
    members: np.ndarray  # background indices, increasing
    extent: tuple  # (left, right) of I_M
    stabilized_edges: list  # background edge coordinates between members
    weights: np.ndarray  # |K_j| / |I_M|

    @property
    def length(self) -> float:
        return self.extent[1] - self.extent[0]


@dataclass
class MacroElementPartition:
    delta: float
    macros: list = field(default_factory=list)  # per subdomain: list[MacroElement]

    def all(self):
        for sub in self.macros:
            yield from sub


def partition_macro_elements(active: ActiveMesh, delta: float, h: float) -> list[MacroElement]:
    """Macro-elements of one active mesh.

    A small element attaches to its left neighbour when that neighbour is
    large, otherwise to its right neighbour.
    """
    frac = active.lengths / h
    large = frac >= delta * (1.0 - 1e-14)
    n = len(frac)
    if not np.any(large):
        raise NoLargeElement(f"subdomain {active.subdomain} has no element with |K|/h >= {delta}")
    owner_of = np.empty(n, dtype=int)
    for t in range(n):
        if large[t]:
            owner_of[t] = t
        elif t > 0 and large[t - 1]:
            owner_of[t] = t - 1
        elif t + 1 < n and large[t + 1]:
            owner_of[t] = t + 1
        else:
            raise NoLargeElement(
                f"small element {active.elements[t]} in subdomain {active.subdomain} has no large neighbour"
            )
    macros = []
    for t in np.nonzero(large)[0]:
        idx = np.nonzero(owner_of == t)[0]
        left, right = active.a[idx[0]], active.b[idx[-1]]
        length = right - left
        edges = [float(active.b[k]) for k in idx[:-1]]
        macros.append(
            MacroElement(
                subdomain=active.subdomain,
                owner=int(active.elements[t]),
                members=active.elements[idx].copy(),
                extent=(float(left), float(right)),
                stabilized_edges=edges,
                weights=active.lengths[idx] / length,
            )
        )
    return macros


class MeshComplex:
    """Everything geometric a run needs, built once and shared read-only."""

    def __init__(self, mesh: BackgroundMesh, ifaces: InterfaceSet, delta: float = 0.2):
        self.mesh = mesh
        self.ifaces = ifaces
        self.delta = delta
        self.h = mesh.h
        self.active = build_active_meshes(mesh, ifaces)
        self.partition = MacroElementPartition(
            delta, [partition_macro_elements(am, delta, self.h) for am in self.active]
        )
        self._flatten()

    @property
    def n_subdomains(self) -> int:
        return len(self.active)

    def _flatten(self):
        sub, elem, a, b = [], [], [], []
        for am in self.active:
            sub.append(np.full(len(am.elements), am.subdomain))
            elem.append(am.elements)
            a.append(am.a)
            b.append(am.b)
        self.elem_sub = np.concatenate(sub)
        self.elem_j = np.concatenate(elem)
        self.elem_a = np.concatenate(a)
        self.elem_b = np.concatenate(b)
        self.elem_width = self.elem_b - self.elem_a
        self.elem_left = self.mesh.left_edge(self.elem_j)
        self.n_active = len(self.elem_j)

        starts, sizes, owner_pos = [], [], []
        offset = 0
        for am, macros in zip(self.active, self.partition.macros):
            for mac in macros:
                first = offset + int(np.searchsorted(am.elements, mac.members[0]))
                starts.append(first)
                sizes.append(len(mac.members))
                owner_pos.append(int(np.searchsorted(mac.members, mac.owner)))
            offset += len(am.elements)
        self.macro_start = np.array(starts, dtype=int)
        self.macro_size = np.array(sizes, dtype=int)
        self.macro_owner = np.array(owner_pos, dtype=int)
        self.n_macros = len(starts)
        self.elem_macro = np.repeat(np.arange(self.n_macros), self.macro_size)

    def macros(self):
        return list(self.partition.all())

    @property
    def total_length(self) -> float:
        return float(np.sum(self.elem_width))

    def locate(self, x):
        """Active element index containing each x (right-continuous, last element closed)."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.elem_b, x, side="right")
        return np.clip(idx, 0, self.n_active - 1)
