"""Spin-lattice topology, classical exchange energy, and effective fields.

A lattice is an immutable graph of unit spins. Sites carry a 2-D position
(used only for export), a longitudinal field energy h_j, and a region
label; bonds carry exchange couplings J_jk. The classical energy is

    H = - sum over bonds (j,k) of J_jk S_j . S_k  -  sum over j of h_j S_jz

with every bond counted once, so the effective field entering the torque
equation is B_j = sum over neighbors k of J_jk S_k + h_j z_hat, i.e. the
negative gradient of H with respect to S_j.

Units: hbar = 1, lattice spacing 1, |S_j| = 1; couplings and fields are
energies in units of the nominal exchange coupling.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .errors import InvalidTopologyError, UnsupportedJunctionError

if TYPE_CHECKING:
    from .logic import GateNetlist

_Z = np.array([0.0, 0.0, 1.0])


@dataclass
class SpinState:
    """Per-site unit spin vectors at a given time.

    ``spins`` has shape (n_sites, 3); ``time`` is in units of hbar over the
    nominal exchange coupling.
    """

    spins: np.ndarray
    time: float = 0.0

    def copy(self) -> "SpinState":
        return SpinState(self.spins.copy(), self.time)

    def max_norm_error(self) -> float:
        """Largest deviation of any spin length from 1."""
        norms = np.linalg.norm(self.spins, axis=1)
        return float(np.max(np.abs(norms - 1.0)))

    def check(self, n_sites: int, tol: float = 1e-12) -> None:
        if self.spins.shape != (n_sites, 3):
            raise ValueError(
                f"state has shape {self.spins.shape}, lattice has {n_sites} sites"
            )
        err = self.max_norm_error()
        if err > tol:
            raise ValueError(f"spin norms deviate from 1 by {err:.3e} (tol {tol:.0e})")


class SpinLattice:
    """Immutable graph of spin sites with couplings, fields, and regions.

    Regions are named, ordered tuples of site ids. Arm regions are ordered
    from the outer end toward the junction so that packet positions can be
    given as indices along the arm.
    """

    def __init__(
        self,
        positions: np.ndarray,
        bonds: np.ndarray,
        couplings: np.ndarray,
        fields: np.ndarray,
        regions: dict[str, tuple[int, ...]],
    ):
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        n = positions.shape[0]
        bonds = np.asarray(bonds, dtype=np.int64).reshape(-1, 2)
        couplings = np.asarray(couplings, dtype=float).reshape(-1)
        fields = np.asarray(fields, dtype=float).reshape(-1)
        if bonds.shape[0] != couplings.shape[0]:
            raise InvalidTopologyError("one coupling value required per bond")
        if fields.shape[0] != n:
            raise InvalidTopologyError("one field value required per site")
        if bonds.size and (bonds.min() < 0 or bonds.max() >= n):
            raise InvalidTopologyError("bond references a site id out of range")
        if np.any(bonds[:, 0] == bonds[:, 1]):
            raise InvalidTopologyError("self-bonds are not allowed")
        # Normalize bond order and reject duplicates; adjacency is symmetric
        # by construction because each undirected bond is stored once.
        lo = np.minimum(bonds[:, 0], bonds[:, 1])
        hi = np.maximum(bonds[:, 0], bonds[:, 1])
        keys = set(zip(lo.tolist(), hi.tolist()))
        if len(keys) != bonds.shape[0]:
            raise InvalidTopologyError("duplicate bond")

        self.positions = positions
        self.positions.flags.writeable = False
        self.bonds = np.stack([lo, hi], axis=1)
        self.bonds.flags.writeable = False
        self.couplings = couplings
        self.couplings.flags.writeable = False
        self.site_field = fields
        self.site_field.flags.writeable = False
        self.regions = {name: tuple(ids) for name, ids in regions.items()}
        self.n_sites = n

        adjacency: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for (j, k), w in zip(self.bonds, self.couplings):
            adjacency[j].append((int(k), float(w)))
            adjacency[k].append((int(j), float(w)))
        self._adjacency = adjacency
        self.degree = np.array([len(a) for a in adjacency], dtype=np.int64)
        self.degree.flags.writeable = False

        # Padded neighbor tables for vectorized field evaluation.
        dmax = max(1, int(self.degree.max(initial=0)))
        nbr_idx = np.zeros((n, dmax), dtype=np.int64)
        nbr_w = np.zeros((n, dmax), dtype=float)
        for j, neigh in enumerate(adjacency):
            for d, (k, w) in enumerate(neigh):
                nbr_idx[j, d] = k
                nbr_w[j, d] = w
        self._nbr_idx = nbr_idx
        self._nbr_w = nbr_w
        self._coloring: np.ndarray | None = None

    # ------------------------------------------------------------------
    # Structure queries
    # ------------------------------------------------------------------
    def neighbors(self, j: int) -> list[int]:
        return [k for k, _ in self._adjacency[j]]

    def region(self, name: str) -> tuple[int, ...]:
        try:
            return self.regions[name]
        except KeyError:
            raise KeyError(
                f"unknown region {name!r}; available: {sorted(self.regions)}"
            ) from None

    def two_coloring(self) -> np.ndarray:
        """BFS two-coloring of the lattice graph.

        Returns an int array of 0/1 colors. Raises InvalidTopologyError if
        the graph contains an odd cycle (not bipartite).
        """
        if self._coloring is not None:
            return self._coloring
        color = np.full(self.n_sites, -1, dtype=np.int64)
        for start in range(self.n_sites):
            if color[start] >= 0:
                continue
            color[start] = 0
            queue = deque([start])
            while queue:
                j = queue.popleft()
                for k, _ in self._adjacency[j]:
                    if color[k] < 0:
                        color[k] = 1 - color[j]
                        queue.append(k)
                    elif color[k] == color[j]:
                        raise InvalidTopologyError(
                            "lattice contains an odd cycle; two-color "
                            "sublattice decomposition is impossible"
                        )
        color.flags.writeable = False
        self._coloring = color
        return color

    def ground_state(self) -> SpinState:
        """All spins along +z at time 0."""
        spins = np.zeros((self.n_sites, 3))
        spins[:, 2] = 1.0
        return SpinState(spins, 0.0)

    # ------------------------------------------------------------------
    # Field evaluation (vectorized core shared with the integrators)
    # ------------------------------------------------------------------
    def fields_at(self, spins: np.ndarray, idx: np.ndarray | None = None) -> np.ndarray:
        """Effective field B_j for the requested sites (all sites if None)."""
        nbr_idx = self._nbr_idx if idx is None else self._nbr_idx[idx]
        nbr_w = self._nbr_w if idx is None else self._nbr_w[idx]
        h = self.site_field if idx is None else self.site_field[idx]
        out = np.zeros((nbr_idx.shape[0], 3))
        for d in range(nbr_idx.shape[1]):
            out += nbr_w[:, d, None] * spins[nbr_idx[:, d]]
        out[:, 2] += h
        return out


# ----------------------------------------------------------------------
# Energy functional and observables
# ----------------------------------------------------------------------

def effective_field(lattice: SpinLattice, state: SpinState, j: int) -> np.ndarray:
    """B_j = sum_k J_jk S_k + h_j z_hat, the negative gradient of the energy."""
    if not 0 <= j < lattice.n_sites:
        raise IndexError(f"site {j} out of range")
    out = lattice.site_field[j] * _Z.copy()
    for k, w in lattice._adjacency[j]:
        out = out + w * state.spins[k]
    return out


def total_energy(lattice: SpinLattice, state: SpinState) -> float:
    """Classical energy with each bond counted once."""
    s = state.spins
    j, k = lattice.bonds[:, 0], lattice.bonds[:, 1]
    bond_term = -np.sum(lattice.couplings * np.sum(s[j] * s[k], axis=1))
    zeeman = -np.sum(lattice.site_field * s[:, 2])
    return float(bond_term + zeeman)


def total_sz(state: SpinState) -> float:
    """Sum of the z projections; conserved by the undamped dynamics."""
    return float(np.sum(state.spins[:, 2]))


def transverse_energy(state: SpinState, sites: Iterable[int] | None = None) -> float:
    """Sum of Sx^2 + Sy^2 over the given sites (all sites if None)."""
    s = state.spins if sites is None else state.spins[np.fromiter(sites, dtype=np.int64)]
    return float(np.sum(s[:, 0] ** 2 + s[:, 1] ** 2))


# ----------------------------------------------------------------------
# Builders
# ----------------------------------------------------------------------

def build_chain(n: int, coupling: float = 1.0, field: float = 0.0) -> SpinLattice:
    """Open linear chain of n sites with uniform coupling and field."""
    if n < 2:
        raise InvalidTopologyError(f"chain needs at least 2 sites, got {n}")
    positions = np.stack([np.arange(n, dtype=float), np.zeros(n)], axis=1)
    bonds = np.stack([np.arange(n - 1), np.arange(1, n)], axis=1)
    return SpinLattice(
        positions,
        bonds,
        np.full(n - 1, coupling),
        np.full(n, field),
        {"chain": tuple(range(n)), "ends": (0, n - 1)},
    )


def build_cross(arm_len: int, coupling: float = 1.0, field: float = 0.0) -> SpinLattice:
    """Two open chains sharing a single central spin.

    Four arms of ``arm_len`` sites each join at one degree-4 site, for a
    total of 4*arm_len + 1 sites. Arm regions are ordered outer end ->
    junction. The graph is a tree, hence bipartite.
    """
    if arm_len < 2:
        raise InvalidTopologyError(f"cross arms need at least 2 sites, got {arm_len}")
    L = arm_len
    n = 4 * L + 1
    center = 4 * L
    arms = {
        "arm_A_in": (0 * L, np.array([-1.0, 0.0])),
        "arm_A_out": (1 * L, np.array([+1.0, 0.0])),
        "arm_B_in": (2 * L, np.array([0.0, -1.0])),
        "arm_B_out": (3 * L, np.array([0.0, +1.0])),
    }
    positions = np.zeros((n, 2))
    bonds = []
    regions: dict[str, tuple[int, ...]] = {}
    for name, (base, direction) in arms.items():
        ids = tuple(range(base, base + L))
        regions[name] = ids
        for i, site in enumerate(ids):
            positions[site] = direction * (L - i)
            if i > 0:
                bonds.append((site - 1, site))
        bonds.append((ids[-1], center))
    regions["junction"] = (center,)
    regions["ports"] = (arms["arm_A_in"][0], arms["arm_A_out"][0],
                        arms["arm_B_in"][0], arms["arm_B_out"][0])
    return SpinLattice(
        positions,
        np.array(bonds),
        np.full(len(bonds), coupling),
        np.full(n, field),
        regions,
    )


def build_wide_cross(arm_len: int, coupling: float = 1.0, field: float = 0.0) -> SpinLattice:
    """Cross with the shared spin widened to a 2x2 plaquette.

    Each arm attaches to one corner of a four-site ring. The arm-swap
    mirror no longer fixes any junction site, so the out-of-phase pair is
    not pinned exactly and the junction's phase selectivity drops. Used to
    study selectivity versus junction width.
    """
    if arm_len < 2:
        raise InvalidTopologyError(f"cross arms need at least 2 sites, got {arm_len}")
    L = arm_len
    n = 4 * L + 4
    # Plaquette corners: sw, se, ne, nw (ring order).
    sw, se, ne, nw = 4 * L, 4 * L + 1, 4 * L + 2, 4 * L + 3
    corner_pos = {sw: (-0.5, -0.5), se: (0.5, -0.5), ne: (0.5, 0.5), nw: (-0.5, 0.5)}
    arms = {
        "arm_A_in": (0 * L, np.array([-1.0, 0.0]), sw),
        "arm_A_out": (1 * L, np.array([+1.0, 0.0]), ne),
        "arm_B_in": (2 * L, np.array([0.0, -1.0]), se),
        "arm_B_out": (3 * L, np.array([0.0, +1.0]), nw),
    }
    positions = np.zeros((n, 2))
    for c, xy in corner_pos.items():
        positions[c] = xy
    bonds = [(sw, se), (se, ne), (ne, nw), (nw, sw)]
    regions: dict[str, tuple[int, ...]] = {}
    for name, (base, direction, corner) in arms.items():
        ids = tuple(range(base, base + L))
        regions[name] = ids
        for i, site in enumerate(ids):
            positions[site] = direction * (L - i + 0.5)
            if i > 0:
                bonds.append((site - 1, site))
        bonds.append((ids[-1], corner))
    regions["junction"] = (sw, se, ne, nw)
    regions["ports"] = (arms["arm_A_in"][0], arms["arm_A_out"][0],
                        arms["arm_B_in"][0], arms["arm_B_out"][0])
    return SpinLattice(
        positions,
        np.array(bonds),
        np.full(len(bonds), coupling),
        np.full(n, field),
        regions,
    )


@dataclass
class NetlistDiscretization:
    """A netlist rendered into a spin lattice, with bookkeeping maps.

    ``node_site`` maps netlist node names to site ids; ``edge_sites`` maps
    edge names to interior site ids ordered from the edge's first endpoint
    to its second; ``edge_bonds`` gives each edge's bond count (its length
    in lattice units).
    """

    lattice: SpinLattice
    sites_per_unit: int
    node_site: dict[str, int]
    edge_sites: dict[str, tuple[int, ...]]
    edge_bonds: dict[str, int]
    shifter_segments: dict[tuple[str, int], tuple[int, ...]] = field(default_factory=dict)


def discretize_netlist(
    netlist: "GateNetlist",
    sites_per_unit: int,
    coupling: float = 1.0,
    field_value: float = 0.0,
    shifter_offset: float = 0.0,
    shifter_sites: int = 40,
) -> NetlistDiscretization:
    """Render a gate netlist into a spin lattice.

    Each edge of length L becomes a segment of round(L * sites_per_unit)
    bonds; junction nodes become degree-4 sites; each shifter position
    becomes a run of ``shifter_sites`` interior sites whose field is offset
    by ``shifter_offset`` (zero until a calibration value is supplied).
    """
    if sites_per_unit < 2:
        raise InvalidTopologyError("sites_per_unit must be at least 2")
    netlist.validate()

    node_names = list(netlist.ports) + [j for j in netlist.junctions]
    node_site = {name: i for i, name in enumerate(node_names)}
    # Node positions on a circle; interior sites interpolate. Cosmetic only.
    n_nodes = len(node_names)
    radius = max(4.0, n_nodes)
    node_pos = {
        name: radius * np.array([math.cos(2 * math.pi * i / n_nodes),
                                 math.sin(2 * math.pi * i / n_nodes)])
        for i, name in enumerate(node_names)
    }

    positions = [node_pos[name] for name in node_names]
    fields = [field_value] * n_nodes
    bonds: list[tuple[int, int]] = []
    edge_sites: dict[str, tuple[int, ...]] = {}
    edge_bonds: dict[str, int] = {}
    shifter_segments: dict[tuple[str, int], tuple[int, ...]] = {}
    regions: dict[str, tuple[int, ...]] = {}

    for name, edge in netlist.edges.items():
        m = int(round(float(edge.length) * sites_per_unit))
        if m < 1:
            raise InvalidTopologyError(
                f"edge {name!r} is too short to discretize at {sites_per_unit} sites/unit"
            )
        edge_bonds[name] = m
        a, b = node_site[edge.a], node_site[edge.b]
        interior = []
        prev = a
        pa, pb = node_pos[edge.a], node_pos[edge.b]
        for i in range(1, m):
            sid = len(positions)
            positions.append(pa + (pb - pa) * (i / m))
            fields.append(field_value)
            interior.append(sid)
            bonds.append((prev, sid))
            prev = sid
        bonds.append((prev, b))
        edge_sites[name] = tuple(interior)
        regions[f"edge:{name}"] = tuple(interior)

        for si, pos in enumerate(edge.shifters):
            c = int(round(float(pos) * sites_per_unit))
            lo = c - shifter_sites // 2
            hi = lo + shifter_sites
            if lo < 1 or hi > m:
                raise InvalidTopologyError(
                    f"shifter {si} on edge {name!r} needs interior sites "
                    f"[{lo}, {hi}) but the edge has bonds 1..{m - 1}"
                )
            seg = tuple(interior[lo - 1: hi - 1])
            shifter_segments[(name, si)] = seg
            regions[f"shifter:{name}:{si}"] = seg
            for sid in seg:
                fields[sid] += shifter_offset

    for name in netlist.ports:
        regions[f"node:{name}"] = (node_site[name],)
    junction_sites = tuple(node_site[j] for j in netlist.junctions)
    for name in netlist.junctions:
        regions[f"node:{name}"] = (node_site[name],)
    regions["junction"] = junction_sites

    lattice = SpinLattice(
        np.array(positions),
        np.array(bonds),
        np.full(len(bonds), coupling),
        np.array(fields),
        regions,
    )
    for name in netlist.junctions:
        if lattice.degree[node_site[name]] != 4:
            raise UnsupportedJunctionError(
                f"junction {name!r} discretized to degree {lattice.degree[node_site[name]]}"
            )
    try:
        lattice.two_coloring()
    except InvalidTopologyError as exc:
        raise InvalidTopologyError(
            "discretized netlist has an odd cycle; choose edge lengths and "
            "sites_per_unit so every loop has an even bond count"
        ) from exc
    return NetlistDiscretization(
        lattice=lattice,
        sites_per_unit=sites_per_unit,
        node_site=node_site,
        edge_sites=edge_sites,
        edge_bonds=edge_bonds,
        shifter_segments=shifter_segments,
    )


def build_from_netlist(
    netlist: "GateNetlist",
    sites_per_unit: int,
    coupling: float = 1.0,
    field_value: float = 0.0,
    shifter_offset: float = 0.0,
    shifter_sites: int = 40,
) -> SpinLattice:
    """Like :func:`discretize_netlist` but returns only the lattice."""
    return discretize_netlist(
        netlist, sites_per_unit, coupling, field_value, shifter_offset, shifter_sites
    ).lattice


# ----------------------------------------------------------------------
# Export
# ----------------------------------------------------------------------

def export_lattice_csv(lattice: SpinLattice, path, metadata: dict | None = None) -> None:
    """Write sites to CSV: site_id, x, y, degree, region, h_offset."""
    region_of = [""] * lattice.n_sites
    for name, ids in sorted(lattice.regions.items()):
        for j in ids:
            if not region_of[j]:
                region_of[j] = name
    with open(path, "w", newline="") as fh:
        for key, value in sorted((metadata or {}).items()):
            fh.write(f"# {key} = {value}\n")
        writer = csv.writer(fh)
        writer.writerow(["site_id", "x", "y", "degree", "region", "h_offset"])
        for j in range(lattice.n_sites):
            writer.writerow([
                j,
                f"{lattice.positions[j, 0]:.6g}",
                f"{lattice.positions[j, 1]:.6g}",
                int(lattice.degree[j]),
                region_of[j],
                f"{lattice.site_field[j]:.12g}",
            ])
