"""Relaxed modified Dirichlet-Neumann iteration on the coupled pair.

One outer step solves the slave subdomain with the current interface data
enforced strongly, recovers the slave Jacobian near the interface, extends
it to the master interface as a traction (natural) boundary term, solves
the master subdomain, and relaxes the interface data update.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .elasticity import (
    AnalyticField,
    DirichletSolver,
    Field,
    LameParams,
    assemble,
    element_jacobians,
    strain,
    stress,
)
from .interface import (
    InterfaceMap,
    MapDirection,
    MasterTraction,
    _interface_edges_with_normals,
    nearest_neighbor_map,
    neumann_boundary_term,
    taylor_extend_displacement,
    taylor_extend_jacobian,
    trace_norm,
)
from .mesh import BoundaryTag, MeshPair
from .recovery import build_recovery_region, recover_jacobian

__all__ = ["CouplingState", "CoupledSolution", "CoupledProblem", "dn_step", "dn_solve", "interface_residual"]

_DIVERGENCE_CAP = 1e100


@dataclass
class CouplingState:
    """Mutable state of the outer iteration."""

    g: np.ndarray  # (K, 2) interface data at the slave interface nodes
    omega: float
    delta: float
    k: int = 0
    residual_history: list = dc_field(default_factory=list)

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float)
        if not 0.0 < self.omega <= 1.0:
            raise ValueError("relaxation parameter must lie in (0, 1]")
        if self.delta <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class CoupledSolution:
    u_slave: Field
    u_master: Field
    iterations: int
    converged: bool
    final_residual: float
    residual_history: list


def _boundary_fn(g):
    """Normalize outer boundary data to a vectorized pts -> (K, 2) callable."""
    if g is None:
        return lambda pts: np.zeros((len(pts), 2))
    if isinstance(g, AnalyticField):
        return g.value
    if callable(g):
        return g
    const = np.asarray(g, dtype=float).reshape(2)
    return lambda pts: np.broadcast_to(const, (len(pts), 2)).copy()


class CoupledProblem:
    """Prebuilt data for the outer iteration: subdomain factorizations,
    nearest-neighbor maps, recovery patches, and interface geometry."""

    def __init__(self, pair: MeshPair, lame_slave: LameParams, lame_master: LameParams,
                 f_slave=None, f_master=None, g_slave=None, g_master=None):
        self.pair = pair
        self.lame_slave = lame_slave
        self.lame_master = lame_master
        slave, master = pair.slave, pair.master

        self.map_sm = nearest_neighbor_map(slave, master, MapDirection.SLAVE_TO_MASTER)
        self.map_ms = nearest_neighbor_map(master, slave, MapDirection.MASTER_TO_SLAVE)
        self.region = build_recovery_region(slave)
        if not np.array_equal(self.region.interface_nodes, self.map_sm.source_nodes):
            raise AssertionError("interface orderings disagree")
        self.slave_iface = self.map_sm.source_nodes
        self.master_iface = self.map_ms.source_nodes

        # slave: interface nodes first, then the remaining outer nodes; the
        # interface endpoints sit on the outer boundary and keep outer data
        g_s = _boundary_fn(g_slave)
        g_m = _boundary_fn(g_master)
        outer_s = slave.boundary_nodes(BoundaryTag.OUTER_DIRICHLET)
        self._corner_mask = np.isin(self.slave_iface, outer_s)
        self._corner_vals = g_s(slave.nodes[self.slave_iface[self._corner_mask]])
        outer_rest = outer_s[~np.isin(outer_s, self.slave_iface)]
        self._outer_rest_vals = g_s(slave.nodes[outer_rest])
        constrained_s = np.concatenate([self.slave_iface, outer_rest])
        self.slave_solver = DirichletSolver(assemble(slave, lame_slave, f_slave), constrained_s)

        outer_m = master.boundary_nodes(BoundaryTag.OUTER_DIRICHLET)
        self._master_outer_vals = g_m(master.nodes[outer_m])
        self.master_solver = DirichletSolver(assemble(master, lame_master, f_master), outer_m)

        edges, normals = _interface_edges_with_normals(master)
        self._m_edges = edges
        self._m_normals = normals

    # -- per-iteration pieces ----------------------------------------------

    def solve_slave(self, g: np.ndarray) -> Field:
        vals = np.asarray(g, dtype=float).copy()
        vals[self._corner_mask] = self._corner_vals
        return self.slave_solver.solve(np.vstack([vals, self._outer_rest_vals]))

    def master_traction(self, jac) -> MasterTraction:
        jm = taylor_extend_jacobian(jac, self.map_ms)
        sigma = stress(strain(jm), self.lame_slave)
        return MasterTraction(self.master_iface, sigma, self._m_edges, self._m_normals)

    def solve_master(self, traction: MasterTraction) -> Field:
        extra = neumann_boundary_term(traction, self.pair.master)
        return self.master_solver.solve(self._master_outer_vals, extra_rhs=extra)

    def updated_interface_data(self, u_master: Field, jac) -> np.ndarray:
        u_at_target = u_master.values[self.map_sm.target_nodes]
        correction = np.einsum("krc,kc->kr", jac.jac, self.map_sm.offsets)
        return u_at_target - correction

    def residual_norm(self, dg: np.ndarray) -> float:
        return trace_norm(self.pair.slave, self.slave_iface, dg)


def dn_step(state: CouplingState, problem: CoupledProblem) -> tuple[Field, Field]:
    """One outer iteration; mutates ``state`` (interface data, counter,
    residual history) and returns the subdomain fields it produced."""
    u_s = problem.solve_slave(state.g)
    jac = recover_jacobian(problem.pair.slave, u_s, problem.region)
    traction = problem.master_traction(jac)
    u_m = problem.solve_master(traction)
    g_new = state.omega * problem.updated_interface_data(u_m, jac) + (1.0 - state.omega) * state.g
    state.residual_history.append(problem.residual_norm(g_new - state.g))
    state.g = g_new
    state.k += 1
    return u_s, u_m


def dn_solve(problem: CoupledProblem, omega: float, delta: float, max_iter: int = 500,
             g0=None, verbose: bool = False) -> CoupledSolution:
    """Iterate until the relaxed interface update changes by less than
    ``delta`` in the interface trace norm.  Non-convergence within
    ``max_iter`` (or blow-up) is reported, not raised."""
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if g0 is None:
        g0 = np.zeros((len(problem.slave_iface), 2))
    state = CouplingState(g=g0, omega=omega, delta=delta)
    converged = False
    u_s = u_m = None
    for _ in range(max_iter):
        u_s, u_m = dn_step(state, problem)
        res = state.residual_history[-1]
        if verbose:
            print(f"{state.k},{res:.6e}")
        if res <= delta:
            converged = True
            break
        if not np.isfinite(res) or res > _DIVERGENCE_CAP:
            break
    return CoupledSolution(
        u_slave=u_s,
        u_master=u_m,
        iterations=state.k,
        converged=converged,
        final_residual=state.residual_history[-1],
        residual_history=state.residual_history,
    )


def interface_residual(solution: CoupledSolution, problem: CoupledProblem) -> tuple[float, float]:
    """Residuals of the monolithic interface conditions at the returned
    fields: the extended-displacement mismatch on the slave interface and
    the traction mismatch on the master interface (per-edge midpoint
    stresses)."""
    u_s, u_m = solution.u_slave, solution.u_master
    jac = recover_jacobian(problem.pair.slave, u_s, problem.region)
    extended = taylor_extend_displacement(u_s, jac, problem.map_sm)
    gap = extended - u_m.values[problem.map_sm.target_nodes]
    dirichlet_res = trace_norm(problem.pair.slave, problem.slave_iface, gap)

    traction = problem.master_traction(jac)
    master = problem.pair.master
    jm_elem = element_jacobians(u_m)
    edges, normals, owners = _interface_edges_with_normals(master, return_owners=True)
    node_row = {int(n): k for k, n in enumerate(traction.nodes)}
    total = 0.0
    for (a, b), n_e, tri in zip(edges, normals, owners):
        sig_m = stress(strain(jm_elem[tri]), problem.lame_master)
        sig_bar = 0.5 * (traction.sigma[node_row[int(a)]] + traction.sigma[node_row[int(b)]])
        mism = (sig_m - sig_bar) @ n_e
        length = np.linalg.norm(master.nodes[b] - master.nodes[a])
        total += length * float(mism @ mism)
    return dirichlet_res, float(np.sqrt(total))
