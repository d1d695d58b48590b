"""Normal-form algorithm synthesis via constraint solving.

The synthesis loop enumerates anchor spacings k and window dimensions,
builds the tile neighbourhood graph, and asks a SAT solver for a labelling
of the tiles that respects the problem's horizontal and vertical pair
constraints across every tile-graph edge.  A satisfying assignment *is* the
finite lookup table of the synthesized algorithm; the problem-independent
anchor-finding component lives in :mod:`gridlcl.simulator`.

Two solver backends are provided.  The internal backend is a deterministic
conflict-driven clause-learning search (complete backtracking with unit
propagation; decisions always pick the lowest-index unassigned variable,
trying true first).  The external backend writes DIMACS CNF, invokes a
configured solver executable and parses a SAT/UNSAT answer plus model; the
returned model is re-checked against the formula, and any deviation from
the contract raises :class:`BackendError` rather than falling back.

Instances for different (k, dims) pairs are independent and may be solved
concurrently; the loop here joins them in schedule order, so the result is
the first success in the deterministic schedule either way.
"""

from __future__ import annotations

import json
import os
import shlex
import subprocess
from dataclasses import dataclass, field
from typing import Callable

from .problems import GridLcl
from .tiles import Tile, TileGraph, build_tile_graph


class BackendError(RuntimeError):
    """External solver missing, crashing, or violating the output contract."""


@dataclass(frozen=True)
class CnfInstance:
    """Propositional encoding of one tile-labelling problem."""

    num_vars: int
    clauses: list[tuple[int, ...]]
    var_map: dict[tuple[str, str], int]  # (tile bitstring, label) -> 1-based index

    def __post_init__(self):
        if any(len(c) == 0 for c in self.clauses):
            raise ValueError("empty clause at construction")


@dataclass(frozen=True)
class NormalFormAlgorithm:
    """Finite table applied to the local anchor pattern.

    ``table`` maps the row-major bitstring of every (r1 x r2) tile to an
    output label; ``anchor_offset`` is the in-window coordinate at which the
    executing node sits (row index grows northward, column index eastward).
    """

    problem: str
    k: int
    r1: int
    r2: int
    anchor_offset: tuple[int, int]
    table: dict[str, str]
    min_n: int


@dataclass(frozen=True)
class Exhausted:
    """Synthesis budget ran out; the problem may be global or may need larger k."""

    max_k: int


def encode_csp(tg: TileGraph, p: GridLcl) -> CnfInstance:
    """One-hot encoding: a variable per (tile, label), pair blocking per edge."""
    if not tg.nodes:
        raise ValueError("tile graph has no nodes")
    labels = p.alphabet.labels
    var_map = {}
    for t in tg.nodes:
        for lab in labels:
            var_map[(t.bitstring(), lab)] = len(var_map) + 1

    def var(tile: Tile, lab: str) -> int:
        return var_map[(tile.bitstring(), lab)]

    clauses: list[tuple[int, ...]] = []
    for t in tg.nodes:
        vs = [var(t, lab) for lab in labels]
        clauses.append(tuple(vs))  # at least one label
        for i in range(len(vs)):
            for j in range(i + 1, len(vs)):
                clauses.append((-vs[i], -vs[j]))  # at most one label
    for edges, allowed in ((tg.horizontal_edges, p.horizontal), (tg.vertical_edges, p.vertical)):
        for t1, t2 in edges:
            for la in labels:
                for lb in labels:
                    if (la, lb) not in allowed:
                        clauses.append((-var(t1, la), -var(t2, lb)))
    return CnfInstance(num_vars=len(var_map), clauses=clauses, var_map=var_map)


# ---------------------------------------------------------------------------
# Internal solver


def _solve_internal(num_vars: int, clauses) -> dict[int, bool] | None:
    """Deterministic CDCL: lowest-index decisions, true-first phase.

    Returns a full assignment or None for unsatisfiable.  Learned clauses
    make the k >= 2 unsatisfiability proofs tractable; determinism is kept
    by using no randomised heuristics and no restarts.
    """
    # literal encoding: lit 2v for v-true, 2v+1 for v-false
    def enc(lit):
        v = abs(lit)
        return 2 * v if lit > 0 else 2 * v + 1

    UNASSIGNED = -1
    assign = [UNASSIGNED] * (num_vars + 1)
    level = [0] * (num_vars + 1)
    reason = [None] * (num_vars + 1)
    trail: list[int] = []  # encoded literals in assignment order
    trail_lim: list[int] = []
    watches: list[list[list[int]]] = [[] for _ in range(2 * num_vars + 2)]
    db: list[list[int]] = []

    def lit_value(el):
        v = assign[el >> 1]
        if v == UNASSIGNED:
            return UNASSIGNED
        return v ^ (el & 1)

    def enqueue(el, why) -> bool:
        var = el >> 1
        want = 1 - (el & 1)
        if assign[var] != UNASSIGNED:
            return assign[var] == want
        assign[var] = want
        level[var] = len(trail_lim)
        reason[var] = why
        trail.append(el)
        return True

    # load clauses: dedupe literals, drop tautologies, enqueue units
    units = []
    for raw in clauses:
        seen = {}
        taut = False
        for lit in raw:
            if -lit in seen:
                taut = True
                break
            seen[lit] = True
        if taut:
            continue
        lits = [enc(lit) for lit in seen]
        if len(lits) == 1:
            units.append(lits[0])
            continue
        db.append(lits)
        watches[lits[0] ^ 1].append(lits)
        watches[lits[1] ^ 1].append(lits)
    for el in units:
        if not enqueue(el, None):
            return None

    qhead = 0

    def propagate():
        nonlocal qhead
        while qhead < len(trail):
            el = trail[qhead]
            qhead += 1
            falsified = el ^ 1
            wl = watches[falsified]
            i = 0
            while i < len(wl):
                cl = wl[i]
                if cl[0] == falsified:
                    cl[0], cl[1] = cl[1], cl[0]
                first = cl[0]
                if lit_value(first) == 1:
                    i += 1
                    continue
                moved = False
                for j in range(2, len(cl)):
                    if lit_value(cl[j]) != 0:
                        cl[1], cl[j] = cl[j], cl[1]
                        watches[cl[1] ^ 1].append(cl)
                        wl[i] = wl[-1]
                        wl.pop()
                        moved = True
                        break
                if moved:
                    continue
                # clause is unit or conflicting on cl[0]
                if lit_value(first) == 0:
                    return cl
                enqueue(first, cl)
                i += 1
        return None

    def analyze(confl):
        learnt = []
        seen = [False] * (num_vars + 1)
        counter = 0
        p = None
        bt = 0
        idx = len(trail) - 1
        cur_level = len(trail_lim)
        while True:
            for el in confl:
                if p is not None and el == p:
                    continue
                v = el >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    if level[v] == cur_level:
                        counter += 1
                    else:
                        learnt.append(el ^ 1)
                        bt = max(bt, level[v])
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx] ^ 1
            v = trail[idx] >> 1
            confl = reason[v] or ()
            seen[v] = False
            counter -= 1
            idx -= 1
            if counter == 0:
                break
        learnt.insert(0, p ^ 1)
        return learnt, bt

    def backjump(bt):
        nonlocal qhead
        cut = trail_lim[bt]
        for el in trail[cut:]:
            v = el >> 1
            assign[v] = UNASSIGNED
            reason[v] = None
        del trail[cut:]
        del trail_lim[bt:]
        qhead = len(trail)

    next_var = 1
    while True:
        confl = propagate()
        if confl is not None:
            if not trail_lim:
                return None
            learnt, bt = analyze(confl)
            backjump(bt)
            if len(learnt) == 1:
                enqueue(learnt[0], None)
            else:
                db.append(learnt)
                watches[learnt[0] ^ 1].append(learnt)
                watches[learnt[1] ^ 1].append(learnt)
                enqueue(learnt[0], learnt)
            continue
        while next_var <= num_vars and assign[next_var] != UNASSIGNED:
            next_var += 1
        if next_var > num_vars:
            # decisions below the current trail may have been undone; rescan
            first = next(
                (v for v in range(1, num_vars + 1) if assign[v] == UNASSIGNED), None
            )
            if first is None:
                return {v: bool(assign[v]) for v in range(1, num_vars + 1)}
            next_var = first
            continue
        trail_lim.append(len(trail))
        enqueue(2 * next_var, None)  # decide: lowest index, true first


# ---------------------------------------------------------------------------
# External solver harness


def emit_dimacs(cnf: CnfInstance) -> str:
    lines = [f"p cnf {cnf.num_vars} {len(cnf.clauses)}"]
    for c in cnf.clauses:
        lines.append(" ".join(str(l) for l in c) + " 0")
    return "\n".join(lines) + "\n"


def _parse_solver_output(text: str) -> tuple[str, list[int]]:
    verdict = None
    model: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        upper = line.upper()
        if verdict is None:
            if upper in ("SAT", "S SATISFIABLE", "SATISFIABLE"):
                verdict = "SAT"
                continue
            if upper in ("UNSAT", "S UNSATISFIABLE", "UNSATISFIABLE"):
                verdict = "UNSAT"
                continue
            raise BackendError(f"unrecognised solver output line: {line!r}")
        if line.startswith(("v", "V")):
            line = line[1:]
        try:
            model.extend(int(tok) for tok in line.split())
        except ValueError:
            raise BackendError(f"unparsable model line: {line!r}") from None
    if verdict is None:
        raise BackendError("solver produced no SAT/UNSAT verdict")
    return verdict, [l for l in model if l != 0]


def _solve_external(cnf: CnfInstance, solver_cmd: str, workdir=None) -> dict[int, bool] | None:
    import tempfile

    argv = shlex.split(solver_cmd)
    if not argv:
        raise BackendError("empty external solver command")
    with tempfile.NamedTemporaryFile(
        "w", suffix=".cnf", dir=workdir, delete=False
    ) as fh:
        fh.write(emit_dimacs(cnf))
        path = fh.name
    try:
        try:
            proc = subprocess.run(
                argv + [path], capture_output=True, text=True, timeout=3600
            )
        except FileNotFoundError:
            raise BackendError(f"external solver not found: {argv[0]!r}") from None
        except subprocess.TimeoutExpired:
            raise BackendError("external solver timed out") from None
        verdict, model = _parse_solver_output(proc.stdout)
    finally:
        os.unlink(path)
    if verdict == "UNSAT":
        return None
    assignment = {v: False for v in range(1, cnf.num_vars + 1)}
    for lit in model:
        if abs(lit) > cnf.num_vars:
            raise BackendError(f"model literal {lit} out of range")
        assignment[abs(lit)] = lit > 0
    for clause in cnf.clauses:
        if not any(assignment[abs(l)] == (l > 0) for l in clause):
            raise BackendError("external solver returned a non-satisfying model")
    return assignment


def solve_cnf(
    cnf: CnfInstance, backend: str = "internal", solver_cmd: str | None = None
) -> dict[int, bool] | None:
    """Solve an instance; returns a full assignment, or None for UNSAT."""
    if backend == "internal":
        return _solve_internal(cnf.num_vars, cnf.clauses)
    if backend == "external":
        cmd = solver_cmd or os.environ.get("GRIDLCL_SOLVER")
        if not cmd:
            raise BackendError(
                "external backend selected but no solver command configured "
                "(pass solver_cmd or set GRIDLCL_SOLVER)"
            )
        return _solve_external(cnf, cmd)
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------------------
# Synthesis loop


def default_dim_schedule(k: int) -> list[tuple[int, int]]:
    if k == 1:
        return [(3, 2), (3, 3)]
    return [(2 * k + 1, 2 * k - 1), (2 * k + 1, 2 * k), (2 * k + 1, 2 * k + 1)]


def triviality_check(p: GridLcl) -> str | None:
    """Lexicographically first label usable as a constant solution, if any."""
    for lab in sorted(p.alphabet.labels):
        if (lab, lab) in p.horizontal and (lab, lab) in p.vertical:
            return lab
    return None


def decode_table(tg: TileGraph, p: GridLcl, assignment: dict[int, bool], var_map) -> dict[str, str]:
    table = {}
    for t in tg.nodes:
        key = t.bitstring()
        chosen = [lab for lab in p.alphabet.labels if assignment.get(var_map[(key, lab)], False)]
        if len(chosen) != 1:
            raise RuntimeError(f"solver assignment gives {len(chosen)} labels to tile {key}")
        table[key] = chosen[0]
    return table


def verify_table(alg: NormalFormAlgorithm, tg: TileGraph, p: GridLcl) -> None:
    """Re-check the decoded table against every tile-graph edge (solver-independent)."""
    for t in tg.nodes:
        if t.bitstring() not in alg.table:
            raise RuntimeError(f"table misses tile {t.bitstring()}")
    for t1, t2 in tg.horizontal_edges:
        pair = (alg.table[t1.bitstring()], alg.table[t2.bitstring()])
        if pair not in p.horizontal:
            raise RuntimeError(f"horizontal edge violates constraints: {pair}")
    for t1, t2 in tg.vertical_edges:
        pair = (alg.table[t1.bitstring()], alg.table[t2.bitstring()])
        if pair not in p.vertical:
            raise RuntimeError(f"vertical edge violates constraints: {pair}")


def min_grid_side(k: int, r1: int, r2: int) -> int:
    # windows must not self-overlap around the torus, and the tile theory
    # needs the window plus its distance-k frame to embed injectively
    return max(r1, r2) + 2 * k + 2


def synthesize(
    p: GridLcl,
    max_k: int = 4,
    dim_schedule: Callable[[int], list[tuple[int, int]]] | None = None,
    backend: str = "internal",
    solver_cmd: str | None = None,
    tile_graph_cache: dict | None = None,
) -> NormalFormAlgorithm | Exhausted:
    """Search k = 1..max_k for a normal-form table; first success wins.

    Exhausting the budget is an ordinary result, not an error: no procedure
    can certify that a problem is global, so the caller only learns that
    synthesis failed within this budget.
    """
    schedule = dim_schedule or default_dim_schedule
    for k in range(1, max_k + 1):
        for r1, r2 in schedule(k):
            key = (k, r1, r2)
            if tile_graph_cache is not None and key in tile_graph_cache:
                tg = tile_graph_cache[key]
            else:
                tg = build_tile_graph(k, r1, r2)
                if tile_graph_cache is not None:
                    tile_graph_cache[key] = tg
            cnf = encode_csp(tg, p)
            assignment = solve_cnf(cnf, backend=backend, solver_cmd=solver_cmd)
            if assignment is None:
                continue
            table = decode_table(tg, p, assignment, cnf.var_map)
            alg = NormalFormAlgorithm(
                problem=p.name,
                k=k,
                r1=r1,
                r2=r2,
                anchor_offset=((r1 - 1) // 2, (r2 - 1) // 2),
                table=table,
                min_n=min_grid_side(k, r1, r2),
            )
            verify_table(alg, tg, p)
            return alg
    return Exhausted(max_k=max_k)


# ---------------------------------------------------------------------------
# Algorithm serialization


def algorithm_to_json(alg: NormalFormAlgorithm) -> str:
    doc = {
        "problem": alg.problem,
        "k": alg.k,
        "rows": alg.r1,
        "cols": alg.r2,
        "anchor_offset": list(alg.anchor_offset),
        "min_n": alg.min_n,
        "table": alg.table,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def algorithm_from_json(text: str) -> NormalFormAlgorithm:
    doc = json.loads(text)
    alg = NormalFormAlgorithm(
        problem=doc["problem"],
        k=int(doc["k"]),
        r1=int(doc["rows"]),
        r2=int(doc["cols"]),
        anchor_offset=(int(doc["anchor_offset"][0]), int(doc["anchor_offset"][1])),
        table=dict(doc["table"]),
        min_n=int(doc["min_n"]),
    )
    if len(alg.table) == 0:
        raise ValueError("algorithm table is empty")
    width = alg.r1 * alg.r2
    for key in alg.table:
        if len(key) != width or any(ch not in "01" for ch in key):
            raise ValueError(f"bad tile key {key!r}")
    return alg
