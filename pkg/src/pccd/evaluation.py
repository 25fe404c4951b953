"""Compare predicted crystals against originals.

Site distances always use the minimum-image fractional difference expressed in
the *original* structure's Cartesian frame.
"""

from __future__ import annotations

import csv
import io
import itertools
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .crystal import CrystalStructure, min_image_delta
from .errors import EmptySeries, Unmatched

DEFAULT_BOND_CUTOFF = 3.0
DEFAULT_NOVELTY_TOL = 0.3
SMALL_COORD = 1e-6
GRID_RESOLUTION = 16
GED_EXACT_CLASS_LIMIT = 8
GED_NODE_BUDGET = 500_000


# --- matching -------------------------------------------------------------------


def _pair_distances(o: CrystalStructure, p_frac, lattice=None):
    lat = (lattice or o.lattice).vectors
    d = min_image_delta(np.asarray(p_frac)[None, :, :], o.frac[:, None, :])
    return np.linalg.norm(d @ lat, axis=-1)


def _greedy_batch(dist, allowed=None):
    """Greedy one-to-one matching for a stack of (K, N, N) distance matrices.

    Pairs are taken in order of (distance, row, col); a flat argmin gives
    exactly that tie-break. Disallowed pairs are only used once no allowed
    pair remains among the free rows and columns. Returns col[k, row].
    """
    K, n, _ = dist.shape
    free = np.ones((K, n, n), bool)
    allow = np.ones((n, n), bool) if allowed is None else np.asarray(allowed, bool)
    col_of = np.empty((K, n), dtype=int)
    ks = np.arange(K)
    for _ in range(n):
        masked = np.where(free & allow, dist, np.inf).reshape(K, -1)
        flat = masked.argmin(axis=1)
        stuck = ~np.isfinite(masked[ks, flat])
        if stuck.any():
            blind = np.where(free[stuck], dist[stuck], np.inf).reshape(int(stuck.sum()), -1)
            flat[stuck] = blind.argmin(axis=1)
        r, c = np.divmod(flat, n)
        col_of[ks, r] = c
        free[ks, r, :] = False
        free[ks, :, c] = False
    return col_of


def _assign(dist, species_o, species_p, species_aware):
    allowed = None
    if species_aware:
        allowed = np.array(species_o)[:, None] == np.array(species_p)[None, :]
    cols = _greedy_batch(dist[None], allowed)[0]
    return [(i, int(j)) for i, j in enumerate(cols)]


def match_atoms(original: CrystalStructure, predicted: CrystalStructure, species_aware: bool = True):
    """Greedy periodic assignment of predicted sites to original sites.

    Returns a list of ``(original_index, predicted_index)`` sorted by original
    index, or ``None`` when the site counts differ.
    """
    if original.num_sites != predicted.num_sites:
        return None
    dist = _pair_distances(original, predicted.frac)
    return _assign(dist, original.species, predicted.species, species_aware)


def matched_distances(assignment, o: CrystalStructure, p: CrystalStructure) -> np.ndarray:
    idx_o = [i for i, _ in assignment]
    idx_p = [j for _, j in assignment]
    d = min_image_delta(p.frac[idx_p], o.frac[idx_o])
    return np.linalg.norm(d @ o.lattice.vectors, axis=-1)


def lattice_relative_errors(o: CrystalStructure, p: CrystalStructure) -> np.ndarray:
    lo, lp = o.lattice.lengths, p.lattice.lengths
    return (lp - lo) / lo


def coordinate_relative_errors(assignment, o: CrystalStructure, p: CrystalStructure, wrap: bool = True):
    """Per matched pair ``(x_pred - x) / x`` on fractional coordinates.

    Returns ``(errors, absolute)``, both (M, 3). Where ``|x| < 1e-6`` the entry
    is the plain difference and ``absolute`` is True there.
    """
    idx_o = np.array([i for i, _ in assignment], dtype=int)
    idx_p = np.array([j for _, j in assignment], dtype=int)
    x = o.frac[idx_o]
    xp = p.frac[idx_p]
    if wrap:
        xp = x + min_image_delta(xp, x)
    absolute = np.abs(x) < SMALL_COORD
    diff = xp - x
    safe = np.where(absolute, 1.0, x)
    return np.where(absolute, diff, diff / safe), absolute


def atom_count_confusion(pairs):
    """Count matrix indexed by site counts, ``M[n_orig, n_pred]``, plus the diagonal fraction.

    ``pairs`` holds (original, predicted) structures or plain site counts.
    Row and column 0 are always empty so counts index the matrix directly.
    """
    counts = [(_count(a), _count(b)) for a, b in pairs]
    if not counts:
        return np.zeros((1, 1), dtype=int), 0.0
    n = max(max(a, b) for a, b in counts)
    m = np.zeros((n + 1, n + 1), dtype=int)
    for a, b in counts:
        m[a, b] += 1
    return m, float(np.trace(m) / len(counts))


def _count(s):
    return s.num_sites if isinstance(s, CrystalStructure) else int(s)


# --- rigid-translation distances ---------------------------------------------------


def _translation_candidates(o, p):
    g = np.arange(GRID_RESOLUTION) / GRID_RESOLUTION
    grid = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    # shifts that land one predicted site exactly on one original site
    align = (o.frac[:, None, :] - p.frac[None, :, :]).reshape(-1, 3)
    return np.concatenate([grid, align])


def _rms_for_shifts(o, p, shifts, species_aware):
    """RMS matched distance for each candidate shift of the predicted sites."""
    shifts = np.atleast_2d(shifts)
    d = min_image_delta(p.frac[None, None, :, :] + shifts[:, None, None, :], o.frac[None, :, None, :])
    dist = np.linalg.norm(d @ o.lattice.vectors, axis=-1)
    allowed = None
    if species_aware:
        allowed = np.array(o.species)[:, None] == np.array(p.species)[None, :]
    cols = _greedy_batch(dist, allowed)
    picked = np.take_along_axis(dist, cols[:, :, None], axis=2)[:, :, 0]
    return np.sqrt(np.mean(picked**2, axis=1)), cols


def _refine(o, p, shift, species_aware, max_iter=50):
    """Alternate between greedy assignment and the closed-form optimal shift."""
    rms, cols = _rms_for_shifts(o, p, shift, species_aware)
    best = float(rms[0])
    for _ in range(max_iter):
        delta = min_image_delta(p.frac[cols[0]] + shift, o.frac)
        shift = shift - delta.mean(axis=0)
        rms, cols = _rms_for_shifts(o, p, shift, species_aware)
        if not rms[0] < best - 1e-15:
            break
        best = float(rms[0])
    return best


def _translation_distance(o, p, species_aware, n_refine=5):
    if o.num_sites != p.num_sites:
        raise Unmatched(f"{o.num_sites} vs {p.num_sites} sites")
    cands = _translation_candidates(o, p)
    scores, _ = _rms_for_shifts(o, p, cands, species_aware)
    order = np.argsort(scores, kind="stable")[:n_refine]
    best = min(_refine(o, p, cands[k], species_aware) for k in order)
    return float(min(best, scores.min()))


def superpose_distance(o: CrystalStructure, p: CrystalStructure) -> float:
    """RMS matched-site distance (angstrom) minimized over rigid translations, species-aware."""
    return _translation_distance(o, p, species_aware=True)


def rms_anonymous_distance(o: CrystalStructure, p: CrystalStructure) -> float:
    """Like :func:`superpose_distance` but matching ignores species."""
    # a species-respecting matching is also an anonymous one
    return min(_translation_distance(o, p, species_aware=False), superpose_distance(o, p))


# --- graph edit distance -------------------------------------------------------------


def bond_graph(s: CrystalStructure, cutoff: float = DEFAULT_BOND_CUTOFF, pair_cutoffs=None) -> np.ndarray:
    """Adjacency matrix: sites bonded when their min-image distance is within the cutoff."""
    d = min_image_delta(s.frac[:, None, :], s.frac[None, :, :])
    dist = np.linalg.norm(d @ s.lattice.vectors, axis=-1)
    cut = np.full(dist.shape, float(cutoff))
    if pair_cutoffs:
        for i, a in enumerate(s.species):
            for j, b in enumerate(s.species):
                key = (a, b) if (a, b) in pair_cutoffs else (b, a)
                if key in pair_cutoffs:
                    cut[i, j] = pair_cutoffs[key]
    adj = dist <= cut
    np.fill_diagonal(adj, False)
    return adj


@dataclass
class GraphEditResult:
    distance: int
    exact: bool


def _padded_classes(sp1, sp2):
    """Per-species node lists for both graphs, padded with dummy nodes (-1)."""
    classes = []
    for sym in sorted(set(sp1) | set(sp2)):
        a = [i for i, s in enumerate(sp1) if s == sym]
        b = [j for j, s in enumerate(sp2) if s == sym]
        n = max(len(a), len(b))
        classes.append((a + [-1] * (n - len(a)), b + [-1] * (n - len(b))))
    return classes


def _edge(adj, i, j):
    return i >= 0 and j >= 0 and adj[i, j]


def _mapping_cost(adj1, adj2, u_nodes, v_nodes):
    cost = 0
    for a, b in itertools.combinations(range(len(u_nodes)), 2):
        cost += _edge(adj1, u_nodes[a], u_nodes[b]) != _edge(adj2, v_nodes[a], v_nodes[b])
    return cost


def _greedy_mapping(adj1, adj2, classes):
    deg1, deg2 = adj1.sum(1), adj2.sum(1)
    u_nodes, v_nodes = [], []
    for a, b in classes:
        a = sorted(a, key=lambda i: (-deg1[i] if i >= 0 else 1, i))
        b = sorted(b, key=lambda j: (-deg2[j] if j >= 0 else 1, j))
        u_nodes += a
        v_nodes += b
    return u_nodes, v_nodes


def graph_edit_distance(
    o: CrystalStructure,
    p: CrystalStructure,
    cutoff: float = DEFAULT_BOND_CUTOFF,
    pair_cutoffs=None,
) -> GraphEditResult:
    """Node insertions/deletions plus edge mismatches under the best species-preserving mapping.

    Exact branch-and-bound when every padded species class has at most 8 nodes
    and the search fits its node budget; otherwise the degree-sorted greedy
    mapping gives an upper bound and ``exact`` is False.
    """
    adj1 = bond_graph(o, cutoff, pair_cutoffs)
    adj2 = bond_graph(p, cutoff, pair_cutoffs)
    classes = _padded_classes(o.species, p.species)
    node_cost = sum(abs(sum(i >= 0 for i in a) - sum(j >= 0 for j in b)) for a, b in classes)

    gu, gv = _greedy_mapping(adj1, adj2, classes)
    best = [_mapping_cost(adj1, adj2, gu, gv)]
    if best[0] == 0 or any(len(a) > GED_EXACT_CLASS_LIMIT for a, _ in classes):
        return GraphEditResult(int(node_cost + best[0]), exact=bool(best[0] == 0))

    # order graph-1 nodes class by class, highest degree first
    deg1 = adj1.sum(1)
    order = []
    for ci, (a, b) in enumerate(classes):
        for u in sorted(a, key=lambda i: (-deg1[i] if i >= 0 else 1, i)):
            order.append((u, ci))
    budget = [GED_NODE_BUDGET]
    used = [set() for _ in classes]
    placed_u, placed_v = [], []

    def dfs(k, cost):
        if cost >= best[0]:
            return
        if k == len(order):
            best[0] = cost
            return
        budget[0] -= 1
        if budget[0] < 0:
            return
        u, ci = order[k]
        for slot, v in enumerate(classes[ci][1]):
            if slot in used[ci]:
                continue
            extra = sum(_edge(adj1, u, pu) != _edge(adj2, v, pv) for pu, pv in zip(placed_u, placed_v))
            used[ci].add(slot)
            placed_u.append(u)
            placed_v.append(v)
            dfs(k + 1, cost + extra)
            placed_u.pop()
            placed_v.pop()
            used[ci].discard(slot)
            if best[0] == 0:
                return

    dfs(0, 0)
    return GraphEditResult(int(node_cost + best[0]), exact=bool(budget[0] >= 0))


# --- novelty ---------------------------------------------------------------------


class CorpusIndex:
    """Reference structures grouped by reduced formula."""

    def __init__(self, entries=()):
        self._by_formula: dict[str, list[tuple[str, CrystalStructure]]] = defaultdict(list)
        for ident, s in entries:
            self.add(ident, s)

    def add(self, ident: str, s: CrystalStructure) -> None:
        self._by_formula[s.formula()].append((str(ident), s))

    def candidates(self, formula: str):
        return list(self._by_formula.get(formula, ()))

    def __len__(self):
        return sum(len(v) for v in self._by_formula.values())


@dataclass
class NoveltyResult:
    novel: bool
    match_id: str | None = None
    distance: float | None = None


def novelty_check(candidate: CrystalStructure, corpus: CorpusIndex, tol: float = DEFAULT_NOVELTY_TOL) -> NoveltyResult:
    """Novel unless a same-formula, same-size corpus entry lies within ``tol`` angstrom RMS."""
    best = None
    for ident, ref in corpus.candidates(candidate.formula()):
        if ref.num_sites != candidate.num_sites:
            continue
        d = rms_anonymous_distance(ref, candidate)
        if d <= tol and (best is None or d < best[1]):
            best = (ident, d)
    if best is None:
        return NoveltyResult(True)
    return NoveltyResult(False, best[0], best[1])


# --- statistics ----------------------------------------------------------------------


@dataclass
class StatSummary:
    n: int
    median: float
    q1: float
    q3: float
    lower_whisker: float
    upper_whisker: float
    effective_rate: float


def summarize(series) -> StatSummary:
    """Box-plot statistics with 1.5 IQR whiskers clamped to the data range.

    The effective rate is the fraction of values between the whiskers.
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size == 0:
        raise EmptySeries("cannot summarize an empty series")
    q1, med, q3 = np.percentile(x, [25, 50, 75])
    iqr = q3 - q1
    lo = max(q1 - 1.5 * iqr, x.min())
    hi = min(q3 + 1.5 * iqr, x.max())
    rate = float(np.mean((x >= lo) & (x <= hi)))
    return StatSummary(int(x.size), float(med), float(q1), float(q3), float(lo), float(hi), rate)


# --- per-pair reports -------------------------------------------------------------------


@dataclass
class MatchReport:
    id: str
    matched: bool
    n_original: int
    n_predicted: int
    assignment: list[tuple[int, int]] = field(default_factory=list)
    lattice_rel_err: np.ndarray | None = None
    coord_rel_err: np.ndarray | None = None
    coord_abs_flag: np.ndarray | None = None
    mean_abs_coord_err: float | None = None
    superpose: float | None = None
    rms_anonymous: float | None = None
    ged: int | None = None
    ged_exact: bool | None = None


def evaluate_pair(
    ident: str,
    o: CrystalStructure,
    p: CrystalStructure | None,
    species_aware: bool = True,
    wrap: bool = True,
    cutoff: float = DEFAULT_BOND_CUTOFF,
    distances: bool = True,
) -> MatchReport:
    """Full comparison of one original/predicted pair; ``p=None`` marks a failed decode."""
    if p is None:
        return MatchReport(ident, False, o.num_sites, 0)
    report = MatchReport(ident, False, o.num_sites, p.num_sites)
    report.lattice_rel_err = lattice_relative_errors(o, p)
    if distances:
        ged = graph_edit_distance(o, p, cutoff)
        report.ged, report.ged_exact = ged.distance, ged.exact
    assignment = match_atoms(o, p, species_aware)
    if assignment is None:
        return report
    report.matched = True
    report.assignment = assignment
    report.coord_rel_err, report.coord_abs_flag = coordinate_relative_errors(assignment, o, p, wrap)
    idx_o = [i for i, _ in assignment]
    idx_p = [j for _, j in assignment]
    report.mean_abs_coord_err = float(np.mean(np.abs(min_image_delta(p.frac[idx_p], o.frac[idx_o]))))
    if distances:
        report.superpose = superpose_distance(o, p)
        report.rms_anonymous = rms_anonymous_distance(o, p)
    return report


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


REPORT_COLUMNS = [
    "id", "matched", "rel_err_a", "rel_err_b", "rel_err_c",
    "mean_abs_coord_err", "superpose", "rms_anon", "ged", "ged_exact_flag",
]


def match_report_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        lat = r.lattice_rel_err if r.lattice_rel_err is not None else [None] * 3
        w.writerow([
            r.id, _fmt(r.matched), *(_fmt(v) for v in lat), _fmt(r.mean_abs_coord_err),
            _fmt(r.superpose), _fmt(r.rms_anonymous), _fmt(r.ged), _fmt(r.ged_exact),
        ])
    return buf.getvalue()


def confusion_csv(matrix) -> str:
    m = np.asarray(matrix)
    n = m.shape[0] - 1
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["original\\predicted", *range(1, n + 1)])
    for i in range(1, n + 1):
        w.writerow([i, *(int(v) for v in m[i, 1:])])
    return buf.getvalue()


def error_series(reports) -> dict[str, np.ndarray]:
    """Relative-error series for a, b, c (decoded pairs) and x, y, z (matched pairs, relative entries only)."""
    series: dict[str, list[float]] = {k: [] for k in "abcxyz"}
    for r in reports:
        if r.lattice_rel_err is not None:
            for k, v in zip("abc", r.lattice_rel_err):
                series[k].append(float(v))
        if r.matched and r.coord_rel_err is not None:
            for col, k in enumerate("xyz"):
                keep = ~r.coord_abs_flag[:, col]
                series[k].extend(float(v) for v in r.coord_rel_err[keep, col])
    return {k: np.array(v) for k, v in series.items()}


def summary_table(series: dict[str, np.ndarray]) -> dict[str, StatSummary | None]:
    return {k: (summarize(v) if len(v) else None) for k, v in series.items()}


def summary_csv(table: dict[str, StatSummary | None]) -> str:
    """Rows: efficiency, upper limit, lower limit; columns a, b, c, x, y, z."""
    cols = list("abcxyz")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["statistic", *cols])
    rows = [("efficiency", "effective_rate"), ("upper limit", "upper_whisker"), ("lower limit", "lower_whisker")]
    for label, attr in rows:
        w.writerow([label, *(_fmt(getattr(table[c], attr)) if table.get(c) else "" for c in cols)])
    return buf.getvalue()
