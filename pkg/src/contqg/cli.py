"""Command line front end: run verification suites, export quivers, normalize elements.

    contqg run --space line --grid uniform:3 --suite jacobi
    contqg export-quiver --grid "(0,1] (1,2] (2,3]"
    contqg normal-form "(* (E (1,2]) (E (0,1]))"

Exit status: 0 when every report passes, 1 when some case fails, 2 on a
configuration or parse error, 3 when a resource limit is hit.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from . import intervals as ivs
from . import lie, qgroup
from .errors import ConfigError, ContQGError, NotIrreducible, ParseError, ResourceLimit
from .freealg import normal_form, parse_element, render
from .intervals import DEFAULT_CLOSURE_CAP, VertexSpace, close_grid, parse_interval
from .reports import SCHEMA_VERSION, Report

SPACES = {"line": VertexSpace.LINE, "circle": VertexSpace.CIRCLE}
DEFAULT_GRID = {"line": "uniform:3", "circle": "arcs:4"}


@dataclass
class SuiteConfig:
    space: str | None = None
    grid: str | None = None
    suites: list = field(default_factory=list)
    hbar_order: int = 2
    degree_bound: int | None = None
    seed: int = 0
    jobs: int = 1
    output: str | None = None
    format: str = "text"
    cap: int = DEFAULT_CLOSURE_CAP


# -- grids -----------------------------------------------------------------------------

_GRID_TOKEN = re.compile(r"circ\([^\]]*\]|\([^\]]*\]|circle")


def parse_grid(text, cap=DEFAULT_CLOSURE_CAP):
    """``uniform:n``, ``arcs:n`` or a list of interval literals, closed under (+) and (-)."""
    text = text.strip()
    m = re.fullmatch(r"(uniform|arcs):(\d+)", text)
    if m:
        n = int(m.group(2))
        if n < 1:
            raise ConfigError(f"grid size must be positive: {text}")
        return ivs.uniform_grid(n, cap) if m.group(1) == "uniform" else ivs.arcs_grid(n, cap)
    toks = _GRID_TOKEN.findall(text)
    rest = _GRID_TOKEN.sub("", text).replace(",", " ").replace(";", " ").strip()
    if not toks or rest:
        raise ConfigError(f"cannot read grid {text!r}")
    try:
        items = [parse_interval(t) for t in toks]
    except (ParseError, ValueError) as e:
        raise ConfigError(f"bad interval in grid: {e}") from e
    if len({iv.space for iv in items}) > 1:
        raise ConfigError("grid mixes line and circle intervals")
    return close_grid(items, cap)


def parse_interval_list(text):
    toks = _GRID_TOKEN.findall(text)
    if not toks or _GRID_TOKEN.sub("", text).replace(",", " ").replace(";", " ").strip():
        raise ConfigError(f"cannot read interval list {text!r}")
    try:
        return [parse_interval(t) for t in toks]
    except (ParseError, ValueError) as e:
        raise ConfigError(str(e)) from e


def _uniform_size(grid):
    """n when the grid is exactly uniform:n, else None."""
    if grid[0].space is not VertexSpace.LINE:
        return None
    n = len(ivs.endpoints(grid)) - 1
    return n if grid == ivs.uniform_grid(n) and ivs.endpoints(grid)[0] == 0 else None


# -- suites ------------------------------------------------------------------------------
# Each suite takes (cfg, grid) and returns a list of reports.  ``grid`` is None
# when neither --space nor --grid was given; the suite then uses its own default.

def _grid_or(grid, text, cfg):
    return grid if grid is not None else parse_grid(text, cfg.cap)


def _line_n(grid, default, suite):
    if grid is None:
        return default
    n = _uniform_size(grid)
    if n is None:
        raise ConfigError(f"suite {suite} needs a uniform line grid")
    return n


def _coeff_table(cfg, grid):
    n = _line_n(grid, 4, "coeff-table")
    return [ivs.coefficient_table_check(n), ivs.euler_case_check([ivs.uniform_grid(n), ivs.arcs_grid(4)])]


def _jacobi(cfg, grid):
    return [lie.jacobi_check(_grid_or(grid, "uniform:3", cfg))]


def _invariant_form(cfg, grid):
    return [lie.invariance_check(_grid_or(grid, "uniform:3", cfg))]


def _cobracket(cfg, grid):
    g = _grid_or(grid, "uniform:3", cfg)
    return [lie.co_jacobi_check(g), lie.cocycle_check(g)]


def _lba_pairing(cfg, grid):
    g = _grid_or(grid, "uniform:3", cfg)
    return [lie.lba_pairing_check(g), lie.db_coeff_check([(a, b) for a in g for b in g])]


def cartan_sweep(count=100, seed=0):
    sets = lie.random_irreducible_sets(count, seed)
    rep = Report("cartan", "line+circle", sorted({iv for J in sets for iv in J},
                                                key=lambda iv: (iv.space.value, iv.sort_key())))
    for J in sets:
        cd = lie.cartan_matrix(J)
        rep.record(lie.cartan_constraints_ok(cd), {"set": [str(x) for x in J], "matrix": [list(r) for r in cd.matrix]})
        rep.record(cd.matrix == tuple(zip(*cd.matrix)), {"set": [str(x) for x in J], "symmetric": False})
    rep.extra["seed"] = seed
    return rep


def _cartan(cfg, grid):
    return [cartan_sweep(100, cfg.seed)]


def _colimit(cfg, grid):
    return [lie.colimit_sweep(_grid_or(grid, "uniform:3", cfg))]


def _q_relations(cfg, grid):
    return [qgroup.q_relations_check(_grid_or(grid, "uniform:3", cfg))]


def mutation_report(n=3, seed=0):
    """The seeded coefficient mutations, recorded as passing when they fail."""
    rep = Report("mutation-controls", "line", ivs.uniform_grid(n))
    for m in qgroup.mutation_controls(n, seed):
        rep.record(not m.passed, {"control": m.suite, "failures": m.cases_failed})
        rep.extra[m.suite] = f"{m.cases_failed}/{m.cases_total} relation instances fail"
    return rep


def _rep_sweep(cfg, grid):
    n = _line_n(grid, 4, "rep-sweep")
    return [qgroup.rep_relation_sweep(n), mutation_report(min(n, 3), cfg.seed)]


def _hopf_axioms(cfg, grid):
    g = _grid_or(grid, "uniform:3", cfg)
    return [qgroup.hopf_axiom_sweep(g, overlap_degree=cfg.degree_bound or 4)]


def _pairing(cfg, grid):
    g = _grid_or(grid, "uniform:2", cfg)
    probe = ivs.uniform_grid(2) if g[0].space is VertexSpace.LINE and len(g) > 3 else None
    return [qgroup.pairing_sweep(g, cfg.degree_bound or 2, probe_grid=probe)]


def _classical_limit(cfg, grid):
    g = _grid_or(grid, "uniform:3", cfg)
    return [qgroup.classical_limit_check(g, cfg.hbar_order), qgroup.degeneration_check(g)]


def _q_colimit(cfg, grid):
    return [qgroup.q_colimit_sweep(_grid_or(grid, "uniform:3", cfg))]


def _q_iso_line(cfg, grid):
    return [qgroup.q_iso_line_check(_line_n(grid, 4, "q-iso-line"))]


def _ybe(cfg, grid):
    n = _line_n(grid, 2, "ybe")
    return [qgroup.rmatrix_ybe_check(n, cfg.degree_bound or 2)]


def _circle_heis(cfg, grid):
    g = _grid_or(grid, "arcs:4", cfg)
    if g[0].space is not VertexSpace.CIRCLE:
        raise ConfigError("suite circle-heis needs a circle grid")
    return [lie.circle_decomposition_check(g), lie.serre_pair_exclusions(g)]


SUITES = {
    "coeff-table": _coeff_table,
    "jacobi": _jacobi,
    "invariant-form": _invariant_form,
    "cobracket": _cobracket,
    "lba-pairing": _lba_pairing,
    "cartan": _cartan,
    "colimit": _colimit,
    "q-relations": _q_relations,
    "rep-sweep": _rep_sweep,
    "hopf-axioms": _hopf_axioms,
    "pairing": _pairing,
    "classical-limit": _classical_limit,
    "q-colimit": _q_colimit,
    "q-iso-line": _q_iso_line,
    "ybe": _ybe,
    "circle-heis": _circle_heis,
}
LINE_ONLY = {"rep-sweep", "q-iso-line", "ybe"}
CIRCLE_ONLY = {"circle-heis"}


def resolve_grid(cfg):
    """The grid shared by all suites, or None for per-suite defaults."""
    if cfg.space is not None and cfg.space not in SPACES:
        raise ConfigError(f"unknown space {cfg.space!r}; expected line or circle")
    if cfg.grid is None and cfg.space is None:
        return None
    grid = parse_grid(cfg.grid or DEFAULT_GRID[cfg.space], cfg.cap)
    if cfg.space is not None and grid[0].space is not SPACES[cfg.space]:
        raise ConfigError(f"grid {cfg.grid} does not lie on the {cfg.space}")
    return grid


def validate(cfg):
    if not cfg.suites:
        raise ConfigError("no suite selected")
    unknown = [s for s in cfg.suites if s not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    if cfg.format not in ("text", "json"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    if cfg.hbar_order < 1:
        raise ConfigError("hbar order must be at least 1")
    if cfg.degree_bound is not None and cfg.degree_bound < 0:
        raise ConfigError("degree bound must be non-negative")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be at least 1")
    grid = resolve_grid(cfg)
    if grid is not None and grid[0].space is VertexSpace.CIRCLE:
        bad = [s for s in cfg.suites if s in LINE_ONLY]
        if bad:
            raise ConfigError(f"suite(s) {', '.join(bad)} run on the line only")
    if grid is not None and grid[0].space is VertexSpace.LINE:
        bad = [s for s in cfg.suites if s in CIRCLE_ONLY]
        if bad:
            raise ConfigError(f"suite(s) {', '.join(bad)} run on the circle only")
    return grid


def _run_one(args):
    name, cfg, grid = args
    return name, SUITES[name](cfg, grid)


def run(cfg):
    """Run the configured suites; returns (exit code, [(suite, reports)])."""
    grid = validate(cfg)
    jobs = [(name, cfg, grid) for name in cfg.suites]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    ok = all(r.passed for _, reps in results for r in reps)
    return (0 if ok else 1), results


def suite_document(name, reports):
    return {"schema": SCHEMA_VERSION, "suite": name,
            "passed": all(r.passed for r in reports),
            "reports": [r.to_dict() for r in reports]}


def _dump(doc):
    return json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"


def write_reports(results, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    for name, reps in results:
        with open(os.path.join(out_dir, f"{name}.json"), "w") as fh:
            fh.write(_dump(suite_document(name, reps)))


def render_results(results, fmt):
    if fmt == "json":
        return _dump([suite_document(name, reps) for name, reps in results])
    lines = []
    for name, reps in results:
        lines.append(f"== {name}")
        for r in reps:
            lines.append("  " + r.summary())
    return "\n".join(lines) + "\n"


# -- config files ----------------------------------------------------------------------------

_INT_KEYS = {"hbar_order", "degree_bound", "seed", "jobs", "cap"}
_KEYS = {"space", "grid", "suite", "suites", "format", "output", "out"} | _INT_KEYS


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment; ``suite`` may repeat."""
    vals = {}
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"{path}:{no}: unknown key {key!r}")
        if key in ("suite", "suites"):
            vals.setdefault("suites", []).extend(s.strip() for s in val.split(",") if s.strip())
            continue
        if key == "out":
            key = "output"
        if key in _INT_KEYS:
            try:
                val = int(val)
            except ValueError as e:
                raise ConfigError(f"{path}:{no}: {key} must be an integer") from e
        vals[key] = val
    return vals


# -- argument parsing -------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _common(p):
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--space", choices=sorted(SPACES))
    p.add_argument("--grid", help="uniform:n, arcs:n or a list of intervals")


def build_parser():
    p = _Parser(prog="contqg", description="Checks for continuum Lie algebras and quantum groups.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run verification suites")
    _common(r)
    r.add_argument("--suite", action="append", help="suite name (repeatable); 'all' runs every suite")
    r.add_argument("--hbar-order", type=int)
    r.add_argument("--degree-bound", type=int)
    r.add_argument("--jobs", type=int)
    r.add_argument("--out", help="directory for one JSON report per suite")
    r.add_argument("--format", choices=["text", "json"])
    r.add_argument("--seed", type=int)

    q = sub.add_parser("export-quiver", help="Borcherds-Cartan diagram of an irreducible set, as DOT")
    _common(q)
    q.add_argument("--out", help="write the DOT file here instead of stdout")
    q.add_argument("--name", default="quiver")

    n = sub.add_parser("normal-form", help="normal form of an element")
    _common(n)
    n.add_argument("expr", help='S-expression, e.g. "(* (E (1,2]) (E (0,1]))"')
    n.add_argument("--step-budget", type=int, default=10 ** 5)
    return p


def config_from_args(ns):
    vals = read_config(ns.config) if getattr(ns, "config", None) else {}
    cfg = SuiteConfig(**{k: v for k, v in vals.items() if k in SuiteConfig.__dataclass_fields__})
    over = {}
    for attr, key in (("space", "space"), ("grid", "grid"), ("hbar_order", "hbar_order"),
                      ("degree_bound", "degree_bound"), ("jobs", "jobs"), ("out", "output"),
                      ("format", "format"), ("seed", "seed")):
        v = getattr(ns, attr, None)
        if v is not None:
            over[key] = v
    suites = getattr(ns, "suite", None)
    if suites:
        over["suites"] = [s.strip() for item in suites for s in item.split(",") if s.strip()]
    cfg = replace(cfg, **over)
    if cfg.suites == ["all"] or "all" in cfg.suites:
        cfg.suites = list(SUITES)
    return cfg


def export_quiver(cfg, name="quiver"):
    if cfg.grid is None:
        raise ConfigError("export-quiver needs --grid with an interval list")
    J = parse_interval_list(cfg.grid)
    if cfg.space is not None and any(iv.space is not SPACES[cfg.space] for iv in J):
        raise ConfigError(f"intervals do not lie on the {cfg.space}")
    try:
        cd = lie.cartan_matrix(J)
    except NotIrreducible as e:
        raise ConfigError(f"not an irreducible set: {e}") from e
    return lie.quiver_dot(cd, name)


def normal_form_cmd(expr, cfg=None, step_budget=10 ** 5):
    """Triangular normal form of ``expr`` under the rules of the grid it generates."""
    cfg = cfg or SuiteConfig()
    space = SPACES[cfg.space] if cfg.space else None
    x = parse_element(expr, space)
    found = {l[1] for ws in x.terms for w in ws for l in w if l[0] in ("E", "F", "H")}
    extra = resolve_grid(cfg) or []
    if not found and not extra:
        return render(x)
    grid = close_grid(found | set(extra), cfg.cap)
    return render(normal_form(x, qgroup.system_for(grid), step_budget))


def main(argv=None):
    try:
        ns = build_parser().parse_args(argv)
        if ns.command == "run":
            cfg = config_from_args(ns)
            code, results = run(cfg)
            if cfg.output:
                write_reports(results, cfg.output)
            sys.stdout.write(render_results(results, cfg.format))
            return code
        cfg = config_from_args(ns)
        if ns.command == "export-quiver":
            dot = export_quiver(cfg, ns.name)
            if ns.out:
                with open(ns.out, "w") as fh:
                    fh.write(dot)
            else:
                sys.stdout.write(dot)
            return 0
        sys.stdout.write(normal_form_cmd(ns.expr, cfg, ns.step_budget) + "\n")
        return 0
    except (ConfigError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ResourceLimit as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return 3
    except ContQGError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
