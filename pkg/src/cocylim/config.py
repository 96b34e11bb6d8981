"""Experiment configuration: YAML schema, validation, and model building.

A config is one structured file with nested sections (system, potential,
cocycle, grid, analyses, numerics, mc, seed).  validate() returns a list
of diagnostics without computing anything; build() materializes the
symbolic system, Gibbs model and cocycle.  Every numeric knob in
`numerics` has a package default and is echoed into the run manifest.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import cocycle as cocycle_mod
from . import gibbs as gibbs_mod
from . import sft

ANALYSES = ("spectrum", "typicality", "lyapunov", "variance", "clt", "ldp",
            "analyticity", "perron", "contraction")

NUMERIC_DEFAULTS = {
    "power_tol": 1e-12,
    "power_maxiter": 200_000,
    "delta": 1e-3,
    "eta": 0.5,
    "ldp_nodes": 11,
    "word_cap": 10_000_000,
    "sv_floor": 1e-8,
    "gap_tol": 1e-6,
    "search_period": 6,
    "search_connector": 8,
    "holonomy_depth": 64,
    "holonomy_tol": 1e-12,
    "alpha": 0.1,
    "ly_max_n": 20,
    "ly_samples": 100,
    "tilt": True,
    "grid_max_covering": None,
}

MC_DEFAULTS = {
    "n": 2000,
    "trials": 2000,
    "clt_n": 2000,
    "clt_trials": 5000,
    "variance_trials": 20000,
    "ldp_eps": 0.1,
    "ldp_n_list": [500, 1000, 2000, 5000],
    "ldp_trials": 4000,
    "u": None,
    "dump_csv": False,
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    raw: dict
    path: str | None = None
    system: dict = field(default_factory=dict)
    potential: dict = field(default_factory=dict)
    cocycle: dict = field(default_factory=dict)
    grid_n: int = 256
    analyses: tuple = ()
    numerics: dict = field(default_factory=dict)
    mc: dict = field(default_factory=dict)
    seed: int | None = None
    analyticity: dict = field(default_factory=dict)
    threads: int = 1


def load_config(path):
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    cfg = ExperimentConfig(raw=raw, path=str(path))
    cfg.system = raw.get("system", {}) or {}
    cfg.potential = raw.get("potential", {}) or {}
    cfg.cocycle = raw.get("cocycle", {}) or {}
    cfg.grid_n = int((raw.get("grid", {}) or {}).get("resolution", 256))
    cfg.analyses = tuple(raw.get("analyses", []) or [])
    cfg.numerics = dict(NUMERIC_DEFAULTS)
    cfg.numerics.update(raw.get("numerics", {}) or {})
    cfg.mc = dict(MC_DEFAULTS)
    cfg.mc.update(raw.get("mc", {}) or {})
    cfg.seed = raw.get("seed")
    cfg.analyticity = raw.get("analyticity", {}) or {}
    cfg.threads = int(raw.get("threads", 1))
    return cfg


def validate(cfg):
    """Full validation with no computation; returns a list of diagnostics."""
    diags = []

    adj = cfg.system.get("adjacency")
    q = None
    if adj is None:
        diags.append("system.adjacency: missing")
    else:
        rows = adj
        if not isinstance(rows, list) or not rows:
            diags.append("system.adjacency: must be a list of rows")
        else:
            q = len(rows)
            for i, r in enumerate(rows):
                if not isinstance(r, list) or len(r) != q:
                    diags.append(f"system.adjacency: row {i} is not length {q}"
                                 " (matrix must be square)")
                elif any(v not in (0, 1) for v in r):
                    diags.append(f"system.adjacency: row {i} has entries"
                                 " outside {0, 1}")
            if not diags:
                try:
                    T = sft.AdjacencyMatrix(rows)
                    if not sft.check_irreducible(T):
                        diags.append("system.adjacency: matrix is reducible")
                except ValueError as exc:
                    diags.append(f"system.adjacency: {exc}")
    theta = cfg.system.get("theta", 1.0)
    if not (isinstance(theta, (int, float)) and 0 < theta <= 1):
        diags.append("system.theta: must lie in (0, 1]")

    kind = cfg.potential.get("kind")
    if cfg.potential and kind not in ("bernoulli", "markov", "constant", "table"):
        diags.append(f"potential.kind: unknown kind {kind!r}")
    if kind == "bernoulli":
        probs = cfg.potential.get("probs")
        if (not isinstance(probs, list) or (q and len(probs) != q)
                or any(p <= 0 for p in probs or [0])):
            diags.append("potential.probs: need one positive weight per symbol")
    if kind == "markov" and not cfg.potential.get("transitions"):
        diags.append("potential.transitions: missing stochastic matrix")
    if kind == "table":
        vals = cfg.potential.get("values")
        if not isinstance(vals, dict) or not vals:
            diags.append("potential.values: need a (word -> value) table")
        elif q:
            k = cfg.potential.get("memory")
            if not isinstance(k, int) or k < 1:
                diags.append("potential.memory: required positive integer"
                             " for table potentials")
            else:
                for w in vals:
                    ws = sft.word(str(w))
                    if len(ws) != k:
                        diags.append(f"potential.values: word {w!r} has"
                                     f" length {len(ws)}, expected {k}")
                    elif any(s >= q for s in ws):
                        diags.append(f"potential.values: word {w!r} uses"
                                     " symbols outside the alphabet")

    needs_cocycle = set(cfg.analyses) & {"spectrum", "typicality", "lyapunov",
                                         "variance", "clt", "ldp",
                                         "analyticity", "contraction"}
    if needs_cocycle and not cfg.cocycle:
        diags.append(f"cocycle: section required by analyses "
                     f"{sorted(needs_cocycle)}")
    if cfg.cocycle:
        d = cfg.cocycle.get("dimension")
        m = cfg.cocycle.get("memory", 1)
        gens = cfg.cocycle.get("generators")
        if not isinstance(d, int) or d < 1:
            diags.append("cocycle.dimension: required positive integer")
        if not isinstance(m, int) or m < 1:
            diags.append("cocycle.memory: must be a positive integer")
        if not isinstance(gens, list) or not gens:
            diags.append("cocycle.generators: need a list of"
                         " {word, entries} items")
        elif isinstance(d, int) and d >= 1 and q is not None:
            seen = set()
            for item in gens:
                w = sft.word(str(item.get("word", "")))
                ent = item.get("entries")
                if len(w) != m:
                    diags.append(f"cocycle.generators: word {item.get('word')!r}"
                                 f" has length {len(w)}, expected memory {m}")
                    continue
                if any(s >= q for s in w):
                    diags.append(f"cocycle.generators: word {item.get('word')!r}"
                                 " uses symbols outside the alphabet")
                    continue
                try:
                    T = sft.AdjacencyMatrix(cfg.system["adjacency"])
                    ok = all(T.entries[a, b] for a, b in zip(w, w[1:]))
                except Exception:
                    ok = True
                if not ok:
                    diags.append(f"cocycle.generators: word {item.get('word')!r}"
                                 " is not admissible")
                    continue
                if not isinstance(ent, list) or len(ent) != d * d:
                    diags.append(f"cocycle.generators: entries for"
                                 f" {item.get('word')!r} must be {d*d}"
                                 " row-major numbers")
                seen.add(w)

    for a in cfg.analyses:
        if a not in ANALYSES:
            diags.append(f"analyses: unknown analysis {a!r}")
    mc_analyses = set(cfg.analyses) & {"lyapunov", "variance", "clt", "ldp",
                                       "contraction"}
    if mc_analyses and cfg.seed is None:
        diags.append(f"seed: required by Monte Carlo analyses {sorted(mc_analyses)}")
    if cfg.seed is not None and not isinstance(cfg.seed, int):
        diags.append("seed: must be an integer")
    if "analyticity" in cfg.analyses:
        fam = cfg.analyticity
        if not fam:
            diags.append("analyticity: section required by the analyticity"
                         " analysis")
        else:
            if fam.get("kind") not in ("bernoulli-tilt", "table-linear"):
                diags.append("analyticity.kind: must be 'bernoulli-tilt'"
                             " or 'table-linear'")
            for key in ("t_min", "t_max", "nodes"):
                if key not in fam:
                    diags.append(f"analyticity.{key}: missing")
    if cfg.grid_n < 1:
        diags.append("grid.resolution: must be >= 1")
    return diags


def build_potential(cfg, S):
    kind = cfg.potential.get("kind", "constant")
    if kind == "constant":
        pot = gibbs_mod.LocallyConstantPotential.constant(
            S, float(cfg.potential.get("value", 0.0)),
            int(cfg.potential.get("memory", 1)))
    elif kind == "bernoulli":
        pot = gibbs_mod.LocallyConstantPotential.bernoulli(cfg.potential["probs"])
    elif kind == "markov":
        pot = gibbs_mod.LocallyConstantPotential.markov(
            cfg.potential["transitions"])
    elif kind == "table":
        pot = gibbs_mod.LocallyConstantPotential(
            int(cfg.potential["memory"]),
            {sft.word(str(w)): float(v)
             for w, v in cfg.potential["values"].items()})
    else:
        raise ConfigError(f"unknown potential kind {kind!r}")
    return pot


def build_cocycle(cfg):
    d = int(cfg.cocycle["dimension"])
    m = int(cfg.cocycle.get("memory", 1))
    gens = {}
    for item in cfg.cocycle["generators"]:
        w = sft.word(str(item["word"]))
        gens[w] = np.asarray(item["entries"], dtype=float).reshape(d, d)
    scale = cfg.cocycle.get("scale")
    A = cocycle_mod.MatrixCocycle(m, d, gens,
                                  float(cfg.system.get("theta", 1.0)))
    if scale:
        A = A.scaled(float(scale))
    return A


@dataclass
class BuiltExperiment:
    system: object
    potential: object
    gibbs: object          # memory aligned to the cocycle (k >= m)
    gibbs_raw: object      # as configured
    cocycle: object | None


def build(cfg):
    diags = validate(cfg)
    if diags:
        raise ConfigError("; ".join(diags))
    S = sft.SymbolicSystem.from_matrix(
        cfg.system["adjacency"], float(cfg.system.get("theta", 1.0)),
        int(cfg.numerics["word_cap"]))
    pot = build_potential(cfg, S)
    A = build_cocycle(cfg) if cfg.cocycle else None
    gm_raw = gibbs_mod.build_gibbs_model(
        pot, S, tol=float(cfg.numerics["power_tol"]),
        maxiter=int(cfg.numerics["power_maxiter"]))
    gm = gm_raw
    if A is not None and pot.memory < A.memory:
        gm = gibbs_mod.build_gibbs_model(
            pot.padded_to(A.memory, S), S,
            tol=float(cfg.numerics["power_tol"]),
            maxiter=int(cfg.numerics["power_maxiter"]))
    return BuiltExperiment(S, pot, gm, gm_raw, A)


def analyticity_family(cfg, S):
    """Gibbs models over the parameter nodes of the analyticity section."""
    fam = cfg.analyticity
    t_nodes = np.linspace(float(fam["t_min"]), float(fam["t_max"]),
                          int(fam["nodes"]))
    if abs(t_nodes[0] + t_nodes[-1]) > 1e-12:
        raise ConfigError("analyticity nodes must be symmetric about 0")
    models = []
    if fam["kind"] == "bernoulli-tilt":
        base = np.asarray(fam.get("probs", [0.5, 0.5]), dtype=float)
        dirn = np.asarray(fam["direction"], dtype=float)
        for t in t_nodes:
            p = base + t * dirn
            if (p <= 0).any():
                raise ConfigError(f"analyticity: node t={t} gives a"
                                  " nonpositive weight")
            models.append(gibbs_mod.build_gibbs_model(
                gibbs_mod.LocallyConstantPotential.bernoulli(p), S))
    else:       # table-linear: psi_t = base + t * direction on k-words
        k = int(fam["memory"])
        base = {sft.word(str(w)): float(v) for w, v in fam["base"].items()}
        dirn = {sft.word(str(w)): float(v) for w, v in fam["direction"].items()}
        for t in t_nodes:
            vals = {w: base[w] + t * dirn.get(w, 0.0) for w in base}
            models.append(gibbs_mod.build_gibbs_model(
                gibbs_mod.LocallyConstantPotential(k, vals), S))
    return t_nodes, models


def effective_numerics(cfg):
    """Materialized numeric settings for the manifest."""
    out = {}
    for k, v in sorted(cfg.numerics.items()):
        out[k] = v if not isinstance(v, float) or math.isfinite(v) else str(v)
    return out
