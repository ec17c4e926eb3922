"""Experiment recipes: configuration, sweeps and plot-ready tables.

Each recipe takes an :class:`ExperimentConfig` and returns a
:class:`RecipeOutput` holding named CSV tables and a JSON-able summary.
Randomness comes from one ``SeedSequence`` per run, split into fixed named
streams so that no recipe perturbs another's draws.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np
from scipy.sparse.csgraph import connected_components

from .bounds import classify_regime, estimate_bounds, RegimeKind
from .ctrb import (
    DriverSet,
    controllability_matrix,
    controllable_basis,
    decompose_gram_schmidt,
    decompose_permutation,
    decomposition_report,
    numerical_rank,
)
from .energy import simulate
from .exceptions import ConfigError, NotControllableError, RecipeError
from .gramian import exact_extreme_eigenvalues
from .netgen import (
    ErRecipe,
    Network,
    generate_er,
    load_edge_list,
    network_from_json,
    parse_edge_list,
)

__all__ = [
    "Recipe",
    "ExperimentConfig",
    "Table",
    "SweepResult",
    "RecipeOutput",
    "BUILTIN_NETWORKS",
    "load_config",
    "run_recipe",
    "run_sphere_distribution",
    "run_decomposition_demo",
    "run_bound_sweep",
    "run_driver_comparison",
    "run_target_vs_full",
    "fit_regime_slope",
    "write_outputs",
]


class Recipe(str, enum.Enum):
    SphereDistribution = "sphere"
    DecompositionDemo = "decomposition"
    BoundSweep = "bound-sweep"
    DriverComparison = "driver-comparison"
    TargetVsFull = "target-vs-full"


def _chain(k: int, diag: float, w: float) -> np.ndarray:
    return diag * np.eye(k) + w * (np.eye(k, k=1) + np.eye(k, k=-1))


def _star4() -> np.ndarray:
    return np.array(
        [[0.0, 1, 1, 1], [1, 1, 0, 0], [1, 0, 0, 0], [1, 0, 0, 0]]
    )


def _two_chains_5() -> np.ndarray:
    # Chain 1-2-3 with spectrum inside the unit circle, chain 4-5 outside it.
    A = np.zeros((5, 5))
    A[:3, :3] = _chain(3, 0.3, 0.3)
    A[3:, 3:] = _chain(2, 2.0, 0.5)
    return A


def _split_10() -> np.ndarray:
    # Nodes 1-4 form an unstable chain, nodes 5-10 a stable one.
    A = np.zeros((10, 10))
    A[:4, :4] = _chain(4, 1.5, 0.3)
    A[4:, 4:] = _chain(6, 0.4, 0.2)
    return A


BUILTIN_NETWORKS = {
    "star-4": _star4,
    "two-chains-5": _two_chains_5,
    "split-10": _split_10,
}

# Small hand-built networks used by the default recipes.
_RECONSTRUCTIONS = {"two-chains-5", "split-10"}


_DEFAULTS: dict[Recipe, dict[str, Any]] = {
    Recipe.SphereDistribution: {
        "gramian": [[100.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        "samples": 90_000,
    },
    Recipe.DecompositionDemo: {
        "network": {"builtin": "star-4"},
        "drivers": [1],
        "rollouts": 5000,
        "rollout_steps": 6,
    },
    Recipe.BoundSweep: {
        "network": {
            "generator": {"n": 20, "p": 0.1, "weight_interval": [0.0, 0.05], "self_loop_offset": 0.8, "seed": 3}
        },
        "drivers": "auto",
        "targets": "controllable",
        "tau_f": {"start": 15, "stop": 40},
        "exact_max_tau": 60,
    },
    Recipe.DriverComparison: {
        "network": {"builtin": "two-chains-5"},
        "drivers": [1],
        "drivers_alt": [4],
        "tau_f": {"start": 5, "stop": 40},
    },
    Recipe.TargetVsFull: {
        "network": {"builtin": "split-10"},
        "drivers": [1],
        "drivers_full": [1, 3, 5, 8],
        "targets": [1, 2, 3, 4],
        "tau_f": {"start": 4, "stop": 40},
    },
}


@dataclass
class ExperimentConfig:
    recipe: Recipe
    network: Optional[dict] = None
    drivers: Any = None
    drivers_alt: Optional[list[int]] = None
    drivers_full: Optional[list[int]] = None
    targets: Any = None
    tau_f: list[int] = field(default_factory=list)
    samples: int = 90_000
    rollouts: int = 5000
    rollout_steps: int = 6
    gramian: Optional[list] = None
    exact_max_tau: int = 60
    seed: int = 0
    out_dir: str = "out"
    base_dir: str = "."

    @classmethod
    def from_mapping(cls, doc: Mapping, recipe=None, base_dir: str = ".") -> "ExperimentConfig":
        doc = dict(doc)
        name = recipe if recipe is not None else doc.get("recipe")
        if name is None:
            raise ConfigError("no recipe given")
        try:
            rec = name if isinstance(name, Recipe) else _recipe_from_name(str(name))
        except ValueError:
            raise ConfigError(f"unknown recipe {name!r}") from None
        if "recipe" in doc and _recipe_from_name(str(doc["recipe"])) is not rec:
            raise ConfigError(f"config is for recipe {doc['recipe']!r}, not {rec.value!r}")
        merged = dict(_DEFAULTS[rec])
        merged.update({k: v for k, v in doc.items() if k != "recipe"})
        known = {f for f in cls.__dataclass_fields__ if f not in ("recipe", "base_dir")}
        unknown = set(merged) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(recipe=rec, base_dir=base_dir, **{k: v for k, v in merged.items() if k != "tau_f"})
            cfg.tau_f = _parse_taus(merged.get("tau_f"))
            cfg.validate()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        return cfg

    def validate(self) -> None:
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.samples < 1 or self.rollouts < 1 or self.rollout_steps < 1:
            raise ConfigError("samples, rollouts and rollout_steps must be positive")
        needs_taus = self.recipe in (Recipe.BoundSweep, Recipe.DriverComparison, Recipe.TargetVsFull)
        if needs_taus and not self.tau_f:
            raise ConfigError("tau_f range is empty")
        if self.network is not None:
            for key in ("edge_list", "json"):
                if key in self.network:
                    path = self._resolve(self.network[key])
                    if not os.path.exists(path):
                        raise ConfigError(f"network file not found: {path}")

    def _resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    def streams(self) -> dict[str, np.random.Generator]:
        names = ("network", "sampling", "rollouts", "tasks")
        kids = np.random.SeedSequence(int(self.seed)).spawn(len(names))
        return {nm: np.random.default_rng(k) for nm, k in zip(names, kids)}

    def build_network(self) -> tuple[Network, dict]:
        spec = self.network or {}
        if "builtin" in spec:
            key = spec["builtin"]
            if key not in BUILTIN_NETWORKS:
                raise ConfigError(f"unknown builtin network {key!r}; choose from {sorted(BUILTIN_NETWORKS)}")
            meta = {"source": f"builtin:{key}"}
            if key in _RECONSTRUCTIONS:
                meta["label"] = "reconstruction"
            return Network(BUILTIN_NETWORKS[key]()), meta
        if "generator" in spec:
            g = dict(spec["generator"])
            g.setdefault("seed", int(self.seed))
            try:
                rec = ErRecipe(
                    n=int(g["n"]), p=float(g["p"]),
                    weight_interval=tuple(float(v) for v in g.get("weight_interval", (0.0, 1.0))),
                    self_loop_offset=float(g.get("self_loop_offset", 0.0)),
                    seed=int(g["seed"]),
                )
            except KeyError as exc:
                raise ConfigError(f"generator needs {exc}") from None
            return generate_er(rec), {"source": "generator", **{k: g[k] for k in sorted(g)}}
        if "edge_list" in spec:
            return load_edge_list(self._resolve(spec["edge_list"]), spec.get("n")), {"source": spec["edge_list"]}
        if "json" in spec:
            with open(self._resolve(spec["json"]), encoding="utf-8") as fh:
                return network_from_json(fh.read()), {"source": spec["json"]}
        if "edges" in spec:
            edges = spec["edges"]
            if not isinstance(edges, str):
                edges = "\n".join(" ".join(str(v) for v in e) for e in edges)
            return parse_edge_list(edges, spec.get("n")), {"source": "inline"}
        raise ConfigError("network needs one of builtin, generator, edge_list, json, edges")


def _recipe_from_name(name: str) -> Recipe:
    for r in Recipe:
        if name in (r.value, r.name):
            return r
    raise ValueError(name)


def _parse_taus(spec) -> list[int]:
    if spec is None:
        return []
    if isinstance(spec, (list, tuple)):
        taus = [int(t) for t in spec]
    elif isinstance(spec, Mapping):
        if "values" in spec:
            taus = [int(t) for t in spec["values"]]
        elif "log" in spec:
            lo, hi, count = spec["log"]
            taus = sorted({int(round(t)) for t in np.geomspace(lo, hi, int(count))})
        else:
            taus = list(range(int(spec["start"]), int(spec["stop"]) + 1, int(spec.get("step", 1))))
    else:
        raise ConfigError(f"cannot read tau_f from {spec!r}")
    if any(t < 1 for t in taus):
        raise ConfigError("tau_f values must be positive")
    return sorted(set(taus))


def load_config(path, recipe=None) -> ExperimentConfig:
    """Read a JSON or TOML document (by extension) into an ExperimentConfig."""
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        if path.endswith(".toml"):
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            doc = tomllib.loads(raw.decode("utf-8"))
        else:
            doc = json.loads(raw.decode("utf-8"))
    except ValueError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(doc, Mapping):
        raise ConfigError("config must be a table/object")
    return ExperimentConfig.from_mapping(doc, recipe, base_dir=os.path.dirname(os.path.abspath(path)))


# --------------------------------------------------------------------------
# results


@dataclass
class Table:
    name: str
    header: list[str]
    rows: list[list]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class SweepResult:
    """Per-horizon rows (sorted by ``tau_f``) plus spectrum metadata."""

    rows: list[dict]
    metadata: dict

    COLUMNS = (
        "tau_f", "E_exact_upper", "E_exact_lower", "E_est_upper", "E_est_lower",
        "log10_E_exact_upper", "log10_E_exact_lower", "log10_E_est_upper", "log10_E_est_lower",
        "regime_lower", "regime_upper", "exact_available", "overflow",
    )

    def table(self, name: str = "bound_sweep") -> Table:
        return Table(name, list(self.COLUMNS), [[r.get(c) for c in self.COLUMNS] for r in self.rows])

    def column(self, key: str) -> np.ndarray:
        return np.array([np.nan if r.get(key) is None else r[key] for r in self.rows], dtype=float)


@dataclass
class RecipeOutput:
    tables: list[Table]
    summary: dict


def write_outputs(out: RecipeOutput, out_dir) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for t in out.tables:
        path = os.path.join(out_dir, f"{t.name}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(t.to_csv())
        written.append(path)
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(out.summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


# --------------------------------------------------------------------------
# sphere distribution


def _sphere_samples(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    Y = rng.standard_normal((count, dim))
    return Y / np.linalg.norm(Y, axis=1, keepdims=True)


def _target_gramian(cfg: ExperimentConfig) -> tuple[np.ndarray, dict]:
    if cfg.gramian is not None and cfg.network is None:
        W = np.asarray(cfg.gramian, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or not np.allclose(W, W.T):
            raise ConfigError("gramian must be a symmetric square matrix")
        return 0.5 * (W + W.T), {"source": "gramian"}
    from .gramian import gramian_target

    net, meta = cfg.build_network()
    B = _drivers(cfg, net)
    tgt = _targets(cfg, net, B)
    if len(cfg.tau_f) != 1:
        raise ConfigError("sphere recipe needs exactly one tau_f when built from a network")
    bundle = gramian_target(net.adjacency, B, tgt, cfg.tau_f[0])
    return bundle.W_C, meta


def run_sphere_distribution(cfg: ExperimentConfig) -> RecipeOutput:
    """Energy over uniformly sampled unit target states.

    Emits a 10-bin histogram over ``[min E, max E]``, the shares of the
    energy ratio ``rho = E / E_max`` (``E_max = 1/lambda_min``) per quartile,
    the energies along the eigen-axes and, for three targets, the cloud of
    directions scaled by ``ln E``.
    """
    W, meta = _target_gramian(cfg)
    k = W.shape[0]
    mu, V = np.linalg.eigh(W)
    if mu[0] <= 0:
        raise NotControllableError("target Gramian is not positive definite")
    Y = _sphere_samples(cfg.streams()["sampling"], cfg.samples, k)
    # E = y^T W^-1 y, evaluated in the eigenbasis.
    Z = Y @ V
    E = (Z * Z) @ (1.0 / mu)
    E_max = 1.0 / mu[0]
    # Rounding can push rho a few ulps past 1 when W_C is isotropic.
    rho = np.clip(E / E_max, 0.0, 1.0)
    lo, hi = float(E.min()), float(E.max())
    if hi - lo <= 1e-12 * hi:
        pad = 1e-9 * hi
        lo, hi = lo - pad, hi + pad
    counts, edges = np.histogram(E, bins=10, range=(lo, hi))
    qe = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    shares = [float(np.mean((rho > lo) & (rho <= hi))) for lo, hi in zip(qe[:-1], qe[1:])]
    axis = [float(V[:, i] @ np.linalg.solve(W, V[:, i])) for i in range(k)]
    tables = [
        Table("sphere_histogram", ["bin_lo", "bin_hi", "count"],
              [[float(a), float(b), int(c)] for a, b, c in zip(edges[:-1], edges[1:], counts)]),
        Table("sphere_quartiles", ["rho_lo", "rho_hi", "share"],
              [[float(a), float(b), s] for a, b, s in zip(qe[:-1], qe[1:], shares)]),
    ]
    summary = {
        "recipe": cfg.recipe.value, "seed": cfg.seed, "network": meta, "dim": k,
        "samples": cfg.samples, "gramian_eigenvalues": mu.tolist(),
        "condition_number": float(mu[-1] / mu[0]),
        "axis_energies": axis, "inverse_eigenvalues": (1.0 / mu).tolist(),
        "quartile_shares": shares, "top_quartile_share": shares[-1],
    }
    if k == 3:
        cloud = Y * np.log(E)[:, None]
        tables.append(Table("sphere_cloud", ["x", "y", "z", "E"],
                            [[*map(float, c), float(e)] for c, e in zip(cloud, E)]))
    else:
        summary["notice"] = f"direction cloud needs 3 targets, got {k}; histogram only"
        if cfg.gramian is None:
            raise RecipeError(f"point cloud is defined for r = 3 only (got {k})")
    return RecipeOutput(tables, summary)


# --------------------------------------------------------------------------
# decomposition demo


def _drivers(cfg: ExperimentConfig, net: Network, which: str = "drivers") -> np.ndarray:
    spec = getattr(cfg, which)
    if spec is None:
        raise ConfigError(f"{which} missing")
    if spec == "auto":
        return DriverSet([_auto_driver(net)]).input_matrix(net.n)
    try:
        return DriverSet(spec).input_matrix(net.n)
    except ValueError as exc:
        raise ConfigError(f"{which}: {exc}") from None


def _auto_driver(net: Network) -> int:
    """First node of the largest connected component (1-based)."""
    off = (net.adjacency != 0) & ~np.eye(net.n, dtype=bool)
    _, lab = connected_components(off, directed=False)
    big = int(np.argmax(np.bincount(lab)))
    return int(np.flatnonzero(lab == big)[0]) + 1


def _targets(cfg: ExperimentConfig, net: Network, B: np.ndarray, spec="__cfg__"):
    spec = cfg.targets if spec == "__cfg__" else spec
    if spec is None:
        return None
    if spec == "controllable":
        return list(_controllable_nodes(net.adjacency, B))
    return list(spec)


def _controllable_nodes(A, B) -> tuple[int, ...]:
    """Nodes whose indicator vector lies in the controllable subspace."""
    if numerical_rank(A) == A.shape[0]:
        return decompose_permutation(A, B).controllable
    V = decompose_gram_schmidt(A, B).basis
    resid = 1.0 - np.sum(V**2, axis=1)
    return tuple(int(i) + 1 for i in np.flatnonzero(resid <= 1e-5))


def run_decomposition_demo(cfg: ExperimentConfig) -> RecipeOutput:
    """Controllable decomposition plus random-input rollouts from the origin.

    Every reachable state is orthogonal to the uncontrollable directions
    (the last ``n - r`` rows of ``R``); the rollouts measure how far the
    simulated states stray from that.
    """
    net, meta = cfg.build_network()
    A = np.asarray(net.adjacency)
    B = _drivers(cfg, net)
    dec = decompose_gram_schmidt(A, B)
    report = json.loads(decomposition_report(dec, A))
    summary = {"recipe": cfg.recipe.value, "seed": cfg.seed, "network": meta,
               "n": net.n, "rank": dec.rank, "decomposition": report}
    tables = [Table("decomposition_R", [f"c{j + 1}" for j in range(net.n)], dec.R.tolist())]
    if dec.rank == net.n:
        summary["notice"] = "system is fully controllable; no uncontrollable constraints to check"
        return RecipeOutput(tables, summary)
    rng = cfg.streams()["rollouts"]
    N = dec.R[dec.rank:]
    rows = []
    worst = 0.0
    for k in range(cfg.rollouts):
        U = rng.standard_normal((cfg.rollout_steps, B.shape[1]))
        X = simulate(A, B, U, np.zeros(net.n))
        scale = max(1.0, float(np.max(np.abs(X))))
        viol = float(np.max(np.abs(X @ N.T))) / scale
        worst = max(worst, viol)
        rows.append([k, viol, float(np.max(np.abs(X[-1])))])
    tables.append(Table("rollout_constraints", ["rollout", "max_violation", "max_abs_state"], rows))
    summary["uncontrollable_directions"] = N.tolist()
    summary["max_constraint_violation"] = worst
    summary["rollouts"] = cfg.rollouts
    return RecipeOutput(tables, summary)


# --------------------------------------------------------------------------
# bound sweep


def fit_regime_slope(taus, log10_E, regime) -> dict:
    """Fit the scaling law of one bound curve.

    PowerLaw: slope of ``ln E`` against ``tau_f`` (expected ``-2 ln|lambda|``).
    InverseTime: slope of ``ln E`` against ``ln tau_f`` (expected ``-1``).
    Constant: relative spread of ``E`` over the last decade of horizons.
    """
    t = np.asarray(taus, dtype=float)
    y = np.asarray(log10_E, dtype=float) * math.log(10.0)
    ok = np.isfinite(y)
    t, y = t[ok], y[ok]
    if t.size < 2:
        return {"kind": str(regime), "fitted": None, "expected": None}
    if regime.kind is RegimeKind.POWER_LAW:
        slope = float(np.polyfit(t, y, 1)[0])
        return {"kind": str(regime), "fitted": slope, "expected": -2.0 * math.log(regime.base)}
    if regime.kind is RegimeKind.INVERSE_TIME:
        slope = float(np.polyfit(np.log(t), y, 1)[0])
        return {"kind": str(regime), "fitted": slope, "expected": -1.0}
    last = t >= t.max() / 10.0
    E = np.exp(y[last] - y[last].max())
    spread = float((E.max() - E.min()) / E.max())
    return {"kind": str(regime), "fitted": spread, "expected": 0.0}


def sweep_bounds(A, B, targets, taus, exact_max_tau: int = 60) -> SweepResult:
    """Exact extremes of ``W_C`` (extended precision) and the estimates per horizon."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    dec = decompose_gram_schmidt(A, B)
    ests = [estimate_bounds(A, B, targets, int(t), decomposition=dec) for t in taus]
    exact_taus = [t for t in taus if t <= exact_max_tau]
    exact = {}
    if exact_taus:
        feasible = [t for t in exact_taus if _reaches(A, B, targets, t)]
        try:
            res = exact_extreme_eigenvalues(A, B, targets, feasible) if feasible else []
        except NotControllableError:
            res = []
            feasible = []
        exact = dict(zip(feasible, res))
    rows = []
    for t, est in zip(taus, ests):
        row = {"tau_f": int(t)}
        ex = exact.get(t)
        if ex is not None and math.isfinite(ex[0]):
            row.update(
                log10_E_exact_upper=-ex[0], log10_E_exact_lower=-ex[1],
                E_exact_upper=_pow10(-ex[0]), E_exact_lower=_pow10(-ex[1]), exact_available=True,
            )
        else:
            row["exact_available"] = False
        row.update(
            log10_E_est_upper=est.log10_E_upper, log10_E_est_lower=est.log10_E_lower,
            E_est_upper=est.E_upper, E_est_lower=est.E_lower,
            regime_lower=str(est.regime_lower), regime_upper=str(est.regime_upper),
        )
        row["overflow"] = any(
            k in row and (not math.isfinite(row[k]) or row[k] == 0.0)
            for k in ("E_exact_upper", "E_exact_lower", "E_est_upper", "E_est_lower")
        )
        rows.append(row)
    lam = np.linalg.eigvalsh(dec.A_c)
    meta = {
        "n": n, "r": dec.rank, "m": B.shape[1],
        "spectrum_c": sorted(lam.tolist()),
        "abs_lambda_c1": float(np.min(np.abs(lam))), "abs_lambda_cr": float(np.max(np.abs(lam))),
        "regime_lower": str(classify_regime(lam, "lower")),
        "regime_upper": str(classify_regime(lam, "upper")),
    }
    return SweepResult(rows, meta)


def _pow10(x: float) -> float:
    if x > 308:
        return math.inf
    if x < -323:
        return 0.0
    return 10.0**x


def _sweep_summary(sweep: SweepResult, taus, lam) -> dict:
    rl = classify_regime(lam, "lower")
    ru = classify_regime(lam, "upper")
    out = {
        "fit_upper_estimate": fit_regime_slope(taus, sweep.column("log10_E_est_upper"), ru),
        "fit_lower_estimate": fit_regime_slope(taus, sweep.column("log10_E_est_lower"), rl),
    }
    have = [i for i, r in enumerate(sweep.rows) if r["exact_available"]]
    if len(have) >= 2:
        tt = [taus[i] for i in have]
        out["fit_upper_exact"] = fit_regime_slope(tt, sweep.column("log10_E_exact_upper")[have], ru)
        out["fit_lower_exact"] = fit_regime_slope(tt, sweep.column("log10_E_exact_lower")[have], rl)
    return out


def run_bound_sweep(cfg: ExperimentConfig) -> RecipeOutput:
    net, meta = cfg.build_network()
    A = np.asarray(net.adjacency)
    B = _drivers(cfg, net)
    tgt = _targets(cfg, net, B)
    sweep = sweep_bounds(A, B, tgt, cfg.tau_f, cfg.exact_max_tau)
    lam = np.asarray(sweep.metadata["spectrum_c"])
    summary = {
        "recipe": cfg.recipe.value, "seed": cfg.seed, "network": meta,
        "drivers": [int(i) + 1 for i in np.flatnonzero(np.any(B != 0, axis=1))],
        "targets": tgt, **sweep.metadata, **_sweep_summary(sweep, cfg.tau_f, lam),
    }
    return RecipeOutput([sweep.table()], summary)


# --------------------------------------------------------------------------
# driver comparison


def run_driver_comparison(cfg: ExperimentConfig) -> RecipeOutput:
    """Upper-bound curves for two driver sets, each steering its controllable nodes."""
    if cfg.drivers_alt is None:
        raise ConfigError("driver comparison needs drivers_alt")
    net, meta = cfg.build_network()
    A = np.asarray(net.adjacency)
    tables = []
    summary = {"recipe": cfg.recipe.value, "seed": cfg.seed, "network": meta, "choices": {}}
    for label, which in (("A", "drivers"), ("B", "drivers_alt")):
        B = _drivers(cfg, net, which)
        nodes = list(_controllable_nodes(A, B))
        sweep = sweep_bounds(A, B, nodes, cfg.tau_f, cfg.exact_max_tau)
        lam = np.asarray(sweep.metadata["spectrum_c"])
        ru = classify_regime(lam, "upper")
        rank_oracle = numerical_rank(controllability_matrix(A, B))
        fit = _sweep_summary(sweep, cfg.tau_f, lam)
        summary["choices"][label] = {
            "drivers": list(getattr(cfg, which)),
            "controllable_nodes": nodes,
            "rank": sweep.metadata["r"],
            "rank_oracle": rank_oracle,
            "abs_lambda_c1": sweep.metadata["abs_lambda_c1"],
            "abs_lambda_cr": sweep.metadata["abs_lambda_cr"],
            "upper_regime": str(ru),
            "upper_behaviour": "constant" if ru.kind is RegimeKind.CONSTANT else "decaying",
            **fit,
        }
        tables.append(sweep.table(f"driver_choice_{label}"))
    return RecipeOutput(tables, summary)


# --------------------------------------------------------------------------
# target versus full control


def run_target_vs_full(cfg: ExperimentConfig) -> RecipeOutput:
    """Worst-case energy ``1/lambda_min`` of target control against full control.

    Target control uses ``drivers`` and steers ``targets``; full control uses
    ``drivers_full`` and steers every node. The crossover is the first
    horizon after which target control stays cheaper.
    """
    if cfg.drivers_full is None:
        raise ConfigError("target-vs-full needs drivers_full")
    net, meta = cfg.build_network()
    A = np.asarray(net.adjacency)
    Bt = _drivers(cfg, net)
    Bf = _drivers(cfg, net, "drivers_full")
    tgt = _targets(cfg, net, Bt)
    if numerical_rank(controllability_matrix(A, Bf)) < net.n:
        raise ConfigError("drivers_full do not make the network fully controllable")
    feasible = [t for t in cfg.tau_f if _reaches(A, Bt, tgt, t) and _reaches(A, Bf, None, t)]
    if not feasible:
        raise ConfigError("no tau_f in range is feasible for both driver sets")
    et = exact_extreme_eigenvalues(A, Bt, tgt, feasible)
    ef = exact_extreme_eigenvalues(A, Bf, None, feasible)
    rows = []
    for t, a, b in zip(feasible, et, ef):
        lt, lf = -a[0], -b[0]
        rows.append([t, _pow10(lt), _pow10(lf), lt, lf, lt - lf])
    diff = np.array([r[5] for r in rows])
    crossover = None
    for i in range(len(rows)):
        if np.all(diff[i:] < 0):
            crossover = rows[i][0]
            break
    after = diff[[r[0] >= crossover for r in rows]] if crossover is not None else np.array([])
    summary = {
        "recipe": cfg.recipe.value, "seed": cfg.seed, "network": meta,
        "m_target": Bt.shape[1], "m_full": Bf.shape[1], "targets": tgt,
        "smallest_feasible_tau_f": feasible[0],
        "full_cheaper_at_start": bool(diff[0] >= 0),
        "crossover_tau_f": crossover,
        "ratio_monotone_after_crossover": bool(np.all(np.diff(after) < 0)) if after.size else None,
    }
    header = ["tau_f", "E_target", "E_full", "log10_E_target", "log10_E_full", "log10_ratio"]
    return RecipeOutput([Table("target_vs_full", header, rows)], summary)


def _reaches(A, B, targets, tau_f) -> bool:
    V = controllable_basis(A, B, max_steps=tau_f)
    idx = np.arange(A.shape[0]) if targets is None else np.asarray(targets) - 1
    return V.shape[1] >= idx.size and numerical_rank(V[idx]) == idx.size


# --------------------------------------------------------------------------

_RUNNERS = {
    Recipe.SphereDistribution: run_sphere_distribution,
    Recipe.DecompositionDemo: run_decomposition_demo,
    Recipe.BoundSweep: run_bound_sweep,
    Recipe.DriverComparison: run_driver_comparison,
    Recipe.TargetVsFull: run_target_vs_full,
}


def run_recipe(cfg: ExperimentConfig) -> RecipeOutput:
    t0 = time.perf_counter()
    out = _RUNNERS[cfg.recipe](cfg)
    out.summary["runtime_s"] = round(time.perf_counter() - t0, 3)
    return out
