"""
Batch experiments: configuration, sweeps, CSV output and run manifests.

Every experiment kind turns an :class:`ExperimentConfig` into a list of CSV
rows, a dictionary of fitted constants and a list of violated inequalities.
:func:`run` writes the CSV next to a JSON manifest holding the full config,
so :func:`reproduce` can re-run it and compare values.
"""

from __future__ import annotations

import copy
import csv
import datetime as _dt
import hashlib
import json
import math
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import yaml

from . import __version__
from .entropy import (
    ProbabilityVector,
    DensityFunction,
    counterexample_min_rank,
    counterexample_renyi_entropy,
    density_entropy_bound,
    random_distribution,
    renyi_hierarchy_check,
    shannon_entropy,
    truncation_bounds_all,
)
from .gaussian.compression import (
    GaussianCapacityError,
    NormalFormError,
    decay_fit,
    gaussian_schmidt_normal_form,
    offdiagonal_norm_bound,
    theorem3_pipeline,
    xi_truncate,
)
from .gaussian.states import GaplessModelError, HarmonicModel, gaussian_overlap, ground_covariance, two_mode_squeezed_covariance
from .gaussian.symplectic import interlacing_check, perturbation_gap
from .lattice import Lattice, parse_region
from .spin_compression import (
    DENSE_REGION_MAX_SITES,
    PureState,
    RegionTooSmall,
    build_compression_unitary,
    commutator_identity,
    compress_and_recover,
    energy_check,
    plan_compression,
    schmidt_decompose,
    truncate_state,
)
from .spin_models import ITERATIVE_MAX_SITES, CapacityError, build_model, ground_state

__all__ = [
    "KINDS",
    "ConfigError",
    "ExperimentConfig",
    "RunManifest",
    "RunResult",
    "DEFAULT_TOLERANCES",
    "run",
    "execute",
    "validate",
    "reproduce",
    "write_csv",
    "read_csv",
]

KINDS = ("lemma-sweep", "spin-compress", "gauss-compress", "renyi-counterexample", "decay-fit", "density-lemma")

DEFAULT_TOLERANCES = {
    "margin": 1e-12,          # entropy-bound inequalities
    "fidelity": 1e-10,        # fidelity identities and comparisons
    "identity": 1e-9,         # <psi|P_M [H_A, P_M]|psi> = 0
    "interlacing": 1e-8,
    "reproduce": 1e-10,
}

DEFAULT_PARAMS = {
    "lemma-sweep": {"trials": 1000, "n_min": 2, "n_max": 100, "kinds": ["dirichlet", "heavy"]},
    "spin-compress": {"k": "from-state"},
    "gauss-compress": {},
    "renyi-counterexample": {"d": 2, "volumes": list(range(8, 25)), "k_boundary": [1, 2, 3, 4, 5, 6],
                             "alphas": [1.5, 2, 4, "inf"], "hierarchy_trials": 10000, "n_max": 1000},
    "decay-fit": {"ls": list(range(2, 13))},
    "density-lemma": {"resolution": 100000},
}

DEFAULT_MODELS = {
    "spin-compress": {"model": "tfim", "length": 12, "field": 2.0, "coupling": 1.0, "bc": "open"},
    "gauss-compress": {"lattice": "chain", "length": 200, "mass": 1.0, "kappa": 1.0, "bc": "open"},
    "decay-fit": {"lattice": "chain", "length": 100, "mass": 1.0, "kappa": 1.0, "bc": "open"},
}

DEFAULT_REGIONS = {"spin-compress": "0:6", "gauss-compress": "60:140", "decay-fit": "0:50"}


class ConfigError(ValueError):
    """Malformed or infeasible configuration."""


# --- configuration ----------------------------------------------------------------


def _normalize(v):
    """Plain YAML/JSON-compatible value."""
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_normalize(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_normalize(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _normalize(x) for k, x in v.items()}
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass
class ExperimentConfig:
    """One experiment: its kind, model, region, targets and seed.

    ``params`` holds kind-specific settings, ``tolerances`` overrides entries
    of :data:`DEFAULT_TOLERANCES`.  ``inject_violation`` falsifies the first
    checked inequality; it exists to test the failure path.
    """

    kind: str
    model: dict = field(default_factory=dict)
    region: object = None
    epsilons: list = field(default_factory=list)
    seed: int = 0
    output: str = "results.csv"
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    threads: int = 1
    inject_violation: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        self.model = {**DEFAULT_MODELS.get(self.kind, {}), **(self.model or {})}
        self.params = {**DEFAULT_PARAMS.get(self.kind, {}), **(self.params or {})}
        if self.region is None:
            self.region = DEFAULT_REGIONS.get(self.kind)
        if not self.epsilons:
            self.epsilons = {"spin-compress": [0.5, 0.2, 0.1], "gauss-compress": [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
                             "renyi-counterexample": [0.01, 0.1]}.get(self.kind, [])
        try:
            self.epsilons = [float(e) for e in self.epsilons]
            self.seed = int(self.seed)
            self.threads = max(1, int(self.threads))
            unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
            if unknown:
                raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
            self.tolerances = {**DEFAULT_TOLERANCES, **{k: float(v) for k, v in self.tolerances.items()}}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config value: {exc}") from exc
        self.model = _normalize(self.model)
        self.params = _normalize(self.params)
        self.region = _normalize(self.region)
        self.inject_violation = bool(self.inject_violation)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "kind" not in data:
            raise ConfigError("config needs a 'kind'")
        return cls(**copy.deepcopy(data))

    def to_dict(self) -> dict:
        return _normalize(asdict(self))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_yaml(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_yaml())

    def hash(self) -> str:
        """SHA-256 of the canonical config, ignoring output path and thread count."""
        d = self.to_dict()
        d.pop("output")
        d.pop("threads")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def updated(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(changes)
        return ExperimentConfig.from_dict(d)


@dataclass
class RunManifest:
    config: dict
    config_hash: str
    version: str
    timestamp: str
    tolerances: dict
    constants: dict
    violations: list
    csv: str
    n_rows: int
    extra: dict = field(default_factory=dict)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(_normalize(asdict(self)), indent=2, sort_keys=True, allow_nan=True))

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


@dataclass
class RunResult:
    rows: list
    constants: dict
    violations: list
    extra: dict = field(default_factory=dict)
    csv_path: Path | None = None
    manifest_path: Path | None = None

    @property
    def exit_code(self) -> int:
        return 1 if self.violations else 0


class _Checker:
    """Collects violated inequalities ``lhs <= rhs + tol``."""

    def __init__(self, inject: bool = False):
        self.violations: list[str] = []
        self._inject = inject

    def le(self, name: str, lhs: float, rhs: float, tol: float = 0.0) -> bool:
        if self._inject:
            # test hook: falsify the first bound
            rhs = lhs - 1.0 - abs(lhs)
            self._inject = False
        ok = bool(lhs <= rhs + tol)
        if not ok:
            self.violations.append(f"{name}: {lhs!r} > {rhs!r} (tol {tol:g})")
        return ok

    def true(self, name: str, cond: bool) -> bool:
        return self.le(name, 0.0 if cond else 1.0, 0.0)


def _map(fn: Callable, items, threads: int) -> list:
    """Ordered map, optionally on a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- experiment kinds -----------------------------------------------------------


def _lemma_sweep(cfg: ExperimentConfig, chk: _Checker):
    p = cfg.params
    n_min, n_max, trials = int(p["n_min"]), int(p["n_max"]), int(p["trials"])
    kinds = list(p["kinds"])
    tol = cfg.tolerances["margin"]

    def trial(i):
        rng = np.random.default_rng([cfg.seed, i])
        n = int(rng.integers(n_min, n_max + 1))
        kind = kinds[int(rng.integers(len(kinds)))]
        pv = ProbabilityVector(random_distribution(rng, n, kind), log_base=2, normalize=True)
        _, cov, tight, weak = truncation_bounds_all(pv)
        worst = float(min((cov - tight).min(), (tight - weak).min()))
        M = int(rng.integers(2, n + 1))
        j = M - 2
        row = {"trial": i, "generator": kind, "n": n, "M": M, "H": shannon_entropy(pv), "coverage": cov[j],
               "tight_bound": tight[j], "weak_bound": weak[j],
               "margin": min(cov[j] - tight[j], tight[j] - weak[j])}
        return row, worst

    out = _map(trial, range(trials), cfg.threads)
    rows = [r for r, _ in out]
    for r, worst in out:
        chk.le(f"coverage >= tight >= weak, trial {r['trial']}", -worst, 0.0, tol)
    worst = min(w for _, w in out) if out else float("nan")
    return rows, {"worst_margin": worst}, {}


def _spin_compress(cfg: ExperimentConfig, chk: _Checker):
    m = cfg.model
    H = build_model(m["model"], int(m["length"]), float(m.get("field", 0.0)), float(m.get("coupling", 1.0)),
                    m.get("bc", "open"))
    A = parse_region(H.lattice, cfg.region)
    gs = ground_state(H, seed=cfg.seed)
    state = PureState(gs.state, H.lattice, H.d)
    sd = schmidt_decompose(state, A)
    tol = cfg.tolerances
    export_dir = cfg.params.get("export_dir")

    def point(eps):
        plan = plan_compression(sd, eps, k=cfg.params.get("k", "from-state"))
        U = build_compression_unitary(sd, plan)
        psi_M, overlap = truncate_state(sd, plan.M)
        rec = compress_and_recover(state, plan, U)
        eta = 1.0 - overlap
        en = energy_check(state, psi_M, H, A, max(eps, eta), energy=gs.energy)
        comm = commutator_identity(sd, H, plan.M)
        if export_dir:
            from .io import export_state, export_unitary

            export_unitary(Path(export_dir) / f"unitary_eps{eps:g}", U)
            export_state(Path(export_dir) / f"psi_M_eps{eps:g}", psi_M)
        row = {"A_size": len(A), "boundary_size": len(A.boundary(1)), "S_A": sd.entropy, "k": plan.k,
               "epsilon": eps, "l": plan.l, "M": plan.M, "overlap": overlap, "recovery_fidelity": rec.fidelity,
               "thm2_lhs": en.lhs, "thm2_bound": en.thm2_bound, "eq16_bound": en.eq16_bound,
               "chi_fidelity": rec.chi_fidelity, "schmidt_weight": float(sd.weights[:plan.M].sum()),
               "commutator_identity": abs(comm), "unitarity_error": U.unitarity_error()}
        return row, plan, en

    out = _map(point, cfg.epsilons, cfg.threads)
    for row, plan, en in out:
        eps = row["epsilon"]
        tag = f"eps={eps:g}"
        chk.le(f"fidelity identity {tag}", abs(row["overlap"] - row["schmidt_weight"]), 0.0, tol["fidelity"])
        if plan.guarantee:
            chk.le(f"truncation overlap >= 1-eps {tag}", 1 - eps, row["overlap"], tol["fidelity"])
            chk.le(f"recovered state fidelity >= 1-eps {tag}", 1 - eps, row["chi_fidelity"], tol["fidelity"])
        chk.le(f"recovery channel {tag}", row["overlap"] ** 2, row["recovery_fidelity"], tol["fidelity"])
        chk.le(f"Theorem 2 {tag}", en.lhs, en.thm2_bound, tol["fidelity"])
        chk.le(f"energy bound (sum of term norms) {tag}", en.lhs, en.eq16_bound, tol["fidelity"])
        chk.le(f"commutator identity {tag}", row["commutator_identity"], 0.0, tol["identity"])
    rows = [r for r, _, _ in out]
    consts = {"E0": gs.energy, "gap": gs.gap, "S_A": sd.entropy, "k": rows[0]["k"] if rows else None,
              "h": out[0][2].h if out else None, "solver": gs.method}
    return rows, consts, {}


def _harmonic_model(m: dict) -> HarmonicModel:
    kind = m.get("lattice", "chain")
    mass, kappa, bc = float(m.get("mass", 1.0)), float(m.get("kappa", 1.0)), m.get("bc", "open")
    if kind == "chain":
        return HarmonicModel.chain(int(m["length"]), mass, kappa, bc)
    if kind == "grid":
        rows, cols = m["grid"] if "grid" in m else (m["rows"], m["cols"])
        return HarmonicModel.grid(int(rows), int(cols), mass, kappa, bc)
    raise ConfigError(f"unknown harmonic lattice {kind!r}")


def lemma4_expression_check(d: float = 2.0) -> dict:
    """Settle which closed form equals the overlap for one two-mode squeezed pair."""
    gamma = two_mode_squeezed_covariance(d)
    oracle = gaussian_overlap(gamma, np.eye(4))
    unsq = 2.0 / (d + 1.0)
    return {"d": d, "oracle": oracle, "unsquared": unsq, "squared": unsq**2,
            "unsquared_error": abs(oracle - unsq), "squared_error": abs(oracle - unsq**2),
            "matches": "unsquared" if abs(oracle - unsq) <= abs(oracle - unsq**2) else "squared"}


def _gauss_compress(cfg: ExperimentConfig, chk: _Checker):
    model = _harmonic_model(cfg.model)
    A = parse_region(model.lattice, cfg.region)
    gamma = ground_covariance(model)
    fit = decay_fit(gamma, A)
    if not fit.accepted:
        raise GaussianCapacityError(f"decay fit rejected: {fit.reason}")
    nf = gaussian_schmidt_normal_form(gamma, A)
    tol = cfg.tolerances

    def point(eps):
        return theorem3_pipeline(model, A, eps, gamma=gamma, fit=fit, nf=nf)

    reports = _map(point, cfg.epsilons, cfg.threads)
    rows = []
    for r in reports:
        tag = f"eps={r.epsilon:g}"
        chk.le(f"Gaussian compression fidelity >= 1-eps {tag}", 1 - r.epsilon, r.fidelity, tol["fidelity"])
        chk.le(f"Lemma 4 {tag}", r.lemma4_bound, r.fidelity, tol["fidelity"])
        chk.le(f"oracle fidelity = prod 2/(d+1) {tag}", abs(r.fidelity - r.fidelity_product), 0.0, 1e-8)
        chk.true(f"tail bound {tag}", r.tail_check)
        rows.append({**r.row(), "M_min": r.M_min, "l_min": r.l_min, "capped": int(r.capped),
                     "bulk_residual": r.bulk_residual})
    # spectral checks on the trimmed covariance at the widest cut used
    l_chk = max([r.l_used for r in reports] + [1])
    g_leq, trimmed = xi_truncate(gamma, A, l_chk)
    inter = interlacing_check(g_leq.matrix, trimmed.matrix, tol["interlacing"])
    chk.true("interlacing of the trimmed covariance", inter.passed)
    shift, bound = perturbation_gap(gamma.matrix, g_leq.matrix)
    chk.le("perturbation bound", shift, bound, 1e-12)
    lemma4 = lemma4_expression_check()
    consts = {"c1": fit.c1, "c2": fit.c2, "r_squared": fit.r_squared, "normal_form_residual": nf.residual,
              "n_pairs": nf.n_pairs}
    if reports:
        consts.update({"k1": reports[0].k1, "k5": reports[0].k5})
    if len(rows) >= 3:
        x = np.log(1 / np.array([r["epsilon"] for r in rows]))
        y = np.array([r["l_used"] for r in rows], dtype=float)
        consts["l_used_r_squared"] = float(np.corrcoef(x, y)[0, 1] ** 2) if y.std() > 0 else float("nan")
        consts["l_used_slope"] = float(np.polyfit(x, y, 1)[0])
    extra = {"lemma4_expression": lemma4, "interlacing_worst_margin": inter.worst_margin,
             "perturbation": {"shift": shift, "bound": bound, "l": l_chk}}
    return rows, consts, extra


def _renyi_counterexample(cfg: ExperimentConfig, chk: _Checker):
    p = cfg.params
    d = int(p["d"])
    alphas = [float(a) for a in p["alphas"]]
    tol = cfg.tolerances["margin"]
    rows = []
    for volume in p["volumes"]:
        for kb in p["k_boundary"]:
            for eps in cfg.epsilons:
                kb_f = float(kb)
                M = counterexample_min_rank(d, kb_f, 1, int(volume), eps)
                floor = d ** int(volume) * (1 - 2 * eps)
                applies = d ** (-kb_f) <= 0.5
                row = {"d": d, "volume": int(volume), "k_boundary": kb_f, "epsilon": eps, "min_rank": M,
                       "rank_floor": floor, "applies": int(applies)}
                if applies:
                    chk.le(f"min rank vol={volume} kb={kb} eps={eps}", floor, M, 0.0)
                for a in alphas:
                    h = counterexample_renyi_entropy(d, kb_f, 1, int(volume), a)
                    b = kb_f if math.isinf(a) else a / (a - 1) * kb_f
                    key = "inf" if math.isinf(a) else f"{a:g}"
                    row[f"H_{key}"] = h
                    row[f"bound_{key}"] = b
                    chk.le(f"Renyi bound alpha={key} vol={volume} kb={kb}", h, b, 1e-10)
                rows.append(row)
    trials = int(p["hierarchy_trials"])
    failures = 0
    for i in range(trials):
        rng = np.random.default_rng([cfg.seed, i])
        n = int(rng.integers(2, int(p["n_max"]) + 1))
        kind = ("dirichlet", "heavy", "geometric", "spiky")[i % 4]
        pv = ProbabilityVector(random_distribution(rng, n, kind), log_base=d, normalize=True)
        alpha = float(rng.uniform(1.0, 50.0)) + 1e-9
        if not renyi_hierarchy_check(pv, alpha):
            failures += 1
    chk.le("Renyi hierarchy failures", failures, 0, 0)
    return rows, {"hierarchy_trials": trials, "hierarchy_failures": failures}, {"margin_tol": tol}


def _decay_fit(cfg: ExperimentConfig, chk: _Checker):
    model = _harmonic_model(cfg.model)
    A = parse_region(model.lattice, cfg.region)
    gamma = ground_covariance(model)
    fit = decay_fit(gamma, A)
    rows = []
    ls = [int(l) for l in cfg.params["ls"]]
    norms = {}
    if fit.accepted:
        for l in ls:
            norms[l] = offdiagonal_norm_bound(gamma, A, l, fit.c1, fit.c2, shell_ls=ls)
            chk.le(f"off-diagonal norm l={l}", norms[l][0], norms[l][1], 1e-12)
    else:
        chk.true(f"decay fit accepted ({fit.reason})", False)
    for l, mx, use in zip(fit.distances, fit.maxima, fit.usable):
        l = int(l)
        actual, bound = norms.get(l, (float("nan"), float("nan")))
        rows.append({"l": l, "max_xi": mx, "envelope": float(fit.envelope(l)) if fit.accepted else float("nan"),
                     "usable": int(use), "offdiag_norm": actual, "offdiag_bound": bound})
    consts = {"c1": fit.c1, "c2": fit.c2, "r_squared": fit.r_squared, "intercept": fit.intercept,
              "accepted": fit.accepted}
    if len(norms) >= 2:
        xs = np.array(sorted(norms))
        consts["offdiag_slope"] = float(np.polyfit(xs, np.log([norms[l][0] for l in xs]), 1)[0])
    return rows, consts, {}


def _standard_normal(x):
    return np.exp(-0.5 * x[..., 0] ** 2) / math.sqrt(2 * math.pi)


def _exponential(x):
    return np.exp(-x[..., 0])


DENSITIES = {
    "normal": (_standard_normal, [-8.0], [8.0], [1.0, 2.0, 3.0]),
    "exponential": (_exponential, [0.0], [30.0], [2.0, 3.0, 5.0]),
}


def _density_lemma(cfg: ExperimentConfig, chk: _Checker):
    res = int(cfg.params["resolution"])
    rows = []
    for name, (fn, lo, hi, pts) in DENSITIES.items():
        f = DensityFunction(fn, lo, hi, res)
        for t in pts:
            delta = float(fn(np.array([[t]]))[0])
            b = density_entropy_bound(f, delta)
            rows.append({"density": name, "level_point": t, "delta": delta, "coverage": b.coverage,
                         "bound_tight": b.bound_tight, "bound_weak": b.bound_weak, "volume": b.volume,
                         "residual": b.normalization_residual, "defined": int(b.defined)})
            if b.defined:
                chk.le(f"{name} delta={delta:.4g} tight", b.bound_tight, b.coverage, cfg.tolerances["margin"])
                chk.le(f"{name} delta={delta:.4g} weak", b.bound_weak, b.bound_tight, cfg.tolerances["margin"])
            chk.le(f"{name} quadrature residual", b.normalization_residual, 1e-6)
    return rows, {}, {}


RUNNERS = {
    "lemma-sweep": _lemma_sweep,
    "spin-compress": _spin_compress,
    "gauss-compress": _gauss_compress,
    "renyi-counterexample": _renyi_counterexample,
    "decay-fit": _decay_fit,
    "density-lemma": _density_lemma,
}


# --- validation -------------------------------------------------------------------


def validate(cfg: ExperimentConfig) -> list[str]:
    """Static diagnostics; an empty list means the config can run."""
    diags: list[str] = []
    for e in cfg.epsilons:
        if not 0 < e < 1:
            diags.append(f"epsilon {e:g} outside (0, 1)")
    m = cfg.model
    lattice = None
    try:
        if cfg.kind == "spin-compress":
            n = int(m.get("length", 0))
            if m.get("model") not in ("tfim", "heisenberg"):
                diags.append(f"unknown spin model {m.get('model')!r}")
            if n > ITERATIVE_MAX_SITES:
                diags.append(f"capacity: {n} spins exceeds the maximum of {ITERATIVE_MAX_SITES} for exact ground states")
            elif n < 2:
                diags.append("spin chain needs at least 2 sites")
            else:
                lattice = Lattice.chain(n, m.get("bc", "open"))
        elif cfg.kind in ("gauss-compress", "decay-fit"):
            if float(m.get("mass", 1.0)) <= 0:
                diags.append(f"gapless model: mass {m.get('mass')} must be positive")
            if float(m.get("kappa", 1.0)) < 0:
                diags.append("negative coupling kappa")
            if not diags:
                try:
                    lattice = _harmonic_model(m).lattice
                except GaplessModelError as exc:
                    diags.append(f"gapless model: {exc}")
    except (KeyError, TypeError, ValueError) as exc:
        diags.append(f"invalid model specification: {exc}")
    if lattice is not None and cfg.region is not None:
        try:
            A = parse_region(lattice, cfg.region)
            if A.is_empty or A.is_full:
                diags.append("region must be a nonempty proper subset of the lattice")
            elif cfg.kind == "spin-compress" and len(A) > DENSE_REGION_MAX_SITES:
                diags.append(f"capacity: region of {len(A)} sites exceeds {DENSE_REGION_MAX_SITES} for dense unitaries")
        except ValueError as exc:
            diags.append(f"region: {exc}")
    p = cfg.params
    if cfg.kind == "lemma-sweep":
        if int(p["n_min"]) < 2 or int(p["n_max"]) < int(p["n_min"]):
            diags.append("need 2 <= n_min <= n_max")
        if int(p["trials"]) < 1:
            diags.append("trials must be positive")
    return diags


# --- running ------------------------------------------------------------------------


def execute(cfg: ExperimentConfig) -> RunResult:
    """Run without writing files."""
    diags = validate(cfg)
    if diags:
        raise ConfigError("; ".join(diags))
    chk = _Checker(cfg.inject_violation)
    try:
        rows, consts, extra = RUNNERS[cfg.kind](cfg, chk)
    except (CapacityError, RegionTooSmall, GaussianCapacityError, NormalFormError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunResult(rows, consts, chk.violations, extra)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path, rows: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = list(rows[0]) if rows else []
    for r in rows:
        for k in r:
            if k not in header:
                header.append(k)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r.get(k, "")) for k in header])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        data = list(csv.reader(fh))
    return (data[0], data[1:]) if data else ([], [])


def manifest_path_for(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".manifest.json")


def run(cfg: ExperimentConfig) -> RunResult:
    """Run, then write the CSV and its manifest."""
    res = execute(cfg)
    csv_path = Path(cfg.output)
    write_csv(csv_path, res.rows)
    man = RunManifest(
        config=cfg.to_dict(), config_hash=cfg.hash(), version=__version__,
        timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        tolerances=dict(cfg.tolerances), constants=res.constants, violations=res.violations,
        csv=str(csv_path.resolve()), n_rows=len(res.rows), extra=res.extra)
    mpath = manifest_path_for(csv_path)
    man.save(mpath)
    res.csv_path, res.manifest_path = csv_path, mpath
    return res


def _compare_cells(a: str, b: str, tol: float) -> bool:
    if a == b:
        return True
    try:
        x, y = float(a), float(b)
    except ValueError:
        return False
    if math.isnan(x) and math.isnan(y):
        return True
    return abs(x - y) <= tol * max(1.0, abs(x))


def reproduce(manifest_path, threads: int | None = None) -> list[str]:
    """Re-run a manifest's config and list every CSV cell that moved beyond tolerance."""
    man = RunManifest.load(manifest_path)
    cfg = ExperimentConfig.from_dict(man.config)
    if threads is not None:
        cfg = cfg.updated(threads=threads)
    if cfg.hash() != man.config_hash:
        return [f"config hash mismatch: {cfg.hash()} != {man.config_hash}"]
    tol = float(man.tolerances.get("reproduce", DEFAULT_TOLERANCES["reproduce"]))
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "rerun.csv"
        run(cfg.updated(output=str(out)))
        h_new, rows_new = read_csv(out)
    h_old, rows_old = read_csv(man.csv)
    problems = []
    if h_new != h_old:
        problems.append(f"header changed: {h_old} -> {h_new}")
    if len(rows_new) != len(rows_old):
        problems.append(f"row count changed: {len(rows_old)} -> {len(rows_new)}")
    for i, (ro, rn) in enumerate(zip(rows_old, rows_new)):
        for name, a, b in zip(h_old, ro, rn):
            if not _compare_cells(a, b, tol):
                problems.append(f"row {i} column {name}: {a} -> {b}")
    return problems
