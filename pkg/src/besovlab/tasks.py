"""Run manifests: validation and dispatch of individual tasks to reports.

A manifest is a mapping with ``tasks`` (a list), an optional ``seed`` and an
optional ``precision``.  Every task record has a ``kind``, an optional
``output`` stem, optional ``params`` and an optional ``expect_negative``
flag.  Tasks that read a weight carry ``weight: {kind, params, dim}``.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .besov import (BesovSpace, GradedSeries, GradedSpace, index_shift_equivalence_check,
                    kernel_coeffs, kernel_diag, kernel_growth_check, kernel_table)
from .classify import (bekolle_b2_profile, classify, construct_pairing_measure,
                       doubling_check, doubling_equivalence_check, exp_example_check,
                       vx_doubling_asymptotic_check, weakly_normal_check, weakly_normal_order,
                       weakly_normal_shift_check)
from .measures import DiscreteMeasure
from .pick import PowerSeriesKernel, binomial_space, kaluza_coeffs, log_convexity_check, pick_test
from .reports import Report, verdict
from .shift import (hat_relation_check, moment_shift_asymptotic, pointwise_bound_check,
                    semigroup_check, shift_log_on_grid)
from .triangular import (column_row_norms, derivative_multiplier_report,
                         inclusion_contractivity_check, kacnelson_suite, mult_norm_section,
                         rectangular_inclusion_check)
from .weights import DomainError, RadialWeight, moment_sequence, weight_from_config

KINDS = ("moments", "shift", "kernel", "classify", "pick", "kacnelson", "multnorm", "colrow",
         "derivative-report")
PRECISIONS = ("double", "extended")
WEIGHT_KINDS = ("power", "powerlog", "expcusp", "tabulated", "sum", "scaled")


class ManifestError(ValueError):
    """Validation failure at a field path such as ``tasks[2].weight.kind``."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class TaskError(RuntimeError):
    def __init__(self, task, cause):
        super().__init__(f"task {task!r} failed: {type(cause).__name__}: {cause}")
        self.task = task


@dataclass
class Task:
    index: int
    kind: str
    output: str
    params: Dict[str, Any]
    weight: Optional[dict] = None
    expect_negative: bool = False


@dataclass
class Manifest:
    tasks: List[Task]
    seed: int = 0
    precision: str = "double"
    source: dict = field(default_factory=dict, repr=False)


# ------------------------------------------------------------- validation


def _need_mapping(obj, path):
    if not isinstance(obj, dict):
        raise ManifestError(path, f"expected a mapping, got {type(obj).__name__}")
    return obj


def _validate_weight(cfg, path):
    _need_mapping(cfg, path)
    if "kind" not in cfg:
        raise ManifestError(f"{path}.kind", "missing")
    kind = str(cfg["kind"]).replace("_", "").replace("-", "").lower()
    if kind not in WEIGHT_KINDS:
        raise ManifestError(f"{path}.kind", f"unknown weight {cfg['kind']!r}")
    if "params" in cfg and cfg["params"] is not None:
        _need_mapping(cfg["params"], f"{path}.params")
    dim = cfg.get("dim", 1)
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ManifestError(f"{path}.dim", "must be a positive integer")
    try:
        weight_from_config(cfg)
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{path}.params", str(exc)) from None


def _validate_space(cfg, path):
    _need_mapping(cfg, path)
    typ = cfg.get("type", "besov")
    if typ not in ("besov", "hardy", "drury_arveson", "binomial"):
        raise ManifestError(f"{path}.type", f"unknown space type {typ!r}")
    if typ == "besov":
        if "weight" not in cfg:
            raise ManifestError(f"{path}.weight", "missing")
        _validate_weight(cfg["weight"], f"{path}.weight")
        if not isinstance(cfg.get("s", 0.0), (int, float)):
            raise ManifestError(f"{path}.s", "must be a number")
    if typ == "binomial" and not isinstance(cfg.get("gamma"), (int, float)):
        raise ManifestError(f"{path}.gamma", "must be a number")


_NEEDS_WEIGHT = {"moments", "shift", "kernel", "derivative-report"}


def validate_manifest(doc) -> Manifest:
    doc = _need_mapping(doc, "manifest")
    unknown = set(doc) - {"tasks", "seed", "precision"}
    if unknown:
        raise ManifestError(f"manifest.{sorted(unknown)[0]}", "unknown field")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ManifestError("seed", "must be an integer")
    precision = doc.get("precision", "double")
    if precision not in PRECISIONS:
        raise ManifestError("precision", f"must be one of {PRECISIONS}")
    raw = doc.get("tasks")
    if not isinstance(raw, list) or not raw:
        raise ManifestError("tasks", "must be a nonempty list")
    tasks, outputs = [], {}
    for i, rec in enumerate(raw):
        path = f"tasks[{i}]"
        _need_mapping(rec, path)
        extra = set(rec) - {"kind", "output", "params", "weight", "expect_negative"}
        if extra:
            raise ManifestError(f"{path}.{sorted(extra)[0]}", "unknown field")
        kind = rec.get("kind")
        if kind not in KINDS:
            raise ManifestError(f"{path}.kind", f"must be one of {', '.join(KINDS)}")
        params = rec.get("params") or {}
        _need_mapping(params, f"{path}.params")
        weight = rec.get("weight")
        if weight is not None:
            _validate_weight(weight, f"{path}.weight")
        elif kind in _NEEDS_WEIGHT or (kind == "classify" and params.get("check") != "exp_example"):
            raise ManifestError(f"{path}.weight", "missing")
        for key in ("space", "domain", "codomain"):
            if key in params:
                _validate_space(params[key], f"{path}.params.{key}")
        output = rec.get("output", f"{i:02d}_{kind}")
        if not isinstance(output, str) or not output or output.startswith("/") or ".." in output:
            raise ManifestError(f"{path}.output", "must be a relative path stem")
        if output in outputs:
            raise ManifestError(f"{path}.output", f"duplicates tasks[{outputs[output]}].output")
        outputs[output] = i
        neg = rec.get("expect_negative", False)
        if not isinstance(neg, bool):
            raise ManifestError(f"{path}.expect_negative", "must be true or false")
        check = params.get("check")
        if check is not None and check not in _CHECKS.get(kind, ()):
            raise ManifestError(f"{path}.params.check",
                                f"must be one of {', '.join(_CHECKS.get(kind, ()))}")
        tasks.append(Task(i, kind, output, dict(params), weight, neg))
    return Manifest(tasks, seed, precision, doc)


# ------------------------------------------------------------ parameters


def _coeff(c):
    if isinstance(c, (list, tuple)):
        return complex(float(c[0]), float(c[1]))
    if isinstance(c, str):
        return complex(c.replace(" ", ""))
    return complex(c)


def symbol_from_config(cfg, dim=None) -> GradedSeries:
    """A list of coefficients (d = 1) or ``{dim, terms: [[index, coeff], ...]}``."""
    if isinstance(cfg, dict):
        d = int(cfg.get("dim", dim or 1))
        return GradedSeries({tuple(int(k) for k in idx): _coeff(c) for idx, c in cfg["terms"]}, d)
    series = GradedSeries.from_1d([_coeff(c) for c in cfg])
    if dim not in (None, 1):
        raise DomainError("coefficient lists describe one-variable symbols")
    return series


def space_from_config(cfg, cap) -> GradedSpace:
    typ = cfg.get("type", "besov")
    dim = int(cfg.get("dim", cfg.get("weight", {}).get("dim", 1)))
    if typ == "hardy":
        return GradedSpace.hardy(cap, dim)
    if typ == "drury_arveson":
        return GradedSpace.drury_arveson(cap, dim)
    if typ == "binomial":
        return binomial_space(float(cfg["gamma"]), cap, dim)
    return BesovSpace(weight_from_config(cfg["weight"]), float(cfg.get("s", 0.0)), cap)


def _grid(cfg, default_points=64):
    if cfg is None:
        cfg = {}
    if isinstance(cfg, list):
        return np.asarray(cfg, dtype=float)
    n = int(cfg.get("points", default_points))
    lo, hi = float(cfg.get("t_min", 0.0)), float(cfg.get("t_max", 0.99))
    return np.linspace(lo, hi, n)


def _pick(params, names):
    return {k: params[k] for k in names if k in params}


# ---------------------------------------------------------------- handlers


def _moments(task, ctx):
    w = weight_from_config(task.weight).to_line_density()
    seq = moment_sequence(w, int(task.params.get("N", 16)), task.params.get("method", "auto"))
    problems = seq.check_invariants()
    rows = [(r["n"], r["a_n"], r["log_a_n"], r["source"]) for r in seq.rows()]
    return Report("moments", verdict(not problems), ("n", "a_n", "log_a_n", "source"), rows,
                  {"N": len(rows) - 1, "problems": "; ".join(problems) or "none"})


def _shift(task, ctx):
    p = task.params
    v = weight_from_config(task.weight).to_line_density()
    check = p.get("check", "values")
    x = float(p.get("x", 1.0))
    t = _grid(p.get("grid"))
    if check == "values":
        lv = shift_log_on_grid(v, x, t)
        ok = bool(np.all(np.isfinite(lv)))
        return Report("shift", verdict(ok), ("t", "v_x"), list(zip(t, np.exp(lv))), {"x": x})
    if check == "semigroup":
        return semigroup_check(v, x, float(p.get("y", 1.0)), t, float(p.get("tol", 1e-6)))
    if check == "hat":
        return hat_relation_check(v, x, t, float(p.get("tol", 1e-8)))
    if check == "pointwise":
        return pointwise_bound_check(v, x, float(p.get("alpha", 1.0)), t, float(p.get("slack", 1e-9)))
    return moment_shift_asymptotic(v, x, p.get("n_list", [128, 256, 512, 1024]),
                                   float(p.get("tol", 0.05)), p.get("method", "identity"))


def _kernel(task, ctx):
    p = task.params
    w = weight_from_config(task.weight)
    s = float(p.get("s", 0.0))
    N = int(p.get("N", 64))
    space = BesovSpace(w, s, N)
    check = p.get("check", "table")
    if check == "table":
        return kernel_table(space)
    radii = _grid(p.get("radii"), 32) if "radii" in p else np.linspace(0.0, 0.9, 10)
    if check == "diag":
        return kernel_diag(space, radii)
    if check == "equivalence":
        return index_shift_equivalence_check(space, float(p.get("x", 1.0)),
                                             p.get("n_list", [16, 32, 64]), float(p.get("band", 10.0)))
    t = float(p.get("t", s - 0.5))
    return kernel_growth_check(space, space.with_s(t), s, t, radii)


def _classify(task, ctx):
    p = dict(task.params)
    check = p.pop("check", "classify")
    if check == "exp_example":
        return exp_example_check(**_pick(p, ("beta", "t0", "band", "band_t0", "slack")))
    v = weight_from_config(task.weight).to_line_density()
    if check == "doubling":
        return doubling_check(v, **_pick(p, ("t0", "y_max", "per_decade", "threshold")))
    if check == "doubling_equivalence":
        return doubling_equivalence_check(v, **_pick(p, ("t0", "y_max", "per_decade")))
    if check == "vx_doubling":
        return vx_doubling_asymptotic_check(v, float(p.get("x", 1.0)), **_pick(p, ("t0",)))
    if check == "weakly_normal":
        return weakly_normal_check(v, float(p["alpha"]), float(p.get("x", 0.0)), **_pick(p, ("t0",)))
    if check == "weakly_normal_shift":
        return weakly_normal_shift_check(v, float(p["alpha"]), float(p["x"]), float(p["y"]))
    if check == "order":
        rep = weakly_normal_order(v, **_pick(p, ("t0",)))
        expected = p.get("expected_order")
        if expected is not None:
            got = rep.summary.get("order")
            ok = got is not None and abs(float(got) - float(expected)) <= 1e-9 if expected != "none" \
                else got is None
            rep.verdict = verdict(ok)
        return rep
    if check == "b2":
        return bekolle_b2_profile(v, float(p.get("eta", 0.0)), **_pick(p, ("t0",)))
    if check == "pairing":
        _, rep = construct_pairing_measure(v, float(p.get("alpha", 0.0)), float(p.get("x", 1.0)),
                                           **_pick(p, ("t0", "N", "lift")))
        return rep
    cls = classify(v)
    rows = [(a, x, c) for a, x, c in cls.weakly_normal_candidates]
    summary = {"doubling_constant": cls.doubling_constant, "doubling": cls.doubling_verdict,
               "order": "none" if cls.order is None else cls.order}
    summary.update({f"b2_eta_{eta}": val for eta, val in cls.b2_profile.items()})
    return Report("classify", "PASS", ("alpha", "x", "C"), rows, summary)


def _pick_kernel(p, N):
    ker = p.get("kernel", {})
    if "gamma" in ker:
        return binomial_space(float(ker["gamma"]), N), None
    if "coeffs" in ker:
        return None, PowerSeriesKernel.from_coeffs(np.asarray(ker["coeffs"], dtype=float))
    if "atoms" in ker:
        mu = DiscreteMeasure([tuple(a) for a in ker["atoms"]])
        return None, PowerSeriesKernel.from_measure(mu, N)
    if "space" in p:
        return space_from_config(p["space"], N), None
    raise DomainError("pick task needs params.kernel (gamma, coeffs or atoms) or params.space")


def _pick_task(task, ctx):
    p = task.params
    N = int(p.get("N", 64))
    check = p.get("check", "kaluza")
    precision = p.get("precision", ctx["precision"])
    space, F = _pick_kernel(p, N)
    if check == "pick_test":
        if space is None:
            raise DomainError("pick_test needs a space")
        return pick_test(space, N, precision, int(p.get("equivalent_N", min(N, 256))))
    if F is None:
        F = PowerSeriesKernel.from_log(kernel_coeffs(space).log_b[:N + 1], "space")
    if check == "log_convexity":
        return log_convexity_check(F)
    return kaluza_coeffs(F, precision=precision).report()


def _kacnelson(task, ctx):
    p = task.params
    return kacnelson_suite(int(p.get("trials", 100)), p.get("levels", 1),
                           int(p.get("dim_max", 12)), int(p.get("seed", ctx["seed"])))


def _multnorm(task, ctx):
    p = task.params
    N = int(p.get("N", 16))
    check = p.get("check", "norm")
    seed = int(p.get("seed", ctx["seed"]))
    if check in ("inclusion", "rectangular"):
        w = weight_from_config(p.get("omega", task.weight))
        phi = symbol_from_config(p["symbol"], w.dim)
        s, t = float(p["s"]), float(p["t"])
        if check == "inclusion":
            return inclusion_contractivity_check(phi, w, s, t, N, seed)
        nu = weight_from_config(p["nu"]) if "nu" in p else w
        return rectangular_inclusion_check(phi, w, nu, s, t, float(p["s_prime"]),
                                           float(p["t_prime"]), N, seed)
    dom = p.get("domain") or p.get("space")
    if dom is None:
        raise DomainError("multnorm needs params.domain")
    dim = int(dom.get("dim", dom.get("weight", {}).get("dim", 1)))
    phi = symbol_from_config(p["symbol"], dim)
    cap = N + phi.degree
    H = space_from_config(dom, cap)
    K = space_from_config(p["codomain"], cap) if "codomain" in p else H
    norm = mult_norm_section(phi, H, K, N, seed)
    expected = p.get("expected")
    ok = True if expected is None else abs(norm - float(expected)) <= float(p.get("tol", 1e-9)) * max(1.0, abs(float(expected)))
    summary = {"N": N, "norm": norm}
    if expected is not None:
        summary["expected"] = float(expected)
    return Report("multnorm", verdict(ok), ("N", "norm"), [(N, norm)], summary)


def _colrow(task, ctx):
    p = task.params
    space = p["space"]
    dim = int(space.get("dim", space.get("weight", {}).get("dim", 1)))
    family = [symbol_from_config(s, dim) for s in p["family"]]
    N = int(p.get("N", 64))
    cap = N + max(f.degree for f in family)
    H = space_from_config(space, cap)
    return column_row_norms(family, H, H, N, int(p.get("seed", ctx["seed"])),
                            float(p.get("band", 10.0)))


def _derivative(task, ctx):
    p = task.params
    w = weight_from_config(task.weight)
    family = [symbol_from_config(s, w.dim) for s in p["family"]]
    return derivative_multiplier_report(family, w, float(p.get("s", 1.0)), float(p.get("t", 0.5)),
                                        int(p.get("n_levels", 2)), int(p.get("N", 16)),
                                        int(p.get("seed", ctx["seed"])))


HANDLERS: Dict[str, Callable] = {
    "moments": _moments, "shift": _shift, "kernel": _kernel, "classify": _classify,
    "pick": _pick_task, "kacnelson": _kacnelson, "multnorm": _multnorm, "colrow": _colrow,
    "derivative-report": _derivative,
}

_CHECKS = {
    "shift": ("values", "semigroup", "hat", "pointwise", "moment_asymptotic"),
    "kernel": ("table", "diag", "equivalence", "growth"),
    "classify": ("classify", "doubling", "doubling_equivalence", "vx_doubling", "weakly_normal",
                 "weakly_normal_shift", "order", "b2", "pairing", "exp_example"),
    "pick": ("kaluza", "log_convexity", "pick_test"),
    "multnorm": ("norm", "inclusion", "rectangular"),
}


def run_task(task: Task, seed=0, precision="double") -> Report:
    try:
        return HANDLERS[task.kind](task, {"seed": seed, "precision": precision})
    except Exception as exc:  # noqa: BLE001 - reported with the task name
        raise TaskError(task.output, exc) from exc


def task_ok(task: Task, report: Report) -> bool:
    """A task succeeds when its verdict matches the expectation."""
    return report.passed != task.expect_negative
