"""Study orchestration: configuration loading, the KAM smallness threshold,
and the end-to-end report bundle.

A study reads one JSON config, runs the requested sections (genericity,
covering, per-generator portraits / actions / twist, scaling, budget, the
operator expansion, and the KAM threshold), and writes CSV tables, JSON
documents, and SVG figures into the output directory.  Outputs carry no
timestamps and all floats print in shortest round-trip form, so a rerun with
the same seed reproduces the bundle bit-identically.  Every number in the
summary carries a provenance entry naming the producing operation and its
tolerance."""

from __future__ import annotations

import csv
import json
import math
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import actions as actions_mod
from . import figures, twist as twist_mod
from .logring import expand_operator, leading_constant, operator_order
from .measure import budget_shape, scaling_study, zone_fractions
from .portrait import decompose, standard_form, validate
from .potential import FourierPotential, check_genericity
from .resonance import CoveringParams, classify, enumerate_generators, transverse_form

__all__ = [
    "ConfigError",
    "StudyConfig",
    "KamThresholdInput",
    "KamThreshold",
    "kam_threshold",
    "StudyResult",
    "run_study",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """The study configuration is malformed or references missing files."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_SECTION_NAMES = ("genericity", "covering", "portraits", "actions", "twist",
                  "logring", "scaling", "budget", "kam")


@dataclass(frozen=True)
class StudyConfig:
    potential: FourierPotential
    delta: float = 1.0
    beta: float = 1e-5
    genericity_K: int = 10
    epsilons: tuple[float, ...] = (1e-5, 1e-6, 1e-7)
    K0: int = 4
    K: int = 24
    alpha_scale: float = 1.0
    ell_multiplier: float = 3.0
    mc_samples: int = 2_000_000
    seed: int = 20260808
    fit_zmin: float = 1e-3
    fit_zmax: float = 0.1
    fit_degree: int = 3
    fit_points: int = 48
    profile_points: int = 21
    twist_grid: int = 33
    max_generators: int = 4
    budget_c: float = 10.0
    budget_c2: float = 1.0
    budget_a: float = 0.5
    kam: dict | None = None
    sections: dict = field(default_factory=dict)
    figures: bool = True

    def section_enabled(self, name: str) -> bool:
        return bool(self.sections.get(name, True))

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path | None = None) -> "StudyConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        if "potential" not in doc:
            raise ConfigError("config is missing the 'potential' entry")
        potential = _load_potential(doc["potential"], base_dir or Path("."))
        kwargs: dict = {"potential": potential}
        cov = doc.get("covering", {})
        if not isinstance(cov, dict):
            raise ConfigError("'covering' must be an object")
        if "epsilons" in cov:
            eps = tuple(float(e) for e in cov["epsilons"])
            if not eps or any(e <= 0 for e in eps):
                raise ConfigError("covering.epsilons must be positive")
            kwargs["epsilons"] = eps
        for src, dst, conv in (("K0", "K0", int), ("K", "K", int),
                               ("alpha_scale", "alpha_scale", float),
                               ("ell_multiplier", "ell_multiplier", float)):
            if src in cov:
                kwargs[dst] = conv(cov[src])
        mc = doc.get("monte_carlo", {})
        if "samples" in mc:
            kwargs["mc_samples"] = int(mc["samples"])
        if "seed" in mc:
            kwargs["seed"] = int(mc["seed"])
        fit = doc.get("fit", {})
        for src, dst, conv in (("zmin", "fit_zmin", float),
                               ("zmax", "fit_zmax", float),
                               ("degree", "fit_degree", int),
                               ("points", "fit_points", int)):
            if src in fit:
                kwargs[dst] = conv(fit[src])
        for src, conv in (("delta", float), ("beta", float),
                          ("genericity_K", int), ("profile_points", int),
                          ("twist_grid", int), ("max_generators", int),
                          ("figures", bool)):
            if src in doc:
                kwargs[src] = conv(doc[src])
        budget = doc.get("budget", {})
        for src, dst in (("c", "budget_c"), ("c2", "budget_c2"),
                         ("a", "budget_a")):
            if src in budget:
                kwargs[dst] = float(budget[src])
        if "kam" in doc:
            kwargs["kam"] = dict(doc["kam"])
        sections = doc.get("sections", {})
        if not isinstance(sections, dict):
            raise ConfigError("'sections' must map section names to booleans")
        for name in sections:
            if name not in _SECTION_NAMES:
                raise ConfigError(f"unknown section '{name}'")
        kwargs["sections"] = dict(sections)
        try:
            cfg = cls(**kwargs)
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from err
        if cfg.K < 6 * cfg.K0:
            raise ConfigError("covering requires K >= 6 K0")
        if not (0 < cfg.fit_zmin < cfg.fit_zmax):
            raise ConfigError("fit window requires 0 < zmin < zmax")
        return cfg

    @classmethod
    def from_file(cls, path) -> "StudyConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from err
        return cls.from_dict(doc, base_dir=path.parent)


def _load_potential(spec, base_dir: Path) -> FourierPotential:
    if not isinstance(spec, dict):
        raise ConfigError("'potential' must be an object")
    kinds = [k for k in ("prototype", "file", "inline") if k in spec]
    if len(kinds) != 1:
        raise ConfigError("potential must have exactly one of "
                          "'prototype', 'file', 'inline'")
    kind = kinds[0]
    try:
        if kind == "prototype":
            p = spec["prototype"]
            return FourierPotential.prototype(
                int(p["n"]), float(p["s"]), cap=int(p.get("cap", 32)))
        if kind == "file":
            path = Path(spec["file"])
            if not path.is_absolute():
                path = base_dir / path
            if not path.exists():
                raise ConfigError(f"potential file not found: {path}")
            return FourierPotential.load(path)
        return FourierPotential.from_json_dict(spec["inline"])
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"invalid potential spec: {err}") from err


# ---------------------------------------------------------------------------
# KAM smallness threshold
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KamThresholdInput:
    """Hessian and analyticity data feeding the smallness condition.

    M bounds the Hessian sup-norm, d the determinant infimum (d <= M^n),
    r and sbar the analyticity radii; the constant C_kam is configuration
    (only its existence is guaranteed), so thresholds are relative."""

    M: float
    d: float
    r: float
    sbar: float
    n: int
    C_kam: float = 1.0
    domain_diameter: float = 2.0

    def __post_init__(self):
        if min(self.M, self.d, self.r, self.sbar, self.C_kam) <= 0:
            raise ValueError("all threshold inputs must be positive")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.d > self.M ** self.n * (1 + 1e-12):
            raise ValueError("determinant bound exceeds M^n")


@dataclass(frozen=True)
class KamThreshold:
    max_perturbation: float       # largest admissible sup-norm of the forcing
    d_star: float
    r_star: float
    measure_loss_coefficient: float


def kam_threshold(inp: KamThresholdInput) -> KamThreshold:
    """Evaluate r^2 d^8 sbar^{4n+4} / (C_kam M^{8n-1}) and the coefficient of
    the sqrt(eps) measure loss."""
    n = inp.n
    max_pert = (inp.r ** 2 * inp.d ** 8 * inp.sbar ** (4 * n + 4)
                / (inp.C_kam * inp.M ** (8 * n - 1)))
    d_star = inp.d / inp.M ** n
    r_star = d_star ** 2 * inp.r
    coeff = (max(r_star, inp.domain_diameter) ** n
             * inp.C_kam / (d_star ** (n + 5) * inp.sbar ** (3 * (n + 1))))
    return KamThreshold(max_perturbation=max_pert, d_star=d_star,
                        r_star=r_star, measure_loss_coefficient=coeff)


# ---------------------------------------------------------------------------
# Bundle plumbing
# ---------------------------------------------------------------------------


def _prov(value, op: str, tol=None):
    return {"value": value, "op": op, "tol": tol}


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])


def _k_tag(k) -> str:
    return "k" + "_".join(str(c).replace("-", "m") for c in k)


@dataclass
class StudyResult:
    out_dir: Path
    sections: dict            # name -> {"status": ..., ...}
    summary_path: Path

    @property
    def failed(self) -> list[str]:
        return [n for n, s in self.sections.items() if s.get("status") == "failed"]

    @property
    def ok(self) -> bool:
        return not self.failed


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------


def _section_genericity(cfg: StudyConfig, out: Path, summary: dict) -> None:
    rep = check_genericity(cfg.potential, cfg.delta, cfg.beta, cfg.genericity_K)
    doc = {
        "cutoff": rep.cutoff,
        "delta": rep.delta,
        "beta": rep.beta,
        "passed": rep.passed,
        "checks": [
            {"k": list(c.k), "kind": c.kind, "passed": c.passed,
             "margin": c.margin, "binding": c.binding, "detail": c.detail}
            for c in rep.checks
        ],
    }
    _write_json(out / "genericity.json", doc)
    summary["genericity"] = {
        "status": "ok",
        "passed": rep.passed,
        "cutoff": _prov(rep.cutoff, "potential.cutoff_N"),
        "checks": len(rep.checks),
        "file": "genericity.json",
    }


def _section_covering(cfg: StudyConfig, out: Path, summary: dict) -> None:
    n = cfg.potential.n
    rows = []
    fractions = {}
    for i, eps in enumerate(cfg.epsilons):
        alpha = cfg.alpha_scale * math.sqrt(eps)
        params = CoveringParams(n=n, eps=eps, K0=cfg.K0, K=cfg.K, alpha=alpha,
                                ell_multiplier=cfg.ell_multiplier)
        z = zone_fractions(params, cfg.mc_samples, cfg.seed, stream=100 + i)
        fractions[eps] = z
        for zone in ("non-resonant", "simply-resonant", "doubly-resonant"):
            est = z[zone]
            rows.append([eps, alpha, zone, est.value, est.std_error,
                         est.samples, est.seed])
    _write_csv(out / "covering.csv",
               ["eps", "alpha", "zone", "measure", "std_error", "samples",
                "seed"], rows)
    # a small classified sample in the streaming format
    params = CoveringParams(n=n, eps=cfg.epsilons[0],
                            alpha=cfg.alpha_scale * math.sqrt(cfg.epsilons[0]),
                            K0=cfg.K0, K=cfg.K,
                            ell_multiplier=cfg.ell_multiplier)
    rng = np.random.Generator(np.random.Philox(
        key=np.array([cfg.seed, 2 ** 40], dtype=np.uint64)))
    sample_rows = []
    for y in rng.random((256, n)) * 2.0 - 1.0:
        if np.linalg.norm(y) >= 1.0:
            continue
        label = classify(y, params)
        sample_rows.append(list(map(float, y)) + [
            label.tag,
            " ".join(map(str, label.witness)) if label.witness else "",
            label.margin_nonresonant, label.margin_simple])
    _write_csv(out / "zone_sample.csv",
               [f"y{i + 1}" for i in range(n)]
               + ["label", "witness_k", "margin_nonresonant", "margin_simple"],
               sample_rows)
    eps0 = cfg.epsilons[0]
    summary["covering"] = {
        "status": "ok",
        "files": ["covering.csv", "zone_sample.csv"],
        "doubly_resonant_at_first_eps": _prov(
            fractions[eps0]["doubly-resonant"].value, "measure.zone_fractions",
            fractions[eps0]["doubly-resonant"].std_error),
    }


def _analysis_generators(cfg: StudyConfig) -> list[tuple[int, ...]]:
    gens = []
    for k in enumerate_generators(cfg.potential.n, cfg.K0):
        if not cfg.potential.project(k).is_zero:
            gens.append(k)
        if len(gens) >= cfg.max_generators:
            break
    return gens


def _section_portraits(cfg: StudyConfig, out: Path, summary: dict) -> None:
    entries = {}
    for k in _analysis_generators(cfg):
        g = cfg.potential.project(k)
        form = standard_form(g)
        regions = decompose(form)
        vrep = validate(form)
        tag = _k_tag(k)
        doc = {
            "k": list(k),
            "eps_k_per_eps": 2.0 / float(sum(c * c for c in k)),
            "critical_angles": list(regions[0].crit_angles),
            "critical_values": list(regions[0].crit_values),
            "validation_passed": vrep.passed,
            "regions": [
                {"index": r.index, "kind": r.kind, "e_lo": r.e_lo,
                 "e_hi": r.e_hi, "j_minus": r.j_minus, "j_plus": r.j_plus}
                for r in regions
            ],
        }
        _write_json(out / f"portrait_{tag}.json", doc)
        if cfg.figures:
            figures.render_portrait(form, regions, out / f"portrait_{tag}.svg")
        entries[tag] = {"regions": len(regions),
                        "validation_passed": vrep.passed}
    summary["portraits"] = {"status": "ok", "generators": entries}


def _section_actions(cfg: StudyConfig, out: Path, summary: dict) -> None:
    entries = {}
    for k in _analysis_generators(cfg):
        g = cfg.potential.project(k)
        form = standard_form(g)
        regions = decompose(form)
        tag = _k_tag(k)
        fits = []
        for r in regions:
            profile = actions_mod.build_profile(r, count=cfg.profile_points)
            _write_csv(out / f"actions_{tag}_r{r.index}.csv",
                       ["E", "I1", "dI_dE", "d2I_dE2"],
                       zip(profile.energies.tolist(), profile.actions.tolist(),
                           profile.d1.tolist(), profile.d2.tolist()))
            if cfg.figures and r.index <= 1:
                figures.render_action_profile(
                    profile, out / f"actions_{tag}_r{r.index}.svg")
            sides = [("lower", r)]
            if r.is_inner:
                sides.append(("upper", r))
            for side, reg in sides:
                # keep the window inside the region even when it is narrow
                zmax = min(cfg.fit_zmax, 0.4 * reg.width / reg.energy_scale)
                zmin = min(cfg.fit_zmin, zmax / 100.0)
                fit = actions_mod.separatrix_fit(
                    reg, side, zmin, zmax,
                    J=cfg.fit_degree, points=cfg.fit_points)
                fits.append({
                    "region": reg.index, "side": side, "scale": fit.scale,
                    "phi": fit.phi.tolist(), "psi": fit.psi.tolist(),
                    "residual": fit.residual, "psi0": fit.psi0,
                    "sign_ok": fit.sign_ok,
                })
        _write_json(out / f"fits_{tag}.json", {"k": list(k), "fits": fits})
        entries[tag] = {
            "fits": len(fits),
            "max_residual": _prov(max(f["residual"] for f in fits),
                                  "actions.separatrix_fit",
                                  1e-6 * math.sqrt(form.eps_bar)),
            "signs_ok": all(f["sign_ok"] for f in fits),
        }
    summary["actions"] = {"status": "ok", "generators": entries}


def _section_twist(cfg: StudyConfig, out: Path, summary: dict) -> None:
    entries = {}
    for k in _analysis_generators(cfg):
        g = cfg.potential.project(k)
        form = standard_form(g)
        regions = decompose(form)
        tform = transverse_form(k)
        tag = _k_tag(k)
        certs = []
        for r in regions:
            profile = actions_mod.build_profile(r, count=cfg.profile_points)
            fld = twist_mod.twist_field(profile, tform)
            _write_csv(out / f"twistfield_{tag}_r{r.index}.csv",
                       ["I1", "E", "d2E_dI2", "det"],
                       zip(fld.actions.tolist(), fld.energies.tolist(),
                           fld.twist_values.tolist(), fld.det_values.tolist()))
            if not r.is_inner:
                continue
            F = twist_mod.normalized_F(r, count=cfg.twist_grid)
            if cfg.figures and r.index == 1:
                figures.render_twist_profile(F, out / f"twist_{tag}_r1.svg")
            try:
                cert = twist_mod.certify_nondegeneracy(F)
                certs.append({
                    "region": r.index, "xi": cert.xi, "m": cert.m,
                    "error_estimate": cert.error_estimate,
                    "grid": {"lo": float(F.xs[0]), "hi": float(F.xs[-1]),
                             "count": len(F.xs),
                             "spacing": "chebyshev"},
                    "method": cert.derivative_method,
                })
            except twist_mod.CertificateNotFound as err:
                certs.append({"region": r.index, "error": str(err)})
        _write_json(out / f"certificates_{tag}.json",
                    {"k": list(k), "transverse_det": tform.det,
                     "transverse_det_lower_bound": tform.det_lower_bound,
                     "certificates": certs})
        ok = all("xi" in c for c in certs)
        entries[tag] = {"certified_regions": sum("xi" in c for c in certs),
                        "all_certified": ok}
    summary["twist"] = {"status": "ok", "generators": entries}


def _section_logring(cfg: StudyConfig, out: Path, summary: dict) -> None:
    n = cfg.potential.n
    op = expand_operator(n)
    constants = []
    for m in range(3):
        for kk in range(7):
            c, _res = leading_constant(m, kk)
            constants.append({"m": m, "k": kk, "constant": str(c)})
    doc = {
        "n": n,
        "order": op.order,
        "order_formula": operator_order(n),
        "lowest_derivative": op.lowest_order,
        "operator": str(op),
        "leading_constants": constants,
    }
    _write_json(out / "logring.json", doc)
    summary["logring"] = {
        "status": "ok",
        "order": _prov(op.order, "logring.expand_operator"),
        "file": "logring.json",
    }


def _section_scaling(cfg: StudyConfig, out: Path, summary: dict) -> None:
    study = scaling_study(cfg.potential.n, cfg.K0, cfg.K, cfg.epsilons,
                          cfg.mc_samples, cfg.seed,
                          alpha_scale=cfg.alpha_scale,
                          ell_multiplier=cfg.ell_multiplier)
    _write_csv(out / "scaling.csv",
               ["eps", "alpha", "measure", "std_error", "bound_ok"],
               [[r["eps"], r["alpha"], r["measure"], r["std_error"],
                 r["bound_ok"]] for r in study.as_rows()])
    if cfg.figures:
        figures.render_scaling(study, out / "scaling.svg")
    summary["scaling"] = {
        "status": "ok",
        "slope": _prov(study.slope, "measure.scaling_study", 0.1),
        "c2_fit": _prov(study.c2_fit, "measure.scaling_study"),
        "bound_ok": all(study.bound_ok),
        "file": "scaling.csv",
    }


def _section_budget(cfg: StudyConfig, out: Path, summary: dict) -> None:
    eps = min(cfg.epsilons)
    table = budget_shape(eps, [cfg.K0, cfg.K, 4 * cfg.K, 16 * cfg.K],
                         {"n": cfg.potential.n, "c2": cfg.budget_c2,
                          "c": cfg.budget_c, "a": cfg.budget_a})
    _write_csv(out / "budget.csv", ["K", "poly_term", "exp_term"],
               [[r.K, r.poly_term, r.exp_term] for r in table.rows])
    summary["budget"] = {
        "status": "ok",
        "crossover_K": _prov(table.crossover_K, "measure.budget_shape"),
        "special": {name: {"K": row.K, "poly": row.poly_term,
                           "exp": row.exp_term}
                    for name, row in table.special_K.items()},
        "file": "budget.csv",
    }


def _section_kam(cfg: StudyConfig, out: Path, summary: dict) -> None:
    if cfg.kam is None:
        summary["kam"] = {"status": "skipped", "reason": "no kam inputs"}
        return
    inp = KamThresholdInput(
        M=float(cfg.kam["M"]), d=float(cfg.kam["d"]), r=float(cfg.kam["r"]),
        sbar=float(cfg.kam.get("sbar", 1.0)), n=cfg.potential.n,
        C_kam=float(cfg.kam.get("C_kam", 1.0)),
        domain_diameter=float(cfg.kam.get("domain_diameter", 2.0)))
    thr = kam_threshold(inp)
    summary["kam"] = {
        "status": "ok",
        "max_perturbation": _prov(thr.max_perturbation, "report.kam_threshold"),
        "d_star": _prov(thr.d_star, "report.kam_threshold"),
        "measure_loss_coefficient": _prov(thr.measure_loss_coefficient,
                                          "report.kam_threshold"),
        "note": "relative threshold: C_kam is configuration",
    }


_SECTION_RUNNERS = {
    "genericity": _section_genericity,
    "covering": _section_covering,
    "portraits": _section_portraits,
    "actions": _section_actions,
    "twist": _section_twist,
    "logring": _section_logring,
    "scaling": _section_scaling,
    "budget": _section_budget,
    "kam": _section_kam,
}


def run_study(cfg: StudyConfig, out_dir) -> StudyResult:
    """Run every enabled section, continuing past per-section failures.

    Returns a StudyResult whose ``failed`` list drives the process exit
    code (any failed section means a nonzero exit)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary: dict = {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "potential": {"n": cfg.potential.n, "s": cfg.potential.s,
                      "modes": len(cfg.potential.coeffs),
                      "generator_rule": cfg.potential.generator_rule},
    }
    for name, runner in _SECTION_RUNNERS.items():
        if not cfg.section_enabled(name):
            summary[name] = {"status": "skipped", "reason": "disabled in config"}
            continue
        try:
            runner(cfg, out, summary)
        except Exception as err:  # noqa: BLE001 - partial-failure policy
            summary[name] = {
                "status": "failed",
                "error": f"{type(err).__name__}: {err}",
                "trace": traceback.format_exc(limit=3),
            }
    summary_path = out / "summary.json"
    _write_json(summary_path, summary)
    return StudyResult(out_dir=out, sections={
        name: summary[name] for name in _SECTION_RUNNERS if name in summary
    }, summary_path=summary_path)
