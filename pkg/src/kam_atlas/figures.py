"""Static SVG renderers for portraits, action profiles, twist profiles, and
the covering scaling study.

Figures are written deterministically (no embedded dates, fixed hash salt)
so that report bundles reproduce bit-identically under a fixed seed."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams["svg.hashsalt"] = "kam-atlas"
plt.rcParams["figure.figsize"] = (6.0, 4.0)
plt.rcParams["font.size"] = 9

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}

__all__ = [
    "render_portrait",
    "render_action_profile",
    "render_twist_profile",
    "render_scaling",
]


def render_portrait(form, regions, path) -> None:
    """Level lines of p^2 + G(q) with the separatrix energies highlighted."""
    g = form.effective_potential()
    q = np.linspace(0.0, 2.0 * np.pi, 481)
    crit_vals = regions[0].crit_values
    e_top = max(crit_vals) + 0.6 * (max(crit_vals) - min(crit_vals) + 1e-12)
    p_max = math.sqrt(max(e_top - min(g(q)), 1e-12))
    p = np.linspace(-1.05 * p_max, 1.05 * p_max, 321)
    Q, P = np.meshgrid(q, p)
    H = P ** 2 + g(q)[None, :]
    fig, (ax0, ax1) = plt.subplots(
        2, 1, sharex=True, figsize=(6.0, 6.0),
        gridspec_kw={"height_ratios": [1, 2]})
    ax0.plot(q, g(q), lw=1.2)
    ax0.set_ylabel("G(q)")
    levels = np.unique(np.concatenate([
        np.linspace(min(g(q)) + 1e-9, e_top, 13), np.array(crit_vals)]))
    ax1.contour(Q, P, H, levels=sorted(levels), linewidths=0.6,
                colors="steelblue")
    ax1.contour(Q, P, H, levels=sorted(set(crit_vals)), linewidths=1.4,
                colors="crimson")
    ax1.set_xlabel("q")
    ax1.set_ylabel("p")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_action_profile(profile, path) -> None:
    fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True, figsize=(6.0, 5.0))
    ax0.plot(profile.energies, profile.actions, marker=".", ms=3, lw=0.9)
    ax0.set_ylabel("I(E)")
    ax1.semilogy(profile.energies, profile.d1, marker=".", ms=3, lw=0.9)
    ax1.set_ylabel("dI/dE")
    ax1.set_xlabel("E")
    fig.suptitle(f"region {profile.region.index} ({profile.region.kind})",
                 fontsize=9)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_twist_profile(F, path) -> None:
    fig, ax = plt.subplots()
    ax.plot(F.xs, F.values, marker=".", ms=3, lw=0.9)
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.set_xlabel("normalized action x")
    ax.set_ylabel("d2E/dI2")
    ax.set_title(f"normalized twist, region {F.region_index}", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_scaling(study, path) -> None:
    eps = np.array(study.epsilons)
    vals = np.array([m.value for m in study.measures])
    errs = np.array([m.std_error for m in study.measures])
    fig, ax = plt.subplots()
    ax.errorbar(eps, vals, yerr=3 * errs, fmt="o", ms=4, capsize=3,
                label="measured")
    fit = np.exp(study.intercept) * eps ** study.slope
    ax.plot(eps, fit, "--", lw=1.0,
            label=f"slope {study.slope:.3f}")
    bound = study.c2_used * eps * study.K ** study.gamma
    ax.plot(eps, bound, ":", lw=1.0, label="c2 eps K^gamma")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("measure of the doubly-resonant zone")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
