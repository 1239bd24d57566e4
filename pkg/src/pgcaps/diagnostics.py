"""Observed versus predicted sizes of the nibble's sets, step by step.

The predictions are the leading terms of the asymptotic estimates that drive
the construction (|M| ~ theta q^((N-1)/2), |S(l)| ~ b q, ...).  At the sizes a
desk run can reach their error terms are not small, so nothing here is
asserted; the report records signed relative residuals
``(measured - predicted) / predicted``.
"""

from __future__ import annotations

import math

import numpy as np

from .nibble import NibbleState, StepStats, phase_of

LINE_SAMPLE_POINTS = 8


def _residual(measured: float, predicted: float) -> float | None:
    if predicted == 0:
        return 0.0 if measured == 0 else None
    return (measured - predicted) / predicted


def _entry(measured: float, predicted: float) -> dict:
    return {"measured": measured, "predicted": predicted, "residual": _residual(measured, predicted)}


def line_counts(state: NibbleState, v: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """|S(l)|, |omega(l)| and |cap(l)| for each line l through v."""
    space = state.space
    P = space.num_points
    others = np.delete(np.arange(P, dtype=np.int64), v)
    lab = space.pencil_labels(v, others)
    lead = int(np.argmax(space.coords[v] != 0))
    pencil = np.flatnonzero(space.coords[:, lead] == 0)

    def per_line(mask: np.ndarray) -> np.ndarray:
        return np.bincount(lab[mask[others]], minlength=P)[pencil] + int(mask[v])

    return per_line(state.s), per_line(state.omega), per_line(state.cap.members)


def main_lemma_diagnostics(state: NibbleState, stats: StepStats, B: np.ndarray, M: np.ndarray) -> dict:
    """Residual report for the state at the start of a step, given its B and M."""
    space = state.space
    q, N = space.q, space.n_dim
    theta, b, bp, a = state.theta, state.b, state.b_prime, state.a
    ext = stats.extrema

    rng = state.rng["diagnostics"]
    candidates = np.flatnonzero(~state.cap.members)
    picks = rng.choice(candidates, size=min(LINE_SAMPLE_POINTS, len(candidates)), replace=False)
    s_lines, o_lines, c_lines = [], [], []
    for v in np.sort(picks):
        s_l, o_l, c_l = line_counts(state, int(v))
        s_lines.append(s_l)
        o_lines.append(o_l)
        c_lines.append(c_l)
    s_lines = np.concatenate(s_lines)
    o_lines = np.concatenate(o_lines)
    non_secant = np.concatenate(c_lines) < 2

    nibble = theta * q ** ((N - 1) / 2)
    quantities = {
        "M": _entry(len(M), nibble),
        "B_vs_bound": _entry(len(B), 2 * nibble),
        "S_line_max": _entry(int(s_lines.max()), b * q),
        "S_line_min": _entry(int(s_lines[non_secant].min()) if non_secant.any() else 0, b * q),
        "Omega_line_max": _entry(int(o_lines.max()), bp * q),
        "T_max": _entry(ext.max_T, 0.5 * b**2 * q ** (N + 1)),
        "T_min": _entry(ext.min_T, 0.5 * b**2 * q ** (N + 1)),
        "A_max": _entry(ext.max_A, a * b * q ** ((N + 1) / 2)),
        "A_min": _entry(ext.min_A, a * b * q ** ((N + 1) / 2)),
        "S_size": _entry(int(state.s.sum()), b * q**N),
        "Omega_size": _entry(int(state.omega.sum()), bp * q**N),
    }
    return {
        "step": state.step,
        "phase": phase_of(state),
        "extrema_sampled": ext.sampled,
        "lines_sampled": int(len(s_lines)),
        "quantities": quantities,
    }


def all_finite(report: dict) -> bool:
    for entry in report["quantities"].values():
        for key in ("measured", "predicted"):
            if not math.isfinite(entry[key]):
                return False
        r = entry["residual"]
        if r is not None and not math.isfinite(r):
            return False
    return True
