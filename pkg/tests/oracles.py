"""Independent brute-force evaluators used only by the tests.

Deliberately written against plain tuples/dicts with naive loops and a
different integration scheme (dense grid with sorted-prefix envelopes)
than the library, so agreement is meaningful.
"""

import numpy as np


def overlap(a_on, a_off, b_on, b_off):
    return max(0.0, min(a_off, b_off) - max(a_on, b_on))


def brute_match(dets_by_clip, gts_by_clip, classes, rho_dtc, rho_gtc, rho_cttc=None):
    """Exhaustive per-pair intersection matching.

    dets/gts are dicts clip -> list of (class, onset, offset) tuples.
    Returns per-class dicts tp, fp, n_gt and pair dict ct[(c, k)].
    """
    tp = {c: 0 for c in classes}
    fp = {c: 0 for c in classes}
    n_gt = {c: 0 for c in classes}
    ct = {(c, k): 0 for c in classes for k in classes if c != k}

    for clip, gts in gts_by_clip.items():
        for cls, _, _ in gts:
            n_gt[cls] += 1
        dets = dets_by_clip.get(clip, [])
        valid = []
        failing = []
        for d_cls, d_on, d_off in dets:
            total = 0.0
            for g_cls, g_on, g_off in gts:
                if g_cls == d_cls:
                    total += overlap(d_on, d_off, g_on, g_off)
            if total / (d_off - d_on) >= rho_dtc:
                valid.append((d_cls, d_on, d_off))
            else:
                fp[d_cls] += 1
                failing.append((d_cls, d_on, d_off))
        for g_cls, g_on, g_off in gts:
            covered = 0.0
            for d_cls, d_on, d_off in valid:
                if d_cls == g_cls:
                    covered += overlap(g_on, g_off, d_on, d_off)
            if covered / (g_off - g_on) >= rho_gtc:
                tp[g_cls] += 1
        if rho_cttc is not None:
            for d_cls, d_on, d_off in failing:
                for g_cls, g_on, g_off in gts:
                    if g_cls == d_cls:
                        continue
                    if overlap(d_on, d_off, g_on, g_off) / (d_off - d_on) >= rho_cttc:
                        ct[(d_cls, g_cls)] += 1
    return tp, fp, n_gt, ct


def brute_rates(tp, fp, n_gt, ct, gts_by_clip, durations, classes, alpha_ct):
    """Per-class (effective FP/hour, TP ratio) recomputed with plain loops."""
    d_hours = sum(durations.values()) / 3600.0
    cls_hours = {c: 0.0 for c in classes}
    for gts in gts_by_clip.values():
        for cls, on, off in gts:
            cls_hours[cls] += (off - on) / 3600.0

    efpr, tpr = [], []
    for c in classes:
        t = tp[c] / n_gt[c] if n_gt[c] > 0 else 0.0
        e = fp[c] / d_hours
        if alpha_ct > 0 and len(classes) > 1:
            cross = 0.0
            for k in classes:
                if k == c or cls_hours[k] <= 0:
                    continue
                cross += ct[(c, k)] / cls_hours[k]
            e += alpha_ct * cross / (len(classes) - 1)
        efpr.append(e)
        tpr.append(t)
    return efpr, tpr


def brute_psds(rate_points, alpha_st, e_max, n_grid=100_000):
    """Dense-grid integration of the effective TPR.

    rate_points: list over operating points of (efpr list, tpr list). The
    grid is 10^5 uniform points united with every observed eFPR, so the
    left rule integrates the piecewise-constant curve exactly. Envelopes
    come from a sort + running max, not the library's masked-max.
    """
    efpr = np.asarray([e for e, _ in rate_points], dtype=float)
    tpr = np.asarray([t for _, t in rate_points], dtype=float)
    n_classes = efpr.shape[1]

    breaks = efpr.ravel()
    breaks = breaks[(breaks >= 0.0) & (breaks <= e_max)]
    grid = np.union1d(np.linspace(0.0, e_max, n_grid + 1), breaks)

    envelopes = []
    for c in range(n_classes):
        order = np.argsort(efpr[:, c], kind="stable")
        e_sorted = efpr[order, c]
        t_running = np.maximum.accumulate(tpr[order, c])
        idx = np.searchsorted(e_sorted, grid, side="right") - 1
        env = np.where(idx >= 0, t_running[np.clip(idx, 0, None)], 0.0)
        envelopes.append(env)
    r = np.stack(envelopes)
    etpr = np.clip(r.mean(axis=0) - alpha_st * r.std(axis=0), 0.0, 1.0)
    return float((etpr[:-1] * np.diff(grid)).sum() / e_max)
