# Copyright (c) maskfuse contributors
# SPDX-License-Identifier: Apache-2.0
"""Standalone COCO-style mask mAP/mAR reference evaluator (numpy).

Implements the standard COCO protocol: greedy per-(image, category) matching
at each IoU threshold in 0.50:0.05:0.95, 101-point interpolated AP, recall
with a per-image detection cap, categories without ground truth excluded.
Used to freeze expected values for the committed test fixtures.
"""

import json

import numpy as np

IOU_THRESHOLDS = [0.5 + 0.05 * i for i in range(10)]
RECALL_POINTS = [i / 100.0 for i in range(101)]
MAX_DETS = 100


def rle_decode(seg):
    h, w = seg["size"]
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    val = False
    for run in seg["counts"]:
        if val:
            flat[pos : pos + run] = True
        pos += run
        val = not val
    return flat.reshape((w, h)).T  # column-major


def mask_iou(a, b):
    inter = np.logical_and(a, b).sum()
    union = np.logical_or(a, b).sum()
    return inter / union if union > 0 else 0.0


def evaluate(gt, preds):
    image_ids = sorted(im["id"] for im in gt["images"])
    cat_ids = sorted(c["id"] for c in gt["categories"])

    gt_by_cell = {}
    for ann in gt["annotations"]:
        gt_by_cell.setdefault((ann["category_id"], ann["image_id"]), []).append(ann)
    det_by_cell = {}
    for p in preds:
        det_by_cell.setdefault((p["category_id"], p["image_id"]), []).append(p)

    ap_vals, ar_vals = [], []
    for cat in cat_ids:
        npig = sum(len(gt_by_cell.get((cat, img), [])) for img in image_ids)
        if npig == 0:
            continue
        scores, tps = [], {t: [] for t in IOU_THRESHOLDS}
        for img in image_ids:
            gts = gt_by_cell.get((cat, img), [])
            dts = det_by_cell.get((cat, img), [])
            order = np.argsort([-d["score"] for d in dts], kind="mergesort")[:MAX_DETS]
            dts = [dts[i] for i in order]
            gmasks = [rle_decode(g["segmentation"]) for g in gts]
            dmasks = [rle_decode(d["segmentation"]) for d in dts]
            ious = np.array(
                [[mask_iou(dm, gm) for gm in gmasks] for dm in dmasks]
            ).reshape(len(dts), len(gts))
            scores.extend(d["score"] for d in dts)
            for t in IOU_THRESHOLDS:
                matched = np.zeros(len(gts), dtype=bool)
                tp = []
                floor_t = min(t, 1 - 1e-10)
                for d in range(len(dts)):
                    best, m = floor_t, -1
                    for g in range(len(gts)):
                        if matched[g]:
                            continue
                        if ious[d, g] < best:
                            continue
                        best, m = ious[d, g], g
                    if m >= 0:
                        matched[m] = True
                    tp.append(m >= 0)
                tps[t].extend(tp)

        order = np.argsort(-np.array(scores), kind="mergesort") if scores else []
        for t in IOU_THRESHOLDS:
            tp = np.array(tps[t], dtype=bool)[order] if scores else np.array([], dtype=bool)
            tp_cum = np.cumsum(tp)
            fp_cum = np.cumsum(~tp)
            rc = tp_cum / npig
            pr = tp_cum / np.maximum(tp_cum + fp_cum, 1e-12)
            for i in range(len(pr) - 1, 0, -1):
                pr[i - 1] = max(pr[i - 1], pr[i])
            ap = 0.0
            for r in RECALL_POINTS:
                idx = np.searchsorted(rc, r, side="left")
                if idx < len(pr):
                    ap += pr[idx]
            ap_vals.append(ap / len(RECALL_POINTS))
            ar_vals.append(tp_cum[-1] / npig if len(tp_cum) else 0.0)

    return 100.0 * float(np.mean(ap_vals)), 100.0 * float(np.mean(ar_vals))


if __name__ == "__main__":
    import sys

    with open(sys.argv[1]) as f:
        gt = json.load(f)
    with open(sys.argv[2]) as f:
        preds = json.load(f)
    m_ap, m_ar = evaluate(gt, preds)
    print(json.dumps({"mAP": m_ap, "mAR": m_ar}, indent=2))
