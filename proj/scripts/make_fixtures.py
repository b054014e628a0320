# Copyright (c) maskfuse contributors
# SPDX-License-Identifier: Apache-2.0
"""Generates the committed synthetic test fixtures.

Writes an evaluator fixture (ground truth + predictions + expected mAP/mAR
frozen from the reference evaluator) and a 3-model pipeline fixture with
semantic maps and a ready-to-run config. Deterministic under the fixed seed.
"""

import json
import os

import numpy as np
from scipy import ndimage

import coco_eval_reference as ref

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "..", "tests", "fixtures")


def rle_encode(mask):
    flat = mask.T.flatten()  # column-major
    counts = []
    cur, run = False, 0
    for v in flat:
        if v == cur:
            run += 1
        else:
            counts.append(run)
            cur, run = v, 1
    counts.append(run)
    return {"size": [int(mask.shape[0]), int(mask.shape[1])], "counts": [int(c) for c in counts]}


def bbox(mask):
    rows = np.any(mask, axis=1)
    cols = np.any(mask, axis=0)
    if not rows.any():
        return [0.0, 0.0, 0.0, 0.0]
    r0, r1 = np.where(rows)[0][[0, -1]]
    c0, c1 = np.where(cols)[0][[0, -1]]
    return [float(c0), float(r0), float(c1 - c0 + 1), float(r1 - r0 + 1)]


def random_blob(rng, h, w):
    """Filled ellipse at a random position, clipped to the image."""
    cy, cx = rng.uniform(4, h - 4), rng.uniform(4, w - 4)
    ry, rx = rng.uniform(2, h / 4), rng.uniform(2, w / 4)
    yy, xx = np.mgrid[0:h, 0:w]
    mask = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
    return mask


def perturb(rng, mask, strength):
    """Shift plus morphological noise, keeping the mask non-empty."""
    out = np.roll(mask, rng.integers(-strength, strength + 1, 2), axis=(0, 1))
    if rng.random() < 0.5:
        out = ndimage.binary_dilation(out, iterations=int(rng.integers(0, strength + 1)))
    else:
        eroded = ndimage.binary_erosion(out, iterations=int(rng.integers(0, strength + 1)))
        if eroded.any():
            out = eroded
    return out if out.any() else mask


def make_dataset(rng, n_images, h, w, n_cats=3, first_image_id=1):
    images, annotations = [], []
    for i in range(n_images):
        images.append({"id": first_image_id + i, "height": h, "width": w})
        for _ in range(int(rng.integers(1, 5))):
            mask = random_blob(rng, h, w)
            annotations.append(
                {
                    "image_id": first_image_id + i,
                    "category_id": int(rng.integers(1, n_cats + 1)),
                    "bbox": bbox(mask),
                    "segmentation": rle_encode(mask),
                }
            )
    gt = {
        "images": images,
        "categories": [{"id": c, "name": f"cat{c}"} for c in range(1, n_cats + 1)],
        "annotations": annotations,
    }
    return gt


def make_predictions(rng, gt, hit_rate, strength, fp_count, score_lo, score_hi):
    preds = []
    dims = {im["id"]: (im["height"], im["width"]) for im in gt["images"]}
    for ann in gt["annotations"]:
        if rng.random() > hit_rate:
            continue
        mask = perturb(rng, ref.rle_decode(ann["segmentation"]), strength)
        preds.append(
            {
                "image_id": ann["image_id"],
                "category_id": ann["category_id"],
                "score": float(rng.uniform(score_lo, score_hi)),
                "bbox": bbox(mask),
                "segmentation": rle_encode(mask),
            }
        )
    image_ids = sorted(dims)
    for _ in range(fp_count):
        img = int(rng.choice(image_ids))
        h, w = dims[img]
        mask = random_blob(rng, h, w)
        preds.append(
            {
                "image_id": img,
                "category_id": int(rng.integers(1, len(gt["categories"]) + 1)),
                "score": float(rng.uniform(0.02, 0.5)),
                "bbox": bbox(mask),
                "segmentation": rle_encode(mask),
            }
        )
    return preds


def make_semantic(rng, gt, dilate):
    """One defect map per image: union of its instance masks, optionally grown."""
    maps = []
    for im in gt["images"]:
        total = np.zeros((im["height"], im["width"]), dtype=bool)
        for ann in gt["annotations"]:
            if ann["image_id"] == im["id"]:
                total |= ref.rle_decode(ann["segmentation"])
        if dilate and total.any():
            total = ndimage.binary_dilation(total, iterations=dilate)
        maps.append({"image_id": im["id"], "segmentation": rle_encode(total)})
    return maps


def dump(path, obj):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        json.dump(obj, f)
    print("wrote", path)


def main():
    rng = np.random.default_rng(20230715)

    # --- evaluator oracle fixture: 20 images, 3 categories, ~150 detections
    gt = make_dataset(rng, n_images=20, h=48, w=64)
    preds = make_predictions(rng, gt, hit_rate=0.85, strength=1, fp_count=110,
                             score_lo=0.3, score_hi=1.0)
    m_ap, m_ar = ref.evaluate(gt, preds)
    dump(os.path.join(FIXTURES, "eval", "gt.json"), gt)
    dump(os.path.join(FIXTURES, "eval", "pred.json"), preds)
    dump(os.path.join(FIXTURES, "eval", "expected.json"), {"mAP": m_ap, "mAR": m_ar})
    print(f"eval fixture: {len(gt['annotations'])} gts, {len(preds)} dets, "
          f"mAP={m_ap:.4f} mAR={m_ar:.4f}")

    # --- 3-model pipeline fixture, two datasets
    for name, n_images, h, w in [("alpha", 12, 48, 64), ("beta", 8, 40, 40)]:
        ds_gt = make_dataset(rng, n_images=n_images, h=h, w=w)
        dump(os.path.join(FIXTURES, "pipeline", f"gt_{name}.json"), ds_gt)
        for model, hit, strength, fps in [
            ("htc", 0.9, 1, 6),
            ("r50", 0.7, 2, 10),
            ("convnext", 0.75, 2, 8),
        ]:
            p = make_predictions(rng, ds_gt, hit, strength, fps, 0.25, 1.0)
            dump(os.path.join(FIXTURES, "pipeline", f"{model}_{name}.json"), p)
        dump(os.path.join(FIXTURES, "pipeline", f"semantic_{name}.json"),
             make_semantic(rng, ds_gt, dilate=1))
        dump(os.path.join(FIXTURES, "pipeline", f"semantic_gt_{name}.json"),
             make_semantic(rng, ds_gt, dilate=0))

    config = {
        "datasets": [
            {
                "name": name,
                "gt_path": f"gt_{name}.json",
                "prediction_paths": {
                    "htc": f"htc_{name}.json",
                    "r50": f"r50_{name}.json",
                    "convnext": f"convnext_{name}.json",
                },
                "semantic_path": f"semantic_{name}.json",
                "semantic_gt_path": f"semantic_gt_{name}.json",
            }
            for name in ["alpha", "beta"]
        ],
        "stages": ["soft-nms", "semantic-fusion", "ensemble", "evaluate"],
        "semantic": {"tau1": 0.5, "region_rule": "bbox-clip"},
        "ensemble": {
            "weights_mode": "map-normalized",
            "model_maps": {"htc": 47.20, "r50": 40.17, "convnext": 41.86},
            "nms": {"method": "hard", "overlap": "mask-iou", "iou_threshold": 0.5},
        },
        "nms": {"method": "soft-gaussian", "overlap": "box-iou", "sigma": 0.5,
                "prune_threshold": 0.001},
        "eval": {"max_detections": 100, "overlap": "mask"},
        "primary_model": "htc",
        "output_dir": "out",
    }
    dump(os.path.join(FIXTURES, "pipeline", "config.json"), config)


if __name__ == "__main__":
    main()
