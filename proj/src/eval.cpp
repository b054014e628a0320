// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#include "maskfuse/eval.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "maskfuse/errors.hpp"

namespace maskfuse {

MatchRecords match_detections(const std::vector<double>& iou_matrix, size_t n_dets, size_t n_gts,
                              double iou_t) {
    MatchRecords rec;
    rec.det_match.assign(n_dets, -1);
    rec.gt_matched.assign(n_gts, 0);
    const double floor_t = std::min(iou_t, 1.0 - 1e-10);
    for (size_t d = 0; d < n_dets; ++d) {
        double best = floor_t;
        int m = -1;
        for (size_t g = 0; g < n_gts; ++g) {
            if (rec.gt_matched[g]) continue;
            const double v = iou_matrix[d * n_gts + g];
            if (v < best) continue;
            best = v;
            m = static_cast<int>(g);
        }
        if (m >= 0) {
            rec.det_match[d] = m;
            rec.gt_matched[static_cast<size_t>(m)] = 1;
        }
    }
    return rec;
}

double average_precision(const std::vector<double>& det_scores,
                         const std::vector<uint8_t>& det_is_tp, size_t n_gt) {
    if (n_gt == 0) return 0.0;
    const size_t nd = det_scores.size();
    if (nd == 0) return 0.0;

    std::vector<size_t> order(nd);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return det_scores[a] > det_scores[b]; });

    std::vector<double> recall(nd), precision(nd);
    double tp = 0, fp = 0;
    for (size_t i = 0; i < nd; ++i) {
        if (det_is_tp[order[i]]) ++tp; else ++fp;
        recall[i] = tp / static_cast<double>(n_gt);
        precision[i] = tp / (tp + fp);
    }
    // Make precision non-increasing from right to left.
    for (size_t i = nd - 1; i > 0; --i) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }

    double sum = 0.0;
    for (int i = 0; i < EvalParams::kRecallPoints; ++i) {
        const double r = i / 100.0;
        const auto it = std::lower_bound(recall.begin(), recall.end(), r);
        if (it != recall.end()) sum += precision[static_cast<size_t>(it - recall.begin())];
    }
    return sum / EvalParams::kRecallPoints;
}

namespace {

// Matching results for one (image, category) cell.
struct CellResult {
    std::vector<double> scores;             // score-sorted, truncated to max_detections
    std::vector<std::vector<uint8_t>> tp;   // [threshold][detection]
    size_t n_gt = 0;
};

}  // namespace

EvalResult evaluate(const std::vector<Detection>& predictions, const GroundTruth& gt,
                    const EvalParams& params) {
    std::unordered_map<int64_t, size_t> image_rank;
    std::vector<int64_t> image_ids;
    {
        std::set<int64_t> ids;
        for (const auto& im : gt.images) ids.insert(im.id);
        for (int64_t id : ids) {
            image_rank[id] = image_ids.size();
            image_ids.push_back(id);
        }
    }
    std::set<int> category_ids;
    for (const auto& c : gt.categories) category_ids.insert(c.id);

    std::string offenders;
    for (const auto& p : predictions) {
        if (!image_rank.count(p.image_id))
            offenders += " image:" + std::to_string(p.image_id);
        if (!category_ids.count(p.category_id))
            offenders += " category:" + std::to_string(p.category_id);
    }
    if (!offenders.empty()) throw InputError("unknown ids in predictions:" + offenders);

    const size_t n_img = image_ids.size();
    const std::vector<int> cats(category_ids.begin(), category_ids.end());
    const size_t n_cat = cats.size();
    const size_t n_thr = params.iou_thresholds.size();
    std::unordered_map<int, size_t> cat_rank;
    for (size_t k = 0; k < n_cat; ++k) cat_rank[cats[k]] = k;

    // Bucket annotations and predictions per (category, image) cell.
    std::vector<std::vector<size_t>> gt_cell(n_cat * n_img), det_cell(n_cat * n_img);
    for (size_t i = 0; i < gt.annotations.size(); ++i) {
        const auto& a = gt.annotations[i];
        gt_cell[cat_rank.at(a.category_id) * n_img + image_rank.at(a.image_id)].push_back(i);
    }
    for (size_t i = 0; i < predictions.size(); ++i) {
        const auto& p = predictions[i];
        det_cell[cat_rank.at(p.category_id) * n_img + image_rank.at(p.image_id)].push_back(i);
    }

    const bool masks = params.overlap == OverlapKind::MaskIou;
    std::vector<BinaryMask> gt_masks;
    if (masks) {
        gt_masks.resize(gt.annotations.size());
#pragma omp parallel for schedule(dynamic)
        for (int64_t i = 0; i < static_cast<int64_t>(gt.annotations.size()); ++i) {
            gt_masks[static_cast<size_t>(i)] =
                rle_decode(gt.annotations[static_cast<size_t>(i)].mask);
        }
    }

    std::vector<CellResult> cells(n_cat * n_img);
#pragma omp parallel for schedule(dynamic) collapse(2)
    for (int64_t k = 0; k < static_cast<int64_t>(n_cat); ++k) {
        for (int64_t im = 0; im < static_cast<int64_t>(n_img); ++im) {
            const size_t cell = static_cast<size_t>(k) * n_img + static_cast<size_t>(im);
            const auto& gts = gt_cell[cell];
            auto dts = det_cell[cell];
            CellResult& res = cells[cell];
            res.n_gt = gts.size();
            if (dts.empty()) continue;

            std::stable_sort(dts.begin(), dts.end(), [&](size_t a, size_t b) {
                return predictions[a].score > predictions[b].score;
            });
            if (dts.size() > static_cast<size_t>(params.max_detections))
                dts.resize(static_cast<size_t>(params.max_detections));

            const size_t nd = dts.size(), ng = gts.size();
            res.scores.resize(nd);
            for (size_t d = 0; d < nd; ++d) res.scores[d] = predictions[dts[d]].score;

            std::vector<double> ious(nd * ng);
            for (size_t d = 0; d < nd; ++d) {
                for (size_t g = 0; g < ng; ++g) {
                    ious[d * ng + g] =
                        masks ? mask_iou(predictions[dts[d]].mask, gt_masks[gts[g]])
                              : bbox_iou(predictions[dts[d]].box, gt.annotations[gts[g]].box);
                }
            }

            res.tp.assign(n_thr, std::vector<uint8_t>(nd, 0));
            for (size_t t = 0; t < n_thr; ++t) {
                const MatchRecords rec =
                    match_detections(ious, nd, ng, params.iou_thresholds[t]);
                for (size_t d = 0; d < nd; ++d) res.tp[t][d] = rec.det_match[d] >= 0;
            }
        }
    }

    // Per-category accumulation over the image-ordered concatenation.
    double ap_sum = 0.0, ar_sum = 0.0;
    size_t n_counted = 0;
    for (size_t k = 0; k < n_cat; ++k) {
        size_t npig = 0;
        std::vector<double> scores;
        std::vector<std::vector<uint8_t>> tp(n_thr);
        for (size_t im = 0; im < n_img; ++im) {
            const CellResult& res = cells[k * n_img + im];
            npig += res.n_gt;
            scores.insert(scores.end(), res.scores.begin(), res.scores.end());
            for (size_t t = 0; t < n_thr; ++t) {
                if (!res.tp.empty())
                    tp[t].insert(tp[t].end(), res.tp[t].begin(), res.tp[t].end());
            }
        }
        if (npig == 0) continue;  // category absent from ground truth
        n_counted += n_thr;
        for (size_t t = 0; t < n_thr; ++t) {
            ap_sum += average_precision(scores, tp[t], npig);
            size_t matched = 0;
            for (uint8_t v : tp[t]) matched += v;
            ar_sum += static_cast<double>(matched) / static_cast<double>(npig);
        }
    }

    EvalResult out;
    if (n_counted > 0) {
        out.map_percent = 100.0 * ap_sum / static_cast<double>(n_counted);
        out.mar_percent = 100.0 * ar_sum / static_cast<double>(n_counted);
    }
    return out;
}

double semantic_mean_iou(const std::vector<SemanticMap>& pred_maps,
                         const std::vector<SemanticMap>& gt_maps) {
    std::unordered_map<int64_t, const SemanticMap*> gt_by_id;
    for (const auto& g : gt_maps) gt_by_id[g.image_id] = &g;
    if (pred_maps.size() != gt_maps.size())
        throw InputError("semantic_mean_iou: prediction/ground-truth count mismatch");

    int64_t inter[2] = {0, 0}, uni[2] = {0, 0};
    for (const auto& p : pred_maps) {
        auto it = gt_by_id.find(p.image_id);
        if (it == gt_by_id.end())
            throw InputError("semantic_mean_iou: unpaired image " + std::to_string(p.image_id));
        const BinaryMask& gm = it->second->mask;
        if (gm.height != p.mask.height || gm.width != p.mask.width)
            throw ShapeError("semantic_mean_iou: dimension mismatch for image " +
                             std::to_string(p.image_id));
        for (size_t i = 0; i < gm.bits.size(); ++i) {
            const uint8_t pv = p.mask.bits[i], gv = gm.bits[i];
            inter[1] += pv & gv;
            uni[1] += pv | gv;
            inter[0] += (pv | gv) ^ 1;
            uni[0] += (pv & gv) ^ 1;
        }
    }
    double sum = 0.0;
    int classes = 0;
    for (int c = 0; c < 2; ++c) {
        if (uni[c] == 0) continue;  // class absent everywhere
        sum += static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
        ++classes;
    }
    return classes > 0 ? 100.0 * sum / classes : 0.0;
}

MetricsReport aggregate_report(const std::map<std::string, DatasetMetrics>& per_dataset,
                               const std::map<std::string, double>& semantic_mious) {
    if (per_dataset.empty()) throw InputError("aggregate_report: no datasets");
    MetricsReport rep;
    rep.per_dataset = per_dataset;
    rep.semantic_miou = semantic_mious;
    for (const auto& [name, m] : per_dataset) {
        rep.average_map += m.map_percent;
        rep.average_mar += m.mar_percent;
    }
    rep.average_map /= static_cast<double>(per_dataset.size());
    rep.average_mar /= static_cast<double>(per_dataset.size());
    rep.combined = (rep.average_map + rep.average_mar) / 2.0;
    return rep;
}

}  // namespace maskfuse
