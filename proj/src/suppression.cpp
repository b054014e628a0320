// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#include "maskfuse/suppression.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <utility>

#include "maskfuse/errors.hpp"

namespace maskfuse {

namespace {

void validate(const NmsConfig& cfg) {
    if (cfg.iou_threshold < 0.0 || cfg.iou_threshold > 1.0)
        throw ConfigError("iou_threshold must be in [0,1]");
    if (cfg.prune_threshold < 0.0 || cfg.prune_threshold > 1.0)
        throw ConfigError("prune_threshold must be in [0,1]");
    if (cfg.method == NmsMethod::SoftGaussian && cfg.sigma <= 0.0)
        throw ConfigError("sigma must be positive");
}

double overlap_of(const Detection& a, const Detection& b, OverlapKind kind) {
    return kind == OverlapKind::BoxIou ? bbox_iou(a.box, b.box) : mask_iou(a.mask, b.mask);
}

// One greedy pass over a single group. Emits (input index, final score) pairs.
void suppress_group(const std::vector<Detection>& dets, const std::vector<size_t>& group,
                    const NmsConfig& cfg, std::vector<std::pair<size_t, double>>& out) {
    std::vector<size_t> alive = group;
    std::vector<double> score(dets.size());
    for (size_t i : group) score[i] = dets[i].score;

    while (!alive.empty()) {
        size_t best = 0;
        for (size_t k = 1; k < alive.size(); ++k) {
            if (score[alive[k]] > score[alive[best]]) best = k;  // tie keeps lower input index
        }
        const size_t m = alive[best];
        out.emplace_back(m, score[m]);
        alive.erase(alive.begin() + static_cast<ptrdiff_t>(best));

        std::vector<size_t> kept;
        kept.reserve(alive.size());
        for (size_t d : alive) {
            const double ov = overlap_of(dets[m], dets[d], cfg.overlap);
            switch (cfg.method) {
                case NmsMethod::Hard:
                    if (ov > cfg.iou_threshold) continue;
                    break;
                case NmsMethod::SoftLinear:
                    if (ov > cfg.iou_threshold) score[d] *= (1.0 - ov);
                    break;
                case NmsMethod::SoftGaussian:
                    score[d] *= std::exp(-(ov * ov) / cfg.sigma);
                    break;
            }
            if (score[d] < cfg.prune_threshold) continue;
            kept.push_back(d);
        }
        alive = std::move(kept);
    }
}

}  // namespace

std::vector<Detection> suppress(const std::vector<Detection>& detections, const NmsConfig& cfg) {
    validate(cfg);
    if (detections.empty()) return {};

    std::vector<std::vector<size_t>> groups;
    if (cfg.group) {
        std::map<std::pair<int64_t, int>, std::vector<size_t>> by_key;
        for (size_t i = 0; i < detections.size(); ++i) {
            by_key[{detections[i].image_id, detections[i].category_id}].push_back(i);
        }
        groups.reserve(by_key.size());
        for (auto& [key, idx] : by_key) groups.push_back(std::move(idx));
    } else {
        for (const auto& d : detections) {
            if (d.image_id != detections.front().image_id)
                throw ContractError("mixed image_ids with grouping disabled");
        }
        groups.emplace_back();
        groups.front().resize(detections.size());
        for (size_t i = 0; i < detections.size(); ++i) groups.front()[i] = i;
    }

    std::vector<std::vector<std::pair<size_t, double>>> per_group(groups.size());
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (int64_t g = 0; g < static_cast<int64_t>(groups.size()); ++g) {
        try {
            suppress_group(detections, groups[static_cast<size_t>(g)], cfg,
                           per_group[static_cast<size_t>(g)]);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    std::vector<std::pair<size_t, double>> kept;
    for (const auto& pg : per_group) kept.insert(kept.end(), pg.begin(), pg.end());
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<Detection> out;
    out.reserve(kept.size());
    for (const auto& [idx, s] : kept) {
        Detection d = detections[idx];
        d.score = s;
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace maskfuse
