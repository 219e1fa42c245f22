#pragma once

#include <span>
#include <vector>

#include "facescan/geometry.hpp"

namespace facescan {

enum class NmsStrategy { Max, Avg };

struct OverlapConfig {
    NmsStrategy strategy = NmsStrategy::Avg;
    double overlap_threshold = 0.2;
    double confidence_floor = 0.2;  // avg: drop weaker windows up front
    double keep_ratio = 0.9;        // avg: within-cluster score cutoff
    // The operating points the strategies were tuned at: 0.3 for max, 0.2 for avg.
    static OverlapConfig max_default() { return {NmsStrategy::Max, 0.3, 0.2, 0.9}; }
    static OverlapConfig avg_default() { return {NmsStrategy::Avg, 0.2, 0.2, 0.9}; }
};

// Intersection over union; 0 when the union is empty.
double iou(const Box& a, const Box& b);

// Greedy suppression: keep the strongest remaining window, delete everything
// with IOU strictly above `overlap_threshold` against it. Ties in score break
// toward the earlier input index. Survivors keep box and score untouched.
std::vector<Detection> nms_max(std::vector<Detection> dets, double overlap_threshold);

// Connected components of the IOU >= threshold graph. Each cluster lists
// input indices in ascending order; clusters are ordered by smallest member.
std::vector<std::vector<int>> cluster_by_overlap(std::span<const Detection> dets,
                                                 double overlap_threshold);

// Cluster-averaging suppression: drop windows under the confidence floor,
// cluster the rest, drop cluster members scoring under keep_ratio times the
// cluster maximum, then emit one detection per cluster whose box is the
// coordinate-wise mean of the survivors and whose score is the cluster max.
std::vector<Detection> nms_avg(std::vector<Detection> dets, const OverlapConfig& cfg);

// Dispatch on cfg.strategy.
std::vector<Detection> suppress(std::vector<Detection> dets, const OverlapConfig& cfg);

}  // namespace facescan
