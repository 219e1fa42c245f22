#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "facescan/bbox_regression.hpp"
#include "facescan/image.hpp"
#include "facescan/net.hpp"
#include "facescan/nms.hpp"
#include "facescan/pyramid.hpp"

namespace facescan {

// Face-probability grid for one pyramid level, plus the geometry needed to
// map cells back to original-image windows.
struct HeatMap {
    int rows = 0;
    int cols = 0;
    std::vector<double> scores;  // row-major, values in [0, 1]
    ScanGeometry geometry;
    double level_scale = 1.0;

    double at(int r, int c) const { return scores[static_cast<std::size_t>(r) * cols + c]; }
};

struct DetectConfig {
    PyramidConfig pyramid;       // min_dim is filled from the net when 0
    double score_floor = 0.01;   // cells below this never become detections
    OverlapConfig nms = OverlapConfig::avg_default();
    const RegressorModel* regressor = nullptr;  // optional box refinement, applied before NMS
    int threads = 1;
};

// Face-class channel of a fully-convolutional forward pass over one level.
// Returns nothing when the level is smaller than the scan window.
std::optional<HeatMap> heatmap(const NetworkSpec& net, const PyramidLevel& level);

// Cell (r, c) covers the level-coordinate window (c*stride, r*stride,
// window, window); boxes are divided by the level scale and clamped to the
// original image bounds. Scores copy through unchanged.
std::vector<Detection> cells_to_boxes(const HeatMap& hm, double score_floor, int original_width,
                                      int original_height);

// Full pipeline: pyramid, per-level heat maps, box mapping, optional box
// regression, suppression. Output is sorted by descending score and is
// deterministic for fixed inputs regardless of thread count.
std::vector<Detection> detect(const NetworkSpec& net, const Image& img, const DetectConfig& cfg,
                              std::ostream* log = nullptr);

// Like detect() but also hands back every level's heat map (for rendering).
std::vector<Detection> detect_with_heatmaps(const NetworkSpec& net, const Image& img,
                                            const DetectConfig& cfg, std::vector<HeatMap>& maps,
                                            std::ostream* log = nullptr);

// Grayscale rendering: score s becomes pixel round(255 * s).
Image render_heatmap(const HeatMap& hm);

// One JSON record per line: {"image":...,"x":...,"y":...,"w":...,"h":...,"score":...}
void write_detections_jsonl(std::ostream& out, const std::string& image_id,
                            std::span<const Detection> dets);

struct NamedDetection {
    std::string image_id;
    Detection det;
};

std::vector<NamedDetection> read_detections_jsonl(const std::string& path);

}  // namespace facescan
