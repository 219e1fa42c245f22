#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "facescan/geometry.hpp"

namespace facescan {

struct GroundTruth {
    std::string image_id;
    std::vector<Box> boxes;
};

// Text lines "image-id x y w h"; lines sharing an id merge into one record.
std::vector<GroundTruth> parse_rect_annotations(const std::string& path);

// FDDB fold layout: image path line, count line, then count ellipse lines
// "major_radius minor_radius angle cx cy 1" (angle in radians, major axis
// vertical at angle 0). Each ellipse becomes its tight bounding rectangle:
//   half_w = sqrt(ra^2 sin^2 a + rb^2 cos^2 a)
//   half_h = sqrt(ra^2 cos^2 a + rb^2 sin^2 a)
std::vector<GroundTruth> parse_fddb_ellipses(const std::string& path);

enum class GtFormat { Rect, Fddb };

struct LabeledDetection {
    Detection det;
    bool tp = false;
    int gt_index = -1;  // matched ground-truth box, -1 for false positives
};

// Greedy matching by descending score: a detection is a true positive when
// its best-IOU unmatched ground-truth box reaches iou_min; that box is then
// spent. Ties break toward earlier input index (detections) and lower index
// (ground truth).
std::vector<LabeledDetection> match_detections(std::span<const Detection> dets,
                                               std::span<const Box> gts, double iou_min);

struct PRPoint {
    double threshold = 0;  // score of the detection entering at this prefix
    double recall = 0;
    double precision = 0;
};

struct PRCurve {
    std::vector<PRPoint> points;
    long num_gt = 0;
};

// Pooled detections sorted by descending score; one point per prefix with
// cumulative precision TP/(TP+FP) and recall TP/num_gt.
PRCurve pr_curve(std::vector<LabeledDetection> pooled, long num_gt);

// All-points interpolated AP: integral of the precision upper envelope over
// recall.
double average_precision(const PRCurve& curve);

void write_pr_csv(std::ostream& out, const PRCurve& curve);

struct EvalReport {
    long images = 0;
    long num_gt = 0;
    long num_detections = 0;
    long tp = 0;
    long fp = 0;
    double ap = 0;
    PRCurve curve;
};

// Detection JSON-lines vs a ground-truth file; per-image matching pooled
// into one curve. Ids present on only one side are reported on `warn`.
EvalReport evaluate(const std::string& det_path, const std::string& gt_path, GtFormat format,
                    double iou_min, std::ostream* warn = nullptr);

void write_report(std::ostream& out, const EvalReport& report);

}  // namespace facescan
