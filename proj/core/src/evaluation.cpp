#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "facescan/detector.hpp"
#include "facescan/errors.hpp"
#include "facescan/evaluation.hpp"
#include "facescan/nms.hpp"

namespace facescan {

std::vector<GroundTruth> parse_rect_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path);
    std::map<std::string, std::size_t> slot;
    std::vector<GroundTruth> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        std::string id;
        double x, y, w, h;
        if (!(ss >> id >> x >> y >> w >> h))
            fail(ErrorKind::Parse,
                 path + ":" + std::to_string(line_no) + ": want 'image-id x y w h'");
        if (!(w > 0) || !(h > 0))
            fail(ErrorKind::Parse,
                 path + ":" + std::to_string(line_no) + ": box needs positive width and height");
        auto [it, fresh] = slot.try_emplace(id, out.size());
        if (fresh) out.push_back({id, {}});
        out[it->second].boxes.push_back({x, y, w, h});
    }
    return out;
}

std::vector<GroundTruth> parse_fddb_ellipses(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path);
    std::vector<GroundTruth> out;
    std::string line;
    while (std::getline(in, line)) {
        // image path line
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        const std::string image_id = line;
        long count = 0;
        if (!std::getline(in, line) || std::sscanf(line.c_str(), "%ld", &count) != 1 || count < 0)
            fail(ErrorKind::Parse, path + ": missing face count after '" + image_id + "'");
        GroundTruth gt{image_id, {}};
        for (long i = 0; i < count; ++i) {
            double ra, rb, angle, cx, cy, label;
            if (!std::getline(in, line) ||
                std::sscanf(line.c_str(), "%lf %lf %lf %lf %lf %lf", &ra, &rb, &angle, &cx, &cy,
                            &label) != 6)
                fail(ErrorKind::Parse, path + ": '" + image_id + "' announces " +
                                           std::to_string(count) + " faces but ellipse " +
                                           std::to_string(i + 1) + " is missing or malformed");
            const double sin_a = std::sin(angle);
            const double cos_a = std::cos(angle);
            const double half_w = std::sqrt(ra * ra * sin_a * sin_a + rb * rb * cos_a * cos_a);
            const double half_h = std::sqrt(ra * ra * cos_a * cos_a + rb * rb * sin_a * sin_a);
            gt.boxes.push_back({cx - half_w, cy - half_h, 2 * half_w, 2 * half_h});
        }
        out.push_back(std::move(gt));
    }
    return out;
}

std::vector<LabeledDetection> match_detections(std::span<const Detection> dets,
                                               std::span<const Box> gts, double iou_min) {
    std::vector<int> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        return a < b;
    });

    std::vector<char> taken(gts.size(), 0);
    std::vector<LabeledDetection> labeled;
    labeled.reserve(dets.size());
    for (int idx : order) {
        LabeledDetection ld;
        ld.det = dets[idx];
        double best = 0.0;
        int best_gt = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) continue;
            const double v = iou(dets[idx].box, gts[g]);
            if (v > best) {
                best = v;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0 && best >= iou_min) {
            ld.tp = true;
            ld.gt_index = best_gt;
            taken[best_gt] = 1;
        }
        labeled.push_back(std::move(ld));
    }
    return labeled;
}

PRCurve pr_curve(std::vector<LabeledDetection> pooled, long num_gt) {
    if (num_gt < 1) fail(ErrorKind::InvalidArgument, "precision-recall needs num_gt >= 1");
    std::stable_sort(pooled.begin(), pooled.end(), [](const LabeledDetection& a,
                                                      const LabeledDetection& b) {
        return a.det.score > b.det.score;
    });
    PRCurve curve;
    curve.num_gt = num_gt;
    curve.points.reserve(pooled.size());
    long tp = 0, fp = 0;
    for (const LabeledDetection& ld : pooled) {
        (ld.tp ? tp : fp) += 1;
        curve.points.push_back({ld.det.score, static_cast<double>(tp) / num_gt,
                                static_cast<double>(tp) / (tp + fp)});
    }
    return curve;
}

double average_precision(const PRCurve& curve) {
    if (curve.points.empty()) fail(ErrorKind::InvalidArgument, "empty precision-recall curve");
    // precision upper envelope, swept from high recall down
    const std::size_t n = curve.points.size();
    std::vector<double> envelope(n);
    double running = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        running = std::max(running, curve.points[i].precision);
        envelope[i] = running;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ap += (curve.points[i].recall - prev_recall) * envelope[i];
        prev_recall = curve.points[i].recall;
    }
    return ap;
}

void write_pr_csv(std::ostream& out, const PRCurve& curve) {
    out << "threshold,recall,precision\n";
    char buf[96];
    for (const PRPoint& p : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", p.threshold, p.recall, p.precision);
        out << buf;
    }
}

EvalReport evaluate(const std::string& det_path, const std::string& gt_path, GtFormat format,
                    double iou_min, std::ostream* warn) {
    const std::vector<NamedDetection> named = read_detections_jsonl(det_path);
    const std::vector<GroundTruth> gts = format == GtFormat::Rect
                                             ? parse_rect_annotations(gt_path)
                                             : parse_fddb_ellipses(gt_path);

    std::map<std::string, std::vector<Detection>> dets_by_image;
    for (const NamedDetection& d : named) dets_by_image[d.image_id].push_back(d.det);
    std::map<std::string, const GroundTruth*> gt_by_image;
    for (const GroundTruth& g : gts) gt_by_image[g.image_id] = &g;

    EvalReport report;
    for (const GroundTruth& g : gts) report.num_gt += static_cast<long>(g.boxes.size());
    if (report.num_gt == 0)
        fail(ErrorKind::InvalidArgument, gt_path + ": no ground-truth boxes to evaluate against");

    if (warn) {
        for (const auto& [id, _] : dets_by_image)
            if (!gt_by_image.count(id))
                *warn << "warning: detections for '" << id
                      << "' have no ground-truth record; they all count as false positives\n";
        for (const auto& [id, _] : gt_by_image)
            if (!dets_by_image.count(id))
                *warn << "warning: no detections for annotated image '" << id << "'\n";
    }

    std::set<std::string> ids;
    for (const auto& [id, _] : dets_by_image) ids.insert(id);
    for (const auto& [id, _] : gt_by_image) ids.insert(id);
    report.images = static_cast<long>(ids.size());

    std::vector<LabeledDetection> pooled;
    for (const std::string& id : ids) {
        const auto dit = dets_by_image.find(id);
        if (dit == dets_by_image.end()) continue;
        static const std::vector<Box> kNoBoxes;
        const std::vector<Box>& boxes =
            gt_by_image.count(id) ? gt_by_image.at(id)->boxes : kNoBoxes;
        std::vector<LabeledDetection> labeled = match_detections(dit->second, boxes, iou_min);
        pooled.insert(pooled.end(), labeled.begin(), labeled.end());
    }
    report.num_detections = static_cast<long>(pooled.size());
    for (const LabeledDetection& ld : pooled) (ld.tp ? report.tp : report.fp) += 1;

    if (!pooled.empty()) {
        report.curve = pr_curve(std::move(pooled), report.num_gt);
        report.ap = average_precision(report.curve);
    } else {
        report.curve.num_gt = report.num_gt;
        report.ap = 0.0;
    }
    return report;
}

void write_report(std::ostream& out, const EvalReport& report) {
    char buf[64];
    out << "images " << report.images << "\n";
    out << "gt " << report.num_gt << "\n";
    out << "detections " << report.num_detections << "\n";
    out << "tp " << report.tp << "\n";
    out << "fp " << report.fp << "\n";
    std::snprintf(buf, sizeof(buf), "ap %.6f\n", report.ap);
    out << buf;
}

}  // namespace facescan
