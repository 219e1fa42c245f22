#include <algorithm>
#include <numeric>

#include "facescan/errors.hpp"
#include "facescan/nms.hpp"

namespace facescan {

double iou(const Box& a, const Box& b) {
    const double ix = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const double iy = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    const double inter = (ix > 0 && iy > 0) ? ix * iy : 0.0;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

// score descending, original index ascending on ties
std::vector<int> rank_by_score(std::span<const Detection> dets) {
    std::vector<int> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        return a < b;
    });
    return order;
}

}  // namespace

std::vector<Detection> nms_max(std::vector<Detection> dets, double overlap_threshold) {
    const std::vector<int> order = rank_by_score(dets);
    std::vector<char> removed(dets.size(), 0);
    std::vector<Detection> kept;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const int a = order[i];
        if (removed[a]) continue;
        kept.push_back(dets[a]);
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const int b = order[j];
            if (!removed[b] && iou(dets[a].box, dets[b].box) > overlap_threshold) removed[b] = 1;
        }
    }
    return kept;
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void merge(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

std::vector<std::vector<int>> cluster_by_overlap(std::span<const Detection> dets,
                                                 double overlap_threshold) {
    UnionFind uf(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i)
        for (std::size_t j = i + 1; j < dets.size(); ++j)
            if (iou(dets[i].box, dets[j].box) >= overlap_threshold)
                uf.merge(static_cast<int>(i), static_cast<int>(j));

    // root indices are cluster minima, so ascending roots give the ordering
    std::vector<std::vector<int>> clusters;
    std::vector<int> slot(dets.size(), -1);
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const int root = uf.find(static_cast<int>(i));
        if (slot[root] < 0) {
            slot[root] = static_cast<int>(clusters.size());
            clusters.emplace_back();
        }
        clusters[slot[root]].push_back(static_cast<int>(i));
    }
    return clusters;
}

std::vector<Detection> nms_avg(std::vector<Detection> dets, const OverlapConfig& cfg) {
    if (cfg.strategy != NmsStrategy::Avg)
        fail(ErrorKind::InvalidArgument, "nms_avg called with a non-avg config");

    std::vector<Detection> strong;
    for (const Detection& d : dets)
        if (d.score >= cfg.confidence_floor) strong.push_back(d);

    // Re-rank by (score desc, original index) so cluster ordering and the
    // accumulation order of the averages are independent of input order.
    {
        const std::vector<int> order = rank_by_score(strong);
        std::vector<Detection> ranked;
        ranked.reserve(strong.size());
        for (int i : order) ranked.push_back(strong[i]);
        strong = std::move(ranked);
    }

    std::vector<Detection> out;
    for (const std::vector<int>& cluster : cluster_by_overlap(strong, cfg.overlap_threshold)) {
        double top = 0.0;
        for (int i : cluster) top = std::max(top, strong[i].score);
        const double cutoff = cfg.keep_ratio * top;
        double x = 0, y = 0, w = 0, h = 0;
        int n = 0, level = 0;
        for (int i : cluster) {
            if (strong[i].score < cutoff) continue;
            x += strong[i].box.x;
            y += strong[i].box.y;
            w += strong[i].box.w;
            h += strong[i].box.h;
            if (n == 0) level = strong[i].level;
            ++n;
        }
        out.push_back({{x / n, y / n, w / n, h / n}, top, level});
    }
    return out;
}

std::vector<Detection> suppress(std::vector<Detection> dets, const OverlapConfig& cfg) {
    return cfg.strategy == NmsStrategy::Max ? nms_max(std::move(dets), cfg.overlap_threshold)
                                            : nms_avg(std::move(dets), cfg);
}

}  // namespace facescan
