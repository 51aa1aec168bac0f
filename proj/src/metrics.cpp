#include "spectrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spectrack/errors.hpp"

namespace spectrack {

double iou(const BBox& a, const BBox& b) {
    const int ix_min = std::max(a.x_min, b.x_min);
    const int iy_min = std::max(a.y_min, b.y_min);
    const int ix_max = std::min(a.x_max, b.x_max);
    const int iy_max = std::min(a.y_max, b.y_max);
    const long long iw = ix_max - ix_min;
    const long long ih = iy_max - iy_min;
    if (iw <= 0 || ih <= 0) return 0.0;
    const long long inter = iw * ih;
    const long long uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double success_rate(const std::vector<double>& ious, double tau) {
    if (ious.empty()) {
        throw ValidationError("success rate needs at least one overlap value");
    }
    std::size_t hits = 0;
    for (double v : ious) {
        if (v > tau) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ious.size());
}

EvalReport evaluate(const Trajectory& pred, const Trajectory& gt) {
    if (pred.size() != gt.size()) {
        throw ValidationError("prediction and ground truth lengths differ");
    }
    if (gt.size() < 2) {
        throw ValidationError("evaluation needs at least 2 frames (frame 0 is excluded)");
    }
    for (std::size_t t = 0; t < gt.size(); ++t) {
        if (!gt.boxes[t].has_value()) {
            throw ValidationError("ground truth box missing at frame " + std::to_string(t));
        }
        if (gt.boxes[t]->width() <= 0 || gt.boxes[t]->height() <= 0) {
            throw ValidationError("ground truth box degenerate at frame " + std::to_string(t));
        }
    }

    EvalReport report;
    std::vector<double> dist;
    std::vector<double> dist_norm;
    const std::size_t frames = gt.size();
    report.per_frame_iou.reserve(frames - 1);
    dist.reserve(frames - 1);
    dist_norm.reserve(frames - 1);
    for (std::size_t t = 1; t < frames; ++t) {
        const BBox& g = *gt.boxes[t];
        if (!pred.boxes[t].has_value()) {
            report.per_frame_iou.push_back(0.0);
            dist.push_back(std::numeric_limits<double>::infinity());
            dist_norm.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        const BBox& p = *pred.boxes[t];
        report.per_frame_iou.push_back(iou(p, g));
        const double dx = p.center_x() - g.center_x();
        const double dy = p.center_y() - g.center_y();
        dist.push_back(std::sqrt(dx * dx + dy * dy));
        const double nx = dx / g.width();
        const double ny = dy / g.height();
        dist_norm.push_back(std::sqrt(nx * nx + ny * ny));
    }

    double auc_sum = 0.0;
    for (int k = 0; k <= 100; ++k) {
        auc_sum += success_rate(report.per_frame_iou, k / 100.0);
    }
    report.auc = auc_sum / 101.0;

    double iou_sum = 0.0;
    for (double v : report.per_frame_iou) iou_sum += v;
    report.ao = iou_sum / static_cast<double>(report.per_frame_iou.size());
    report.sr50 = success_rate(report.per_frame_iou, 0.50);
    report.sr75 = success_rate(report.per_frame_iou, 0.75);

    std::size_t prec_hits = 0;
    std::size_t norm_hits = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] <= 20.0) ++prec_hits;
        if (dist_norm[i] <= 0.2) ++norm_hits;
    }
    report.prec = static_cast<double>(prec_hits) / static_cast<double>(dist.size());
    report.prec_norm = static_cast<double>(norm_hits) / static_cast<double>(dist_norm.size());
    return report;
}

}  // namespace spectrack
