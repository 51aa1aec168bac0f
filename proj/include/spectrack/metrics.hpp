#pragma once

#include <vector>

#include "spectrack/volume.hpp"

namespace spectrack {

// Intersection over union of two boxes; 0 when disjoint.
double iou(const BBox& a, const BBox& b);

struct EvalReport {
    double auc = 0.0;        // mean success rate over IoU thresholds 0.00..1.00
    double ao = 0.0;         // average overlap: mean per-frame IoU
    double sr50 = 0.0;       // fraction of frames with IoU > 0.50
    double sr75 = 0.0;       // fraction of frames with IoU > 0.75
    double prec = 0.0;       // fraction with center distance <= 20 px
    double prec_norm = 0.0;  // fraction with per-axis normalized distance <= 0.2
    std::vector<double> per_frame_iou;
};

// Fraction of IoU values strictly greater than tau.
double success_rate(const std::vector<double>& ious, double tau);

// One-pass evaluation. Frame 0 is the initialization frame and is excluded
// from every metric. Absent predictions score IoU 0 and infinite center
// distance. Requires equal lengths, at least 2 frames, and ground truth
// present on every frame.
EvalReport evaluate(const Trajectory& pred, const Trajectory& gt);

}  // namespace spectrack
