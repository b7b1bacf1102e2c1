#pragma once

// Evaluation math: trajectory accuracy and diversity, box overlap, control
// fidelity, VQA success rate and the Frechet distance between Gaussian fits
// of two feature sets.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mad/core_types.hpp"

namespace mad {

// Ground-plane trajectory sampled at a fixed timestep, in meters.
struct Trajectory2D {
  std::vector<Eigen::Vector2d> points;
};

// Ground-plane projection of a camera trajectory: world (x, z); the vertical
// axis (y) is dropped.
Trajectory2D ground_plane(const CameraTrajectory& traj);

enum class Alignment { kNone, kFirstPose };

// Mean Euclidean distance between corresponding points. With kFirstPose, b is
// first moved rigidly so that its first point and initial heading (direction
// of its first non-zero displacement) coincide with a's.
double ade(const Trajectory2D& a, const Trajectory2D& b, Alignment align = Alignment::kNone);

// Rigid transform applied by kFirstPose alignment, exposed for reuse.
Trajectory2D align_first_pose(const Trajectory2D& reference, const Trajectory2D& b);

// min over samples of ade(gt, sample, align). Meters.
double min_ade_k(const Trajectory2D& gt, std::span<const Trajectory2D> samples,
                 Alignment align = Alignment::kFirstPose);

// Mean unaligned ADE over all unordered sample pairs, in centimeters.
double apd_k(std::span<const Trajectory2D> samples);

double iou(const BBox& a, const BBox& b);

// Mean IoU over the ground-truth entries with frame < frame_count; frames the
// detected track misses (or a missing track) contribute 0.
double object_control_score(const Track& gt, const std::optional<Track>& detected,
                            int frame_count);

enum class Answer { kNo, kYes };

double success_rate(std::span<const Answer> answers);

// n feature vectors (rows) of dimension d (columns).
using FeatureSet = Eigen::MatrixXd;

double frechet_distance(const FeatureSet& a, const FeatureSet& b, double eps = 1e-6);

// Gaussian form used by frechet_distance, for callers that already hold
// moments.
double frechet_distance_gaussian(const Eigen::VectorXd& mu_a, const Eigen::MatrixXd& cov_a,
                                 const Eigen::VectorXd& mu_b, const Eigen::MatrixXd& cov_b,
                                 double eps = 1e-6);

}  // namespace mad
