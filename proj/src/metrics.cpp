#include "mad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "mad/error.hpp"

namespace mad {

Trajectory2D ground_plane(const CameraTrajectory& traj) {
  Trajectory2D out;
  out.points.reserve(traj.poses.size());
  for (const CameraPose& p : traj.poses) out.points.emplace_back(p.position.x(), p.position.z());
  return out;
}

namespace {

// Direction of the first displacement larger than 1e-9 m, if any.
std::optional<double> initial_heading(const Trajectory2D& t) {
  for (std::size_t i = 1; i < t.points.size(); ++i) {
    const Eigen::Vector2d d = t.points[i] - t.points[0];
    if (d.norm() > 1e-9) return std::atan2(d.y(), d.x());
  }
  return std::nullopt;
}

void require_same_length(const Trajectory2D& a, const Trajectory2D& b) {
  if (a.points.size() != b.points.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                "trajectory lengths differ: " + std::to_string(a.points.size()) + " vs " +
                    std::to_string(b.points.size()));
  }
  if (a.points.empty()) throw Error(ErrorKind::kEmptyInput, "trajectories must have >= 1 point");
}

}  // namespace

Trajectory2D align_first_pose(const Trajectory2D& reference, const Trajectory2D& b) {
  if (reference.points.empty() || b.points.empty()) return b;
  double angle = 0.0;
  const auto ha = initial_heading(reference);
  const auto hb = initial_heading(b);
  if (ha && hb) angle = *ha - *hb;
  const Eigen::Rotation2Dd rot(angle);
  Trajectory2D out;
  out.points.reserve(b.points.size());
  for (const auto& p : b.points) {
    out.points.push_back(reference.points[0] + rot * (p - b.points[0]));
  }
  return out;
}

double ade(const Trajectory2D& a, const Trajectory2D& b, Alignment align) {
  require_same_length(a, b);
  const Trajectory2D* other = &b;
  Trajectory2D aligned;
  if (align == Alignment::kFirstPose) {
    aligned = align_first_pose(a, b);
    other = &aligned;
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < a.points.size(); ++t) sum += (a.points[t] - other->points[t]).norm();
  return sum / static_cast<double>(a.points.size());
}

double min_ade_k(const Trajectory2D& gt, std::span<const Trajectory2D> samples, Alignment align) {
  if (samples.empty()) throw Error(ErrorKind::kEmptyInput, "min_ade_k needs at least one sample");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) best = std::min(best, ade(gt, s, align));
  return best;
}

double apd_k(std::span<const Trajectory2D> samples) {
  if (samples.size() < 2) throw Error(ErrorKind::kInvalidInput, "apd_k needs k >= 2 samples");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      sum += ade(samples[i], samples[j], Alignment::kNone);
      ++pairs;
    }
  }
  return 100.0 * sum / static_cast<double>(pairs);
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double object_control_score(const Track& gt, const std::optional<Track>& detected,
                            int frame_count) {
  double sum = 0.0;
  std::size_t frames = 0;
  for (const TrackEntry& e : gt.entries) {
    if (e.frame < 0 || e.frame >= frame_count) continue;
    ++frames;
    if (!detected) continue;
    if (const BBox* d = detected->box_at(e.frame)) sum += iou(e.box, *d);
  }
  return frames == 0 ? 0.0 : sum / static_cast<double>(frames);
}

double success_rate(std::span<const Answer> answers) {
  if (answers.empty()) throw Error(ErrorKind::kEmptyInput, "success_rate needs at least one answer");
  const auto yes = std::count(answers.begin(), answers.end(), Answer::kYes);
  return static_cast<double>(yes) / static_cast<double>(answers.size());
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance_gaussian(const Eigen::VectorXd& mu_a, const Eigen::MatrixXd& cov_a,
                                 const Eigen::VectorXd& mu_b, const Eigen::MatrixXd& cov_b,
                                 double eps) {
  const Eigen::Index d = mu_a.size();
  if (mu_b.size() != d || cov_a.rows() != d || cov_a.cols() != d || cov_b.rows() != d ||
      cov_b.cols() != d) {
    throw Error(ErrorKind::kShape, "feature dimensions differ");
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd sa = 0.5 * (cov_a + cov_a.transpose()) + eps * eye;
  const Eigen::MatrixXd sb = 0.5 * (cov_b + cov_b.transpose()) + eps * eye;
  const Eigen::MatrixXd root_a = psd_sqrt(sa);
  Eigen::MatrixXd inner = root_a * sb * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  const double tr_cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double dist = (mu_a - mu_b).squaredNorm() + sa.trace() + sb.trace() - 2.0 * tr_cross;
  return std::max(dist, 0.0);
}

double frechet_distance(const FeatureSet& a, const FeatureSet& b, double eps) {
  if (a.cols() != b.cols()) throw Error(ErrorKind::kShape, "feature dimensions differ");
  if (a.rows() < 2 || b.rows() < 2) {
    throw Error(ErrorKind::kInvalidInput, "frechet_distance needs n >= 2 samples per set");
  }
  auto moments = [](const FeatureSet& x) {
    const Eigen::VectorXd mu = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
    return std::pair{mu, cov};
  };
  const auto [mu_a, cov_a] = moments(a);
  const auto [mu_b, cov_b] = moments(b);
  return frechet_distance_gaussian(mu_a, cov_a, mu_b, cov_b, eps);
}

}  // namespace mad
