// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>

#include "vflow/grid.hpp"

namespace vflow {

// Soft front-view silhouette. Pixel (i, j) is S = 1 - exp(-kappa * sum_k p),
// the absorption a ray picks up crossing the occupancy column under it.
template <typename Scalar>
struct Silhouette {
  Eigen::MatrixX<Scalar> raster;
  Scalar kappa = Scalar(0.25);
};

inline constexpr double kBceEps = 1e-8;

// Differentiable occupancy silhouette of a structure latent.
template <typename Scalar>
Silhouette<Scalar> render_silhouette(const StructureLatent<Scalar>& latent,
                                     Scalar kappa = Scalar(0.25)) {
  require_arg(kappa > Scalar(0), "render_silhouette: kappa must be positive");
  const int r = latent.resolution;
  require_arg(r > 0 && latent.logits.size() == static_cast<Index>(r) * r * r,
              "render_silhouette: latent shape mismatch");
  Eigen::ArrayX<Scalar> p = vflow::logistic(latent.logits);
  // Columns along k are contiguous, so the grid maps onto an (R^2 x R)
  // row-major matrix whose row sums are the per-pixel column sums.
  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> cols(
      p.data(), static_cast<Index>(r) * r, r);
  Eigen::VectorX<Scalar> sums = cols.rowwise().sum();
  Silhouette<Scalar> s;
  s.kappa = kappa;
  s.raster.resize(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      s.raster(i, j) = Scalar(1) - std::exp(-kappa * sums[static_cast<Index>(i) * r + j]);
  return s;
}

// Mean binary cross-entropy between a rendered silhouette and a target
// raster, with both log arguments floored at kBceEps.
template <typename Scalar>
Scalar bce_energy(const Eigen::MatrixX<Scalar>& rendered, const Eigen::MatrixX<Scalar>& target) {
  require_arg(rendered.rows() == target.rows() && rendered.cols() == target.cols(),
              "bce_energy: raster shape mismatch");
  require_arg(rendered.size() > 0, "bce_energy: empty raster");
  Scalar acc = 0;
  for (Index n = 0; n < rendered.size(); ++n) {
    Scalar s = rendered.data()[n];
    Scalar m = target.data()[n];
    acc -= m * std::log(s + Scalar(kBceEps)) + (Scalar(1) - m) * std::log(Scalar(1) - s + Scalar(kBceEps));
  }
  return acc / Scalar(rendered.size());
}

template <typename Scalar>
Scalar silhouette_energy(const StructureLatent<Scalar>& latent, const Eigen::MatrixX<Scalar>& target,
                         Scalar kappa = Scalar(0.25)) {
  return bce_energy(render_silhouette(latent, kappa).raster, target);
}

// Closed-form gradient of the silhouette energy with respect to the latent
// logits. The chain is
//   dE/dS * dS/d(column sum) * d(sum)/dp * dp/dlogit
// = pixel term * kappa * exp(-kappa * sum) * p (1 - p),
// evaluated per voxel under its pixel.
template <typename Scalar>
Eigen::ArrayX<Scalar> energy_gradient(const StructureLatent<Scalar>& latent,
                                      const Eigen::MatrixX<Scalar>& target,
                                      Scalar kappa = Scalar(0.25)) {
  const int r = latent.resolution;
  require_arg(r > 0 && latent.logits.size() == static_cast<Index>(r) * r * r,
              "energy_gradient: latent shape mismatch");
  require_arg(target.rows() == r && target.cols() == r, "energy_gradient: target shape mismatch");
  require_arg(kappa > Scalar(0), "energy_gradient: kappa must be positive");

  Eigen::ArrayX<Scalar> p = vflow::logistic(latent.logits);
  Eigen::ArrayX<Scalar> grad(p.size());
  const Scalar inv_pixels = Scalar(1) / (Scalar(r) * r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      Index base = grid_index(r, i, j, 0);
      Scalar sum = 0;
      for (int k = 0; k < r; ++k) sum += p[base + k];
      Scalar trans = std::exp(-kappa * sum);  // = 1 - S
      Scalar s = Scalar(1) - trans;
      Scalar m = target(i, j);
      Scalar de_ds = (-m / (s + Scalar(kBceEps)) +
                      (Scalar(1) - m) / (Scalar(1) - s + Scalar(kBceEps))) * inv_pixels;
      Scalar pix = de_ds * kappa * trans;
      for (int k = 0; k < r; ++k) {
        Scalar pk = p[base + k];
        grad[base + k] = pix * pk * (Scalar(1) - pk);
      }
    }
  return grad;
}

// Rescale g to the Euclidean norm of a reference vector. A zero reference
// leaves g unchanged; a vanishing g (norm below 1e-12) becomes exactly zero.
template <typename Derived>
Eigen::VectorXd norm_match(const Eigen::MatrixBase<Derived>& g, const Eigen::VectorXd& reference) {
  require_arg(g.size() == reference.size(), "norm_match: shape mismatch");
  double ref_norm = reference.norm();
  if (ref_norm == 0.0) return g;
  double g_norm = g.norm();
  if (g_norm < 1e-12) return Eigen::VectorXd::Zero(g.size());
  return g * (ref_norm / g_norm);
}

// Hard silhouette of an occupancy grid: pixel is 1 when any voxel in its
// column exceeds the threshold.
template <typename Scalar>
Eigen::MatrixX<Scalar> binary_silhouette(const VoxelGrid<Scalar>& grid, Scalar threshold = Scalar(0.5)) {
  const int r = grid.resolution;
  require_arg(r > 0 && grid.values.size() == static_cast<Index>(r) * r * r,
              "binary_silhouette: grid shape mismatch");
  Eigen::MatrixX<Scalar> m = Eigen::MatrixX<Scalar>::Zero(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        if (grid.values[grid_index(r, i, j, k)] > threshold) {
          m(i, j) = Scalar(1);
          break;
        }
  return m;
}

// Intersection over union of two binary rasters (all-empty pair counts as 1).
template <typename Scalar>
double raster_iou(const Eigen::MatrixX<Scalar>& a, const Eigen::MatrixX<Scalar>& b) {
  require_arg(a.rows() == b.rows() && a.cols() == b.cols(), "raster_iou: shape mismatch");
  Index inter = 0, uni = 0;
  for (Index n = 0; n < a.size(); ++n) {
    bool pa = a.data()[n] > Scalar(0.5);
    bool pb = b.data()[n] > Scalar(0.5);
    inter += pa && pb;
    uni += pa || pb;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace vflow
