// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "vflow/common.hpp"
#include "vflow/grid.hpp"

namespace vflow {

// Resolution changes between grid space and the reduced latents the flow
// models run on. Fields are cell-centered; multi-channel data is voxel-major
// with `channels` consecutive values per voxel.

// Box restriction by an integer factor: each coarse voxel is the mean of its
// factor^3 children.
template <typename Scalar>
Eigen::ArrayX<Scalar> downsample_field(const Eigen::ArrayX<Scalar>& fine, int fine_res, int factor,
                                       int channels = 1) {
  require_arg(factor >= 1 && fine_res % factor == 0, "downsample_field: bad factor");
  const int rc = fine_res / factor;
  require_arg(fine.size() == static_cast<Index>(fine_res) * fine_res * fine_res * channels,
              "downsample_field: shape mismatch");
  Eigen::ArrayX<Scalar> coarse =
      Eigen::ArrayX<Scalar>::Zero(static_cast<Index>(rc) * rc * rc * channels);
  const Scalar inv = Scalar(1) / (Scalar(factor) * factor * factor);
  for (int i = 0; i < fine_res; ++i)
    for (int j = 0; j < fine_res; ++j)
      for (int k = 0; k < fine_res; ++k) {
        Index src = grid_index(fine_res, i, j, k) * channels;
        Index dst = grid_index(rc, i / factor, j / factor, k / factor) * channels;
        for (int c = 0; c < channels; ++c) coarse[dst + c] += fine[src + c] * inv;
      }
  return coarse;
}

namespace detail {

struct LinTap {
  int lo;
  int hi;
  double frac;
};

inline LinTap lin_tap(double x, int n) {
  // Cell-centered sample at coordinate x in [0, n); clamped at the border.
  double c = x - 0.5;
  int lo = static_cast<int>(std::floor(c));
  double frac = c - lo;
  int hi = lo + 1;
  if (lo < 0) { lo = 0; hi = 0; frac = 0.0; }
  if (hi > n - 1) { hi = n - 1; lo = n - 1; frac = 0.0; }
  return {lo, hi, frac};
}

}  // namespace detail

// Trilinear prolongation by an integer factor (clamped at the border).
template <typename Scalar>
Eigen::ArrayX<Scalar> upsample_field(const Eigen::ArrayX<Scalar>& coarse, int coarse_res,
                                     int factor, int channels = 1) {
  require_arg(factor >= 1, "upsample_field: bad factor");
  const int rf = coarse_res * factor;
  require_arg(coarse.size() == static_cast<Index>(coarse_res) * coarse_res * coarse_res * channels,
              "upsample_field: shape mismatch");
  Eigen::ArrayX<Scalar> fine(static_cast<Index>(rf) * rf * rf * channels);
  for (int i = 0; i < rf; ++i) {
    auto ti = detail::lin_tap((i + 0.5) / factor, coarse_res);
    for (int j = 0; j < rf; ++j) {
      auto tj = detail::lin_tap((j + 0.5) / factor, coarse_res);
      for (int k = 0; k < rf; ++k) {
        auto tk = detail::lin_tap((k + 0.5) / factor, coarse_res);
        Index dst = grid_index(rf, i, j, k) * channels;
        for (int c = 0; c < channels; ++c) {
          double v = 0.0;
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              for (int d = 0; d < 2; ++d) {
                double w = (a ? ti.frac : 1.0 - ti.frac) * (b ? tj.frac : 1.0 - tj.frac) *
                           (d ? tk.frac : 1.0 - tk.frac);
                if (w == 0.0) continue;
                Index src = grid_index(coarse_res, a ? ti.hi : ti.lo, b ? tj.hi : tj.lo,
                                       d ? tk.hi : tk.lo) * channels;
                v += w * coarse[src + c];
              }
          fine[dst + c] = static_cast<Scalar>(v);
        }
      }
    }
  }
  return fine;
}

// Trilinear point sample of a (possibly multi-channel) cell-centered field
// at a position in the unit cube; clamped at the border.
template <typename Scalar>
void sample_field(const Eigen::ArrayX<Scalar>& field, int res, int channels,
                  const Eigen::Vector3d& p, Scalar* out) {
  auto ti = detail::lin_tap(p.x() * res, res);
  auto tj = detail::lin_tap(p.y() * res, res);
  auto tk = detail::lin_tap(p.z() * res, res);
  for (int c = 0; c < channels; ++c) out[c] = Scalar(0);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d) {
        double w = (a ? ti.frac : 1.0 - ti.frac) * (b ? tj.frac : 1.0 - tj.frac) *
                   (d ? tk.frac : 1.0 - tk.frac);
        if (w == 0.0) continue;
        Index src = grid_index(res, a ? ti.hi : ti.lo, b ? tj.hi : tj.lo, d ? tk.hi : tk.lo) *
                    channels;
        for (int c = 0; c < channels; ++c) out[c] += static_cast<Scalar>(w * field[src + c]);
      }
}

template <typename Scalar>
void sample_field(const SlatField<Scalar>& field, const Eigen::Vector3d& p, Scalar* out) {
  sample_field(field.features, field.resolution, field.feature_dim, p, out);
}

template <typename Scalar>
Scalar sample_mask(const EditMask<Scalar>& mask, const Eigen::Vector3d& p) {
  Scalar v;
  sample_field(mask.weights, mask.resolution, 1, p, &v);
  return v;
}

}  // namespace vflow
