// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "vflow/common.hpp"

namespace vflow {

// Dense cubic fields over [0,1]^3, stored flat with index (i*R + j)*R + k.
// Axis k is depth along the front-view camera ray; a silhouette pixel (i, j)
// integrates the k column under it.
constexpr Index grid_index(int r, int i, int j, int k) {
  return (static_cast<Index>(i) * r + j) * r + k;
}

// Center of voxel (i,j,k) in the unit cube.
inline Eigen::Vector3d voxel_center(int r, int i, int j, int k) {
  return {(i + 0.5) / r, (j + 0.5) / r, (k + 0.5) / r};
}

// Occupancy probabilities in [0, 1].
template <typename Scalar>
struct VoxelGrid {
  int resolution = 0;
  Eigen::ArrayX<Scalar> values;

  Scalar& at(int i, int j, int k) { return values[grid_index(resolution, i, j, k)]; }
  Scalar at(int i, int j, int k) const { return values[grid_index(resolution, i, j, k)]; }
};

// Pre-sigmoid occupancy logits; the editing state space.
template <typename Scalar>
struct StructureLatent {
  int resolution = 0;
  Eigen::ArrayX<Scalar> logits;
};

// Per-voxel edit weights in [0, 1].
template <typename Scalar>
struct EditMask {
  int resolution = 0;
  Eigen::ArrayX<Scalar> weights;
};

// Per-voxel feature vectors (appearance) plus a binary activity field
// marking which voxels carry meaningful features. Features are stored
// voxel-major: element v * feature_dim + f.
template <typename Scalar>
struct SlatField {
  int resolution = 0;
  int feature_dim = 0;
  Eigen::ArrayX<Scalar> features;
  Eigen::ArrayX<Scalar> activity;
};

using VoxelGridd = VoxelGrid<double>;
using StructureLatentd = StructureLatent<double>;
using EditMaskd = EditMask<double>;
using SlatFieldd = SlatField<double>;

template <typename Derived>
auto logistic(const Eigen::ArrayBase<Derived>& x) {
  return 1.0 / (1.0 + (-x).exp());
}

// Element-wise logistic map from logits to occupancy probabilities.
template <typename Scalar>
VoxelGrid<Scalar> decode(const StructureLatent<Scalar>& latent) {
  require_arg(latent.resolution > 0 && latent.logits.size() ==
                  static_cast<Index>(latent.resolution) * latent.resolution * latent.resolution,
              "decode: latent shape mismatch");
  VoxelGrid<Scalar> g;
  g.resolution = latent.resolution;
  g.values = vflow::logistic(latent.logits);
  return g;
}

// Element-wise logit map, clamped so binary inputs land at +/- margin.
template <typename Scalar>
StructureLatent<Scalar> encode(const VoxelGrid<Scalar>& grid, Scalar margin = Scalar(8)) {
  require_arg(margin > Scalar(0), "encode: margin must be positive");
  require_arg(grid.resolution > 0 && grid.values.size() ==
                  static_cast<Index>(grid.resolution) * grid.resolution * grid.resolution,
              "encode: grid shape mismatch");
  StructureLatent<Scalar> latent;
  latent.resolution = grid.resolution;
  latent.logits.resize(grid.values.size());
  for (Index n = 0; n < grid.values.size(); ++n) {
    Scalar p = grid.values[n];
    Scalar l;
    if (p <= Scalar(0)) {
      l = -margin;
    } else if (p >= Scalar(1)) {
      l = margin;
    } else {
      l = std::log(p / (Scalar(1) - p));
      l = std::min(margin, std::max(-margin, l));
    }
    latent.logits[n] = l;
  }
  return latent;
}

namespace detail {

// One separable blur pass along `axis`. Out-of-range taps are dropped and the
// in-range tap weights renormalized, which keeps constant fields constant.
template <typename Scalar>
void blur_axis(Eigen::ArrayX<Scalar>& v, int r, int axis, const std::vector<Scalar>& kernel) {
  const int rad = static_cast<int>(kernel.size()) / 2;
  Eigen::ArrayX<Scalar> out(v.size());
  Index stride = axis == 0 ? static_cast<Index>(r) * r : (axis == 1 ? r : 1);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k) {
        int pos = axis == 0 ? i : (axis == 1 ? j : k);
        Index base = grid_index(r, i, j, k);
        Scalar acc = 0, wsum = 0;
        for (int d = -rad; d <= rad; ++d) {
          int q = pos + d;
          if (q < 0 || q >= r) continue;
          Scalar w = kernel[d + rad];
          acc += w * v[base + static_cast<Index>(d) * stride];
          wsum += w;
        }
        out[base] = acc / wsum;
      }
  v = std::move(out);
}

}  // namespace detail

// Separable Gaussian feathering of a mask. Kernel is truncated at
// ceil(3*sigma) taps per side and normalized to unit sum; results are
// clamped to [0, 1]. All-zero and all-one masks are fixed points.
template <typename Scalar>
EditMask<Scalar> feather(const EditMask<Scalar>& mask, Scalar sigma) {
  require_arg(sigma > Scalar(0), "feather: sigma must be positive");
  const int r = mask.resolution;
  require_arg(r > 0 && mask.weights.size() == static_cast<Index>(r) * r * r,
              "feather: mask shape mismatch");
  const int rad = static_cast<int>(std::ceil(3.0 * static_cast<double>(sigma)));
  std::vector<Scalar> kernel(2 * rad + 1);
  Scalar sum = 0;
  for (int d = -rad; d <= rad; ++d) {
    Scalar w = std::exp(-Scalar(d) * d / (2 * sigma * sigma));
    kernel[d + rad] = w;
    sum += w;
  }
  for (auto& w : kernel) w /= sum;

  EditMask<Scalar> out;
  out.resolution = r;
  out.weights = mask.weights;
  for (int axis = 0; axis < 3; ++axis) detail::blur_axis(out.weights, r, axis, kernel);
  out.weights = out.weights.min(Scalar(1)).max(Scalar(0));
  return out;
}

// Reduce a mesh-resolution mask to latent resolution: max-pool over blocks,
// then dilate with the 6-neighborhood `dilation` times. A fine voxel counts
// as masked when its weight exceeds 0.5.
template <typename Scalar>
EditMask<Scalar> downsample_mask(const EditMask<Scalar>& mask, int latent_res, int dilation = 1) {
  const int rm = mask.resolution;
  require_arg(latent_res > 0 && rm > 0 && rm % latent_res == 0,
              "downsample_mask: fine resolution must be a multiple of the latent resolution");
  require_arg(dilation >= 0, "downsample_mask: dilation must be non-negative");
  require_arg(mask.weights.size() == static_cast<Index>(rm) * rm * rm,
              "downsample_mask: mask shape mismatch");
  const int f = rm / latent_res;

  EditMask<Scalar> out;
  out.resolution = latent_res;
  out.weights = Eigen::ArrayX<Scalar>::Zero(static_cast<Index>(latent_res) * latent_res * latent_res);
  for (int i = 0; i < rm; ++i)
    for (int j = 0; j < rm; ++j)
      for (int k = 0; k < rm; ++k)
        if (mask.weights[grid_index(rm, i, j, k)] > Scalar(0.5))
          out.weights[grid_index(latent_res, i / f, j / f, k / f)] = Scalar(1);

  for (int pass = 0; pass < dilation; ++pass) {
    Eigen::ArrayX<Scalar> prev = out.weights;
    for (int i = 0; i < latent_res; ++i)
      for (int j = 0; j < latent_res; ++j)
        for (int k = 0; k < latent_res; ++k) {
          if (prev[grid_index(latent_res, i, j, k)] != Scalar(0)) continue;
          bool on = (i > 0 && prev[grid_index(latent_res, i - 1, j, k)] != Scalar(0)) ||
                    (i + 1 < latent_res && prev[grid_index(latent_res, i + 1, j, k)] != Scalar(0)) ||
                    (j > 0 && prev[grid_index(latent_res, i, j - 1, k)] != Scalar(0)) ||
                    (j + 1 < latent_res && prev[grid_index(latent_res, i, j + 1, k)] != Scalar(0)) ||
                    (k > 0 && prev[grid_index(latent_res, i, j, k - 1)] != Scalar(0)) ||
                    (k + 1 < latent_res && prev[grid_index(latent_res, i, j, k + 1)] != Scalar(0));
          if (on) out.weights[grid_index(latent_res, i, j, k)] = Scalar(1);
        }
  }
  return out;
}

}  // namespace vflow
