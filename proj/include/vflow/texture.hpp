// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "vflow/atlas.hpp"
#include "vflow/grid.hpp"
#include "vflow/render.hpp"

namespace vflow {

// Samples a volumetric albedo field at every valid texel's surface point.
// Texels no chart covers are flagged invalid and painted `fallback`.
UvTexture bake_texture(const TriMesh& mesh, const SlatFieldd& albedo, int atlas_size,
                       const Eigen::Vector3d& fallback = {0.5, 0.5, 0.5});

// Visibility-aware, mask-weighted multi-view blend into the UV atlas.
//
// Every valid texel is lifted to its surface point. Each view contributes
// weight w_v = visible_v * max(0, -n . d_v)^exponent, where visibility is a
// depth-buffer test against the mesh rendered from that view (bias 1e-3 of
// the window extent) and d_v is the view direction. The blended color is
// mixed with the original texture by the mask value m sampled at the surface
// point: out = (1 - m) * original + m * blend. Texels with m = 0 copy the
// original bit-exactly; texels visible in no view fall back to the original.
UvTexture fuse_texture(const TriMesh& mesh, const std::vector<ViewImage>& views,
                       const EditMaskd& mask, const UvTexture& original, double exponent = 2.0);

}  // namespace vflow
