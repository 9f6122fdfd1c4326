// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "vflow/atlas.hpp"
#include "vflow/mesh.hpp"

namespace vflow {

// Writes <prefix>.obj plus a <prefix>.mtl sidecar; when a texture is given it
// is written to <prefix>.ppm and referenced as the diffuse map. Numbers use
// the shortest round-trip form, so identical inputs produce identical bytes.
// An empty mesh exports a valid file with zero elements.
void export_obj(const TriMesh& mesh, const UvTexture* texture, const std::string& prefix);

// Reads a mesh written by export_obj (v / vt / vn / f lines, triangles only).
TriMesh parse_obj(const std::string& path);

}  // namespace vflow
