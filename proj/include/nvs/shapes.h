#pragma once

#include "nvs/mesh.h"

namespace nvs::shapes {

/// Subdivided icosahedron projected onto a sphere; normals are radial.
TriangleMesh icosphere(int subdivisions, double radius = 1.0, const Vec3& center = Vec3::Zero());

/// Axis-aligned box with 8 shared corners and 12 outward-facing triangles.
TriangleMesh box(const Vec3& lo, const Vec3& hi);

/// Torus around the y axis; `major` is the ring radius, `minor` the tube radius.
TriangleMesh torus(double major, double minor, int ring_segments, int tube_segments,
                   const Vec3& center = Vec3::Zero());

/// Cylinder of `radius` along y with hemispherical caps; total height
/// 2 * (half_length + radius).
TriangleMesh capsule(double radius, double half_length, int segments, const Vec3& center = Vec3::Zero());

/// Planar quad a-b-c-d (two triangles, normals from the winding).
TriangleMesh quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Sphere overlapped by an offset box: a non-convex union (triangle soup).
TriangleMesh sphere_box_union();

}  // namespace nvs::shapes
