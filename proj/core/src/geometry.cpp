#include "dualarm/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dualarm {

namespace {

using Eigen::Vector3d;

void check_pose(const RigidTransform& pose) {
    const Eigen::Matrix3d& r = pose.rotation;
    const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9)
        throw std::invalid_argument("min_distance_obb: degenerate (non-orthonormal) pose");
    if (!pose.translation.allFinite())
        throw std::invalid_argument("min_distance_obb: non-finite pose");
}

// One vertex of the Minkowski difference A - B together with the pair of
// box vertices that produced it.
struct SupportPoint {
    Vector3d w;
    Vector3d a;
    Vector3d b;
};

Vector3d box_support(const PosedCuboid& box, const Vector3d& dir_world) {
    const Vector3d d = box.world_from_geom.rotation.transpose() * dir_world;
    const Vector3d corner(d.x() >= 0 ? box.half_extents.x() : -box.half_extents.x(),
                          d.y() >= 0 ? box.half_extents.y() : -box.half_extents.y(),
                          d.z() >= 0 ? box.half_extents.z() : -box.half_extents.z());
    return box.world_from_geom.apply(corner);
}

// Closest point of the current simplex to the origin, with barycentric
// weights. Reduces the simplex to the minimal supporting face.
struct SimplexResult {
    Vector3d v = Vector3d::Zero();
    std::array<SupportPoint, 4> pts{};
    std::array<double, 4> lambda{};
    int n = 0;
    bool contains_origin = false;
};

SimplexResult from_point(const SupportPoint& a) {
    SimplexResult r;
    r.v = a.w;
    r.pts[0] = a;
    r.lambda[0] = 1.0;
    r.n = 1;
    return r;
}

SimplexResult from_segment(const SupportPoint& a, const SupportPoint& b) {
    const Vector3d ab = b.w - a.w;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0 ? -a.w.dot(ab) / len2 : 0.0;
    if (t <= 0.0) return from_point(a);
    if (t >= 1.0) return from_point(b);
    SimplexResult r;
    r.pts[0] = a;
    r.pts[1] = b;
    r.lambda[0] = 1.0 - t;
    r.lambda[1] = t;
    r.n = 2;
    r.v = a.w + t * ab;
    return r;
}

// Ericson's closest-point-on-triangle specialized to query point = origin.
SimplexResult from_triangle(const SupportPoint& a, const SupportPoint& b, const SupportPoint& c) {
    const Vector3d ab = b.w - a.w;
    const Vector3d ac = c.w - a.w;
    const Vector3d ap = -a.w;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return from_point(a);

    const Vector3d bp = -b.w;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return from_point(b);

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return from_segment(a, b);

    const Vector3d cp = -c.w;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return from_point(c);

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return from_segment(a, c);

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return from_segment(b, c);

    const double denom = va + vb + vc;
    if (!(std::abs(denom) > 0)) return from_segment(a, b);  // degenerate sliver
    const double v = vb / denom;
    const double w = vc / denom;
    SimplexResult r;
    r.pts[0] = a;
    r.pts[1] = b;
    r.pts[2] = c;
    r.lambda[0] = 1.0 - v - w;
    r.lambda[1] = v;
    r.lambda[2] = w;
    r.n = 3;
    r.v = a.w + v * ab + w * ac;
    return r;
}

SimplexResult from_tetrahedron(const SupportPoint& a, const SupportPoint& b,
                               const SupportPoint& c, const SupportPoint& d) {
    // Barycentric coordinates of the origin in (a, b, c, d).
    Eigen::Matrix3d m;
    m.col(0) = b.w - a.w;
    m.col(1) = c.w - a.w;
    m.col(2) = d.w - a.w;
    const double det = m.determinant();
    const double scale = m.cwiseAbs().maxCoeff();
    if (std::abs(det) > 1e-14 * scale * scale * scale) {
        const Vector3d x = m.partialPivLu().solve(-a.w);
        const double la = 1.0 - x.sum();
        if (la >= -1e-12 && x.minCoeff() >= -1e-12) {
            SimplexResult r;
            r.pts = {a, b, c, d};
            r.lambda = {la, x[0], x[1], x[2]};
            r.n = 4;
            r.v = Vector3d::Zero();
            r.contains_origin = true;
            return r;
        }
    }
    // Origin outside (or degenerate tetrahedron): best of the four faces.
    SimplexResult best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (const auto& face : {std::array<const SupportPoint*, 3>{&a, &b, &c},
                             std::array<const SupportPoint*, 3>{&a, &b, &d},
                             std::array<const SupportPoint*, 3>{&a, &c, &d},
                             std::array<const SupportPoint*, 3>{&b, &c, &d}}) {
        const SimplexResult r = from_triangle(*face[0], *face[1], *face[2]);
        const double d2 = r.v.squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = r;
        }
    }
    return best;
}

SimplexResult closest_on_simplex(const std::array<SupportPoint, 4>& pts, int n) {
    switch (n) {
        case 1: return from_point(pts[0]);
        case 2: return from_segment(pts[0], pts[1]);
        case 3: return from_triangle(pts[0], pts[1], pts[2]);
        default: return from_tetrahedron(pts[0], pts[1], pts[2], pts[3]);
    }
}

ClosestPair witness_pair(const SimplexResult& s, bool intersecting) {
    Vector3d pa = Vector3d::Zero();
    Vector3d pb = Vector3d::Zero();
    for (int i = 0; i < s.n; ++i) {
        pa += s.lambda[static_cast<std::size_t>(i)] * s.pts[static_cast<std::size_t>(i)].a;
        pb += s.lambda[static_cast<std::size_t>(i)] * s.pts[static_cast<std::size_t>(i)].b;
    }
    ClosestPair out;
    if (intersecting) {
        const Vector3d common = 0.5 * (pa + pb);
        out.point_a = common;
        out.point_b = common;
        out.distance = 0.0;
    } else {
        out.point_a = pa;
        out.point_b = pb;
        out.distance = (pa - pb).norm();
    }
    return out;
}

}  // namespace

PosedCuboid posed(const Cuboid& cuboid, const RigidTransform& link_pose_world) {
    return {link_pose_world.compose(cuboid.frame_offset), cuboid.half_extents};
}

std::array<Eigen::Vector3d, 8> cuboid_corners(const PosedCuboid& box) {
    std::array<Eigen::Vector3d, 8> out;
    int k = 0;
    for (int sx : {-1, 1})
        for (int sy : {-1, 1})
            for (int sz : {-1, 1})
                out[static_cast<std::size_t>(k++)] = box.world_from_geom.apply(
                    Vector3d(sx * box.half_extents.x(), sy * box.half_extents.y(),
                             sz * box.half_extents.z()));
    return out;
}

ClosestPair min_distance_obb(const PosedCuboid& box_a, const PosedCuboid& box_b) {
    check_pose(box_a.world_from_geom);
    check_pose(box_b.world_from_geom);
    if (!(box_a.half_extents.minCoeff() > 0) || !(box_b.half_extents.minCoeff() > 0))
        throw std::invalid_argument("min_distance_obb: half extents must be positive");

    const auto support = [&](const Vector3d& dir) -> SupportPoint {
        const Vector3d a = box_support(box_a, dir);
        const Vector3d b = box_support(box_b, -dir);
        return {a - b, a, b};
    };

    const Vector3d center_gap =
        box_a.world_from_geom.translation - box_b.world_from_geom.translation;
    const double scale = 1.0 + center_gap.norm() + box_a.half_extents.sum() +
                         box_b.half_extents.sum();
    const double eps_zero = 1e-12 * scale;

    Vector3d dir = center_gap.squaredNorm() > 1e-24 ? center_gap : Vector3d::UnitX();
    std::array<SupportPoint, 4> pts;
    pts[0] = support(dir);
    int n = 1;

    SimplexResult cur = closest_on_simplex(pts, n);
    for (int iter = 0; iter < 128; ++iter) {
        if (cur.contains_origin || cur.v.norm() <= eps_zero)
            return witness_pair(cur, /*intersecting=*/true);

        const SupportPoint w = support(-cur.v);
        const double v2 = cur.v.squaredNorm();
        // No support point improves on the current estimate: converged.
        if (v2 - cur.v.dot(w.w) <= 1e-12 * v2) return witness_pair(cur, false);

        bool duplicate = false;
        for (int i = 0; i < cur.n; ++i)
            if ((cur.pts[static_cast<std::size_t>(i)].w - w.w).squaredNorm() <=
                1e-24 * scale * scale)
                duplicate = true;
        if (duplicate) return witness_pair(cur, false);

        pts = cur.pts;
        n = cur.n;
        pts[static_cast<std::size_t>(n++)] = w;
        cur = closest_on_simplex(pts, n);
    }
    return witness_pair(cur, cur.v.norm() <= eps_zero);
}

double point_to_cuboid_distance(const Eigen::Vector3d& point_world, const PosedCuboid& box,
                                Eigen::Vector3d* closest) {
    const Vector3d local = box.world_from_geom.inverse().apply(point_world);
    const Vector3d clamped = local.cwiseMax(-box.half_extents).cwiseMin(box.half_extents);
    if (closest) *closest = box.world_from_geom.apply(clamped);
    return (local - clamped).norm();
}

ClosestPair arm_pair_proximity(const KinematicChain& chain_a, const JointConfig& config_a,
                               const KinematicChain& chain_b, const JointConfig& config_b) {
    const auto poses_a = forward_kinematics(chain_a, config_a);
    const auto poses_b = forward_kinematics(chain_b, config_b);
    ClosestPair best;
    best.distance = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kNumLinks; ++i) {
        const PosedCuboid box_a = posed(chain_a.links[static_cast<std::size_t>(i)].geometry,
                                        poses_a[static_cast<std::size_t>(i)]);
        for (int j = 0; j < kNumLinks; ++j) {
            const PosedCuboid box_b = posed(chain_b.links[static_cast<std::size_t>(j)].geometry,
                                            poses_b[static_cast<std::size_t>(j)]);
            ClosestPair pair = min_distance_obb(box_a, box_b);
            if (pair.distance < best.distance) {
                pair.link_a = i + 1;
                pair.link_b = j + 1;
                best = pair;
            }
        }
    }
    return best;
}

bool collides(const KinematicChain& chain_a, const JointConfig& config_a,
              const KinematicChain& chain_b, const JointConfig& config_b, double clearance) {
    if (clearance < 0) throw std::invalid_argument("collides: clearance must be >= 0");
    return arm_pair_proximity(chain_a, config_a, chain_b, config_b).distance <= clearance;
}

}  // namespace dualarm
