#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/hyperbolicity.hpp"
#include "seqdyn/polyseq.hpp"
#include "seqdyn/rays.hpp"
#include "seqdyn/roots.hpp"
#include "seqdyn/util.hpp"

namespace seqdyn::motion {

using hyperbolicity::HyperbolicityCert;
using polyseq::PolySpec;
using polyseq::SequenceSpec;

/// Finite-dimensional parameter slice: the listed coefficient slots
/// (time index, coefficient index) vary, everything else follows the base.
struct ParamPath {
    std::shared_ptr<const SequenceSpec> base;
    std::vector<std::pair<int, int>> slots;
    std::vector<std::vector<cplx>> waypoints;
    double max_step = 0.25;

    void validate() const {
        for (const auto& w : waypoints)
            if (w.size() != slots.size())
                throw ConfigError("ParamPath: waypoint arity mismatch");
        for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
            double step = 0.0;
            for (std::size_t j = 0; j < slots.size(); ++j)
                step = std::max(step, std::abs(waypoints[i + 1][j] - waypoints[i][j]));
            if (step > max_step)
                throw ConfigError("ParamPath: waypoint step exceeds max_step");
        }
    }

    /// Materialize the spec with the slot values substituted. The base must
    /// have a materializable rule (constant / periodic / prefix+tail).
    SequenceSpec spec_for(const std::vector<cplx>& values) const {
        using namespace polyseq;
        int h = 1;
        for (const auto& [t, ci] : slots) h = std::max(h, t);
        std::vector<PolySpec> prefix;
        prefix.reserve(h);
        for (int m = 1; m <= h; ++m) {
            std::vector<cplx> c = base->polynomial_at(m).coeffs();
            for (std::size_t j = 0; j < slots.size(); ++j)
                if (slots[j].first == m) {
                    if (slots[j].second >= static_cast<int>(c.size()))
                        throw ConfigError("ParamPath: coefficient index out of range");
                    c[static_cast<std::size_t>(slots[j].second)] = values[j];
                }
            prefix.emplace_back(std::move(c));
        }
        TailRule tail;
        if (const auto* cr = std::get_if<ConstantRule>(&base->rule()))
            tail.rule = *cr;
        else if (const auto* pr = std::get_if<PeriodicRule>(&base->rule())) {
            // phase-align the tail with global time h + k
            std::vector<PolySpec> rot;
            const int p = static_cast<int>(pr->polys.size());
            for (int k = 1; k <= p; ++k)
                rot.push_back(pr->polys[static_cast<std::size_t>((h + k - 1) % p)]);
            tail.rule = PeriodicRule{std::move(rot)};
        } else if (const auto* pt = std::get_if<PrefixThenTailRule>(&base->rule())) {
            if (h < static_cast<int>(pt->prefix.size()))
                for (int m = h + 1; m <= static_cast<int>(pt->prefix.size()); ++m)
                    prefix.push_back(pt->prefix[m - 1]);
            tail = pt->tail;
        } else {
            throw ConfigError("ParamPath: base rule is not materializable");
        }
        return SequenceSpec(PrefixThenTailRule{std::move(prefix), std::move(tail)},
                            base->bounds());
    }
};

/// Truncated form of a spec for motion work: the first `horizon` polynomials
/// are materialized and the tail is frozen to `tail_poly` (defaults to the
/// first polynomial of the tail source).
inline SequenceSpec truncate_to_prefix(const SequenceSpec& spec, int horizon,
                                       std::optional<PolySpec> tail_poly = {}) {
    std::vector<PolySpec> prefix;
    prefix.reserve(horizon);
    for (int m = 1; m <= horizon; ++m) prefix.push_back(spec.polynomial_at(m));
    polyseq::TailRule tail;
    tail.rule = polyseq::ConstantRule{tail_poly ? *tail_poly : prefix.back()};
    return SequenceSpec(polyseq::PrefixThenTailRule{std::move(prefix), std::move(tail)},
                        spec.bounds());
}

namespace detail {

// One backward-shadowing sweep: terminal point = reference orbit endpoint,
// then preimages under spec1 chosen inside the disc of radius `disc` around
// the spec0 reference at each level.
inline cplx shadow_core(const SequenceSpec& spec1, int m,
                        const std::function<cplx(int)>& ref, int K, double disc) {
    cplx zp = ref(K);
    for (int j = K; j >= 1; --j) {
        const PolySpec p = spec1.polynomial_at(m + j);
        const std::vector<cplx> pre = roots::preimages(p.coeffs(), zp);
        const cplx target = ref(j - 1);
        int inside = 0;
        cplx pick{};
        for (const cplx& r : pre)
            if (std::abs(r - target) <= disc) {
                ++inside;
                pick = r;
            }
        if (inside == 0)
            throw NoPreimageInDisc("shadowing: no preimage within 0.25*delta at level " +
                                   std::to_string(j));
        if (inside > 1)
            throw AmbiguousPreimage("shadowing: several preimages within the disc at level " +
                                    std::to_string(j));
        zp = pick;
    }
    return zp;
}

} // namespace detail

/// Stable reference orbit for a Julia point given by its external angle: the
/// deep ray chain under `spec` carries the forward orbit of the landing point
/// to any level without the exponential error blow-up of forward iteration.
class OrbitAnchor {
public:
    OrbitAnchor(const SequenceSpec& spec, int m, rays::Angle theta, int levels,
                int margin = 80)
        : m_(m), theta_(theta) {
        rays::detail::RayWalker walk(spec, m, theta, 0.0);
        double t = walk.potential();
        while (static_cast<int>(walk.chain().size()) < levels + margin + 1) {
            t *= 0.5;
            walk.descend_to(t);
        }
        chain_ = walk.chain();
    }

    int m() const { return m_; }
    rays::Angle theta() const { return theta_; }
    int levels() const { return static_cast<int>(chain_.size()) - 1; }
    cplx point(int j) const {
        if (j < 0 || j > levels())
            throw NoPreimageInDisc("OrbitAnchor: level beyond the prepared chain");
        return chain_[static_cast<std::size_t>(j)];
    }
    cplx base_point() const { return chain_[0]; }

private:
    int m_;
    rays::Angle theta_;
    std::vector<cplx> chain_;
};

/// Backward-shadowing conjugate of a sampled Julia point, depth K = k N0,
/// references taken from the forward orbit of z under spec0. Forward orbits
/// of inexact Julia points drift exponentially, so this form is only valid
/// while K stays below roughly log(delta / |z error|) / log(mu); use the
/// anchored overload for deep shadows.
inline cplx shadow_conjugate(const SequenceSpec& spec0, const SequenceSpec& spec1, int m,
                             cplx z, int depth_k, const HyperbolicityCert& cert) {
    if (!cert.N0) throw NoPreimageInDisc("shadow_conjugate: certificate has no doubling time");
    const int K = depth_k * *cert.N0;
    std::vector<cplx> orbit(K + 1);
    orbit[0] = z;
    for (int j = 1; j <= K; ++j)
        orbit[j] = spec0.polynomial_at(m + j).eval(orbit[j - 1]);
    return detail::shadow_core(
        spec1, m, [&](int j) { return orbit[static_cast<std::size_t>(j)]; }, K,
        0.25 * cert.delta);
}

/// Anchored overload: references from the deep ray chain of `anchor`.
inline cplx shadow_conjugate(const SequenceSpec& /*spec0*/, const SequenceSpec& spec1,
                             const OrbitAnchor& anchor, int depth_k,
                             const HyperbolicityCert& cert) {
    if (!cert.N0) throw NoPreimageInDisc("shadow_conjugate: certificate has no doubling time");
    const int K = std::min(depth_k * *cert.N0, anchor.levels());
    return detail::shadow_core(
        spec1, anchor.m(), [&](int j) { return anchor.point(j); }, K, 0.25 * cert.delta);
}

struct PathResult {
    cplx point;
    int subdivisions = 0;
    int segments = 0;
};

/// Fold shadow_conjugate across consecutive waypoints, bisecting any segment
/// that raises a preimage error, up to 12 bisection levels per segment.
/// The point is carried by its external angle so that reference orbits stay
/// stable at every intermediate parameter.
inline PathResult continue_along_path(const ParamPath& path, int m, rays::Angle theta,
                                      int depth_k, const HyperbolicityCert& cert,
                                      int max_bisect = 12) {
    path.validate();
    if (!cert.N0) throw PathNotContinuable("path: certificate has no doubling time");
    PathResult res;
    const int levels = depth_k * *cert.N0;

    std::function<cplx(const std::vector<cplx>&, const std::vector<cplx>&, int)> fold =
        [&](const std::vector<cplx>& a, const std::vector<cplx>& b, int depth) -> cplx {
        const SequenceSpec sa = path.spec_for(a);
        const SequenceSpec sb = path.spec_for(b);
        try {
            OrbitAnchor anchor(sa, m, theta, levels);
            ++res.segments;
            return shadow_conjugate(sa, sb, anchor, depth_k, cert);
        } catch (const Error&) {
            if (depth >= max_bisect)
                throw PathNotContinuable(
                    "path segment still not shadowable after " +
                    std::to_string(max_bisect) + " bisections (left the hyperbolic component?)");
            ++res.subdivisions;
            std::vector<cplx> mid(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
            fold(a, mid, depth + 1);
            return fold(mid, b, depth + 1);
        }
    };

    cplx cur{};
    for (std::size_t i = 0; i + 1 < path.waypoints.size(); ++i)
        cur = fold(path.waypoints[i], path.waypoints[i + 1], 0);
    res.point = cur;
    return res;
}

/// Landing-point continuation: trace the same angles under spec1 and return
/// the common landing point; CoLandingBroken lists the divergent pairs when
/// the group fails to co-land at the tolerance.
inline cplx ray_landing_motion(const SequenceSpec& /*spec0*/, const SequenceSpec& spec1,
                               int m, const std::vector<rays::Angle>& theta_set,
                               double tol = 1e-6,
                               const rays::TraceParams& prm = rays::landing_params()) {
    std::vector<rays::RayTrace> traces(theta_set.size());
    parallel_for(theta_set.size(), [&](std::size_t i) {
        traces[i] = rays::trace_ray(spec1, m, theta_set[i], prm);
    });
    for (const auto& t : traces)
        if (t.status != rays::RayStatus::Landed)
            throw CoLandingBroken("ray_landing_motion: angle " + t.theta.str() +
                                  " did not land");
    cplx mean(0.0, 0.0);
    for (const auto& t : traces) mean += *t.landing;
    mean /= static_cast<double>(traces.size());
    std::string broken;
    for (std::size_t i = 0; i < traces.size(); ++i)
        for (std::size_t j = i + 1; j < traces.size(); ++j) {
            const double d = std::abs(*traces[i].landing - *traces[j].landing);
            if (d > tol + traces[i].landing_radius + traces[j].landing_radius)
                broken += " (" + traces[i].theta.str() + "," + traces[j].theta.str() +
                          ") " + std::to_string(d);
        }
    if (!broken.empty())
        throw CoLandingBroken("ray_landing_motion: co-landing broken:" + broken);
    return mean;
}

/// Exact symmetric Hausdorff distance between point clouds.
inline double hausdorff_distance(const std::vector<cplx>& A, const std::vector<cplx>& B) {
    if (A.empty() || B.empty())
        throw ConfigError("hausdorff_distance: empty cloud");
    auto directed = [](const std::vector<cplx>& X, const std::vector<cplx>& Y) {
        double h = 0.0;
        for (const cplx& x : X) {
            double d = 1e300;
            for (const cplx& y : Y) {
                d = std::min(d, std::abs(x - y));
                if (d <= h) break; // cannot raise the max
            }
            h = std::max(h, d);
        }
        return h;
    };
    return std::max(directed(A, B), directed(B, A));
}

/// One conjugate-point comparison row of a motion experiment.
struct MotionPair {
    cplx base;
    cplx shadowed;
    cplx ray_landed;
    double discrepancy = 0.0;
};

struct MotionReport {
    std::vector<MotionPair> pairs;
    int depth_k = 0;
    int subdivisions = 0;
    double max_discrepancy = 0.0;
};

} // namespace seqdyn::motion
