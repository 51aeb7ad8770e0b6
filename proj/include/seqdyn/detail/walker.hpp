#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "seqdyn/angle.hpp"
#include "seqdyn/detail/farfield.hpp"
#include "seqdyn/errors.hpp"
#include "seqdyn/polyseq.hpp"
#include "seqdyn/roots.hpp"
#include "seqdyn/util.hpp"

namespace seqdyn::rays::detail {

using polyseq::PolySpec;
using polyseq::SequenceSpec;

struct WalkDiverged : Error { using Error::Error; };

/// Descends an external ray R_{theta,m} of a monic sequence by potential.
///
/// A point at potential t is represented through its forward orbit ("chain"):
/// the level n is chosen so that D_{m,n} t >= t_far, the far image is solved
/// by Newton on the escape-region product, and the point is recovered by
/// pulling back one polynomial at a time, each preimage chosen nearest to the
/// previous point's orbit. Pullbacks are backward-stable, so the walk can
/// descend to potentials near the double underflow limit; the exact rational
/// angle pushforward keeps the target argument exact at any depth.
class RayWalker {
public:
    RayWalker(const SequenceSpec& spec, int m, Angle theta, double t_start,
              double far_tol = 1e-13)
        : spec_(&spec), m_(m), theta_(theta), far_tol_(far_tol) {
        R0_ = polyseq::escape_radius(spec.bounds());
        t_far_ = std::log(2.0 * R0_);
        deg_mod_.push_back(theta_.exact() ? 1 % theta_.den() : 0);
        deg_val_.push_back(1.0);
        // starting at or above t_far keeps the initial solve at level 0,
        // where no pullback (and hence no branch reference) is needed
        t_ = std::max(t_start, t_far_);
        chain_.assign(1, far_point(0, t_));
    }

    double potential() const { return t_; }
    double far_potential() const { return t_far_; }
    double escape_radius() const { return R0_; }
    cplx point() const { return chain_[0]; }
    const std::vector<cplx>& chain() const { return chain_; }
    int subdivisions() const { return subdivisions_; }

    /// Walk down to potential t_target (< current), subdividing the step
    /// geometrically whenever a pullback or step guard rejects.
    cplx descend_to(double t_target, int max_subdiv = 48) {
        std::vector<double> stack{t_target};
        int rejects = 0;
        while (!stack.empty()) {
            const double tt = stack.back();
            if (try_step(tt)) {
                stack.pop_back();
                continue;
            }
            ++rejects;
            ++subdivisions_;
            if (rejects > max_subdiv)
                throw WalkDiverged("ray step rejected after maximum subdivisions");
            stack.push_back(std::sqrt(t_ * tt));
        }
        return chain_[0];
    }

private:
    const PolySpec& poly_at_level(int j) { // polynomial mapping level j-1 -> j
        while (static_cast<int>(polys_.size()) < j)
            polys_.push_back(spec_->polynomial_at(m_ + static_cast<int>(polys_.size()) + 1));
        return polys_[j - 1];
    }

    void ensure_levels(int lvl) {
        while (static_cast<int>(deg_val_.size()) <= lvl) {
            const int j = static_cast<int>(deg_val_.size());
            const int d = poly_at_level(j).degree();
            deg_val_.push_back(deg_val_.back() * d);
            deg_mod_.push_back(theta_.exact()
                                   ? (deg_mod_.back() * static_cast<std::uint64_t>(d)) %
                                         theta_.den()
                                   : 0);
        }
    }

    int level_for(double t) {
        int n = 0;
        ensure_levels(0);
        while (deg_val_[n] * t < t_far_) {
            ++n;
            ensure_levels(n);
            if (n > 4000) throw WalkDiverged("potential too small for the walker");
        }
        return n;
    }

    cplx far_point(int lvl, double t) {
        ensure_levels(lvl);
        const double T = deg_val_[lvl] * t;
        const Angle pushed = theta_.pushforward(deg_mod_[lvl], deg_val_[lvl]);
        const double im = wrap_angle(two_pi * pushed.turns());
        return potential::detail::far_solve(*spec_, m_ + lvl, cplx(T, im), R0_, far_tol_);
    }

    bool try_step(double t_next) {
        const int lvl = level_for(t_next);
        // forward references: extend the current chain to the new level
        std::vector<cplx> ref = chain_;
        ref.reserve(lvl + 1);
        while (static_cast<int>(ref.size()) < lvl + 1) {
            const int j = static_cast<int>(ref.size());
            ref.push_back(poly_at_level(j).eval(ref.back()));
        }
        std::vector<cplx> nc(lvl + 1);
        try {
            nc[lvl] = far_point(lvl, t_next);
        } catch (const ContinuationStall&) {
            return false;
        }
        for (int j = lvl; j >= 1; --j) {
            const PolySpec& p = poly_at_level(j);
            std::vector<cplx> pre = roots::preimages(p.coeffs(), nc[j]);
            double d1 = 1e300, d2 = 1e300;
            cplx best{};
            for (const cplx& r : pre) {
                const double dist = std::abs(r - ref[j - 1]);
                if (dist < d1) {
                    d2 = d1;
                    d1 = dist;
                    best = r;
                } else if (dist < d2) {
                    d2 = dist;
                }
            }
            if (pre.size() > 1 && d1 > 0.45 * d2) return false; // ambiguous branch
            nc[j - 1] = best;
        }
        const double step = std::abs(nc[0] - chain_[0]);
        if (prev_step_ >= 0.0 &&
            step > std::max(2.0 * prev_step_, 1e-12 * (1.0 + std::abs(chain_[0]))))
            return false;
        prev_step_ = step;
        chain_ = std::move(nc);
        t_ = t_next;
        return true;
    }

    const SequenceSpec* spec_;
    int m_;
    Angle theta_;
    double far_tol_;
    double R0_ = 2.0;
    double t_far_ = 0.0;
    double t_ = 0.0;
    double prev_step_ = -1.0;
    int subdivisions_ = 0;
    std::vector<cplx> chain_;
    std::vector<PolySpec> polys_;
    std::vector<double> deg_val_;
    std::vector<std::uint64_t> deg_mod_;
};

} // namespace seqdyn::rays::detail
