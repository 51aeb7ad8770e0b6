#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/polyseq.hpp"
#include "seqdyn/rays.hpp"
#include "seqdyn/roots.hpp"
#include "seqdyn/util.hpp"

namespace seqdyn::hyperbolicity {

using polyseq::PolySpec;
using polyseq::SequenceSpec;

enum class SampleMethod { Auto, RayLandings, Bisection };

/// Point sample of an iterated Julia set J_m.
struct JuliaSample {
    int m = 0;
    std::vector<cplx> points;
    SampleMethod method = SampleMethod::RayLandings;
    int angle_count = 0;   // RayLandings
    double quality = 0.0;  // max nearest-neighbour gap over the sample
};

struct SampleParams {
    SampleMethod method = SampleMethod::Auto;
    int horizon = 512;
    double ray_t_min = 1e-10;
    double ray_shrink = 0.6;
    double bisect_tol = 1e-9;
    double diverged_cap = 0.05; // SamplingFailed past this fraction
    unsigned threads = 0;
};

namespace detail {

inline double max_nn_gap(const std::vector<cplx>& pts) {
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double nn = 1e300;
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (j != i) nn = std::min(nn, std::abs(pts[i] - pts[j]));
        worst = std::max(worst, nn);
    }
    return worst;
}

// Boundary point on the segment [inside, outside] by escape-time bisection.
inline cplx bisect_boundary(const SequenceSpec& spec, int m, cplx inside, cplx outside,
                            double R0, int horizon, double tol) {
    for (int it = 0; it < 200 && std::abs(outside - inside) > tol; ++it) {
        const cplx mid = 0.5 * (inside + outside);
        if (polyseq::escape_time(spec, m, mid, R0, horizon))
            outside = mid;
        else
            inside = mid;
    }
    return inside;
}

inline std::vector<cplx> bisection_sample(const SequenceSpec& spec, int m, int count,
                                          const SampleParams& prm) {
    const double R0 = polyseq::escape_radius(spec.bounds());
    // bounded seed: try the origin, then a coarse grid
    std::optional<cplx> seed;
    if (!polyseq::escape_time(spec, m, cplx(0.0), R0, prm.horizon))
        seed = cplx(0.0);
    for (int gy = 0; gy < 17 && !seed; ++gy)
        for (int gx = 0; gx < 17 && !seed; ++gx) {
            const cplx z(-R0 + 2.0 * R0 * gx / 16.0, -R0 + 2.0 * R0 * gy / 16.0);
            if (!polyseq::escape_time(spec, m, z, R0, prm.horizon)) seed = z;
        }
    if (!seed)
        throw SamplingFailed("bisection_sample: no bounded seed found");
    std::vector<cplx> pts(count);
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t j) {
        const double a = two_pi * static_cast<double>(j) / count;
        const cplx far = *seed + 1.5 * R0 * std::exp(cplx(0.0, a));
        pts[j] = bisect_boundary(spec, m, *seed, far, R0, prm.horizon, prm.bisect_tol);
    }, prm.threads);
    return pts;
}

} // namespace detail

/// Sample J_m. Primary method: landing points of `count` equally spaced
/// angles (valid for hyperbolic connected configurations, where every ray
/// lands). Auto falls back to escape-time bisection when too few rays land;
/// more than diverged_cap rays diverging raises SamplingFailed.
inline JuliaSample julia_sample(const SequenceSpec& spec, int m, int count,
                                const SampleParams& prm = {}) {
    if (count < 1) throw SamplingFailed("julia_sample: count must be >= 1");
    JuliaSample out;
    out.m = m;
    out.angle_count = count;

    if (prm.method != SampleMethod::Bisection) {
        rays::TraceParams tp;
        tp.t_min = prm.ray_t_min;
        tp.shrink = prm.ray_shrink;
        std::vector<rays::RayTrace> traces(count);
        parallel_for(static_cast<std::size_t>(count), [&](std::size_t j) {
            traces[j] = rays::trace_ray(
                spec, m, rays::Angle::rational(j, static_cast<std::uint64_t>(count)), tp);
        }, prm.threads);
        int diverged = 0, landed = 0;
        for (const auto& t : traces) {
            if (t.status == rays::RayStatus::Diverged) ++diverged;
            if (t.status == rays::RayStatus::Landed) ++landed;
        }
        if (diverged > prm.diverged_cap * count)
            throw SamplingFailed("julia_sample: " + std::to_string(diverged) + " of " +
                                 std::to_string(count) + " rays diverged");
        if (landed >= 4 * count / 5 || prm.method == SampleMethod::RayLandings) {
            out.method = SampleMethod::RayLandings;
            out.points.reserve(count);
            for (const auto& t : traces)
                out.points.push_back(t.status == rays::RayStatus::Landed ? *t.landing
                                                                         : t.end());
            out.quality = detail::max_nn_gap(out.points);
            return out;
        }
        // else: too many truncated rays (slow landing); use bisection instead
    }
    out.method = SampleMethod::Bisection;
    out.points = detail::bisection_sample(spec, m, count, prm);
    out.quality = detail::max_nn_gap(out.points);
    return out;
}

/// Critical points of one polynomial: roots of P' (degree <= 5 supported by
/// the simultaneous root finder, residual-polished).
inline std::vector<cplx> critical_points(const PolySpec& p) {
    const auto& c = p.coeffs();
    std::vector<cplx> dc(c.size() - 1);
    for (std::size_t i = 1; i < c.size(); ++i)
        dc[i - 1] = c[i] * static_cast<double>(i);
    return roots::durand_kerner(std::move(dc), 1e-13);
}

/// min over m <= m_max, m < n <= n_max of dist(C_{m,n}, sample at n), where
/// C_{m,n} = union_{k=m+1..n} Q_{k,n}(critical values of P_k). Critical
/// values escaping past R_0 only contribute their (always large) distance
/// from the sample's bounding disk.
inline double postcritical_distance(const SequenceSpec& spec, int m_max, int n_max,
                                    const std::vector<JuliaSample>& samples_by_time) {
    const double R0 = polyseq::escape_radius(spec.bounds());
    auto sample_at = [&](int n) -> const JuliaSample& {
        for (const auto& s : samples_by_time)
            if (s.m == n) return s;
        throw SamplingFailed("postcritical_distance: no sample at time " +
                             std::to_string(n));
    };
    double best = 1e300;
    (void)m_max; // any m < k is admissible since m may be 0; recorded for scope only
    for (int k = 1; k <= n_max; ++k) {
        std::vector<cplx> vals;
        for (const cplx& cp : critical_points(spec.polynomial_at(k)))
            vals.push_back(spec.polynomial_at(k).eval(cp));
        for (int n = k; n <= n_max; ++n) {
            if (n > k)
                for (auto& v : vals) v = spec.polynomial_at(n).eval(v);
            // C_{m,n} includes these values for every m < k <= n; m <= m_max
            // only matters through k - 1 <= m_max... any m < k works, so the
            // pair is admissible iff k >= 1 (m = min(k-1, m_max) >= 0).
            const JuliaSample& s = sample_at(n);
            double far_rad = 0.0;
            for (const cplx& q : s.points) far_rad = std::max(far_rad, std::abs(q));
            for (auto& v : vals) {
                if (std::abs(v) > polyseq::kOverflowCap) continue;
                if (std::abs(v) > R0) {
                    best = std::min(best, std::max(std::abs(v) - far_rad, R0 - far_rad));
                    continue;
                }
                for (const cplx& q : s.points) best = std::min(best, std::abs(v - q));
            }
        }
    }
    return best;
}

/// Lower-envelope fit of e_i = min log |Q'_{m,m+i}| over the samples:
/// least-squares line, then shifted down so C mu^i <= exp(e_i) for all i.
inline std::pair<double, double> expansion_constants(
    const SequenceSpec& spec, const std::vector<JuliaSample>& samples, int i_max) {
    std::vector<double> e(i_max + 1, 1e300);
    for (const auto& s : samples) {
        for (const cplx& z : s.points) {
            cplx w = z, dp(1.0, 0.0);
            for (int i = 1; i <= i_max; ++i) {
                const PolySpec p = spec.polynomial_at(s.m + i);
                dp *= p.eval_derivative(w);
                w = p.eval(w);
                const double a = std::abs(dp);
                if (!(a > 0.0) || a > polyseq::kOverflowCap) break;
                e[i] = std::min(e[i], std::log(a));
            }
        }
    }
    std::vector<double> xs, ys;
    for (int i = 1; i <= i_max; ++i)
        if (e[i] < 1e299) {
            xs.push_back(i);
            ys.push_back(e[i]);
        }
    if (xs.size() < 2) return {0.0, 0.0};
    auto [a, b] = fit_line(xs, ys);
    double shift = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        shift = std::max(shift, a + b * xs[i] - ys[i]);
    return {std::exp(a - shift), std::exp(b)};
}

/// Smallest N with min over sampled (m, z) of |Q'_{m,m+N}(z)| >= 2 (tiny
/// slack so exact-threshold cases classify at the intended N), or nullopt.
inline std::optional<int> doubling_time(const SequenceSpec& spec,
                                        const std::vector<JuliaSample>& samples,
                                        int n0_max) {
    std::vector<double> min_log(n0_max + 1, 1e300);
    for (const auto& s : samples) {
        for (const cplx& z : s.points) {
            cplx w = z, dp(1.0, 0.0);
            for (int i = 1; i <= n0_max; ++i) {
                const PolySpec p = spec.polynomial_at(s.m + i);
                dp *= p.eval_derivative(w);
                w = p.eval(w);
                const double a = std::abs(dp);
                if (!(a > 0.0) || a > polyseq::kOverflowCap) break;
                min_log[i] = std::min(min_log[i], std::log(a));
            }
        }
    }
    const double thresh = std::log(2.0) - 1e-9;
    for (int i = 1; i <= n0_max; ++i)
        if (min_log[i] < 1e299 && min_log[i] >= thresh) return i;
    return std::nullopt;
}

enum class FailReason { None, Expansion, Postcritical, Doubling, Sampling };

inline const char* fail_reason_name(FailReason r) {
    switch (r) {
        case FailReason::None: return "none";
        case FailReason::Expansion: return "expansion";
        case FailReason::Postcritical: return "postcritical";
        case FailReason::Doubling: return "doubling";
        case FailReason::Sampling: return "sampling";
    }
    return "?";
}

struct CertifyConfig {
    int m_max = 8;
    int n_max = 24;
    int i_max = 12;
    int sample_count = 128; // counts divisible by 7 pick up the rabbit's slow angles
    double delta_min = 1e-3;
    double mu_min = 1.05;
    int n0_max = 256;
    SampleParams sampling;
};

/// Heuristic hyperbolicity certificate: every number is an estimate over the
/// recorded horizons and sample counts, not a proof.
struct HyperbolicityCert {
    double delta = 0.0;
    double C = 0.0;
    double mu = 0.0;
    std::optional<int> N0;
    int m_max = 0, n_max = 0, i_max = 0;
    int sample_count = 0;
    FailReason reason = FailReason::None;
    bool pass = false;
};

inline HyperbolicityCert certify(const SequenceSpec& spec, const CertifyConfig& cfg = {}) {
    HyperbolicityCert cert;
    cert.m_max = cfg.m_max;
    cert.n_max = cfg.n_max;
    cert.i_max = cfg.i_max;
    cert.sample_count = cfg.sample_count;

    // constant and periodic rules repeat their Julia sets; sample one period
    int period = 0;
    if (std::holds_alternative<polyseq::ConstantRule>(spec.rule()))
        period = 1;
    else if (const auto* p = std::get_if<polyseq::PeriodicRule>(&spec.rule()))
        period = static_cast<int>(p->polys.size());

    const int t_hi = std::max(cfg.m_max, cfg.n_max);
    std::vector<JuliaSample> samples;
    std::map<int, std::size_t> by_phase;
    for (int t = 0; t <= t_hi; ++t) {
        if (period > 0) {
            const int phase = t % period;
            if (by_phase.count(phase)) {
                JuliaSample copy = samples[by_phase[phase]];
                copy.m = t;
                samples.push_back(std::move(copy));
                continue;
            }
            by_phase[phase] = samples.size();
        }
        samples.push_back(julia_sample(spec, t, cfg.sample_count, cfg.sampling));
    }

    std::vector<JuliaSample> expansion_samples(samples.begin(),
                                               samples.begin() + cfg.m_max + 1);
    auto [C, mu] = expansion_constants(spec, expansion_samples, cfg.i_max);
    cert.C = C;
    cert.mu = mu;
    cert.delta = postcritical_distance(spec, cfg.m_max, cfg.n_max, samples);
    cert.N0 = doubling_time(spec, expansion_samples, cfg.n0_max);

    if (!(cert.mu > 1.0) || cert.mu < cfg.mu_min)
        cert.reason = FailReason::Expansion;
    else if (!(cert.delta > 0.0) || cert.delta < cfg.delta_min)
        cert.reason = FailReason::Postcritical;
    else if (!cert.N0)
        cert.reason = FailReason::Doubling;
    cert.pass = cert.reason == FailReason::None;
    return cert;
}

} // namespace seqdyn::hyperbolicity
