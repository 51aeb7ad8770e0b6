#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "seqdyn/util.hpp"

namespace seqdyn::roots {

// Roots of a*x^2 + b*x + c with the numerically stable split.
inline std::vector<cplx> solve_quadratic(cplx a, cplx b, cplx c) {
    const cplx disc = std::sqrt(b * b - 4.0 * a * c);
    // pick the sign that avoids cancellation in -b -+ disc
    const cplx q = (std::real(std::conj(b) * disc) >= 0.0) ? -0.5 * (b + disc)
                                                           : -0.5 * (b - disc);
    if (std::abs(q) == 0.0) return {cplx(0.0), cplx(0.0)};
    return {q / a, c / q};
}

// All complex roots of p(x) = coeffs[0] + coeffs[1] x + ... by simultaneous
// Durand-Kerner iteration, polished with a Newton step per root.
inline std::vector<cplx> durand_kerner(std::vector<cplx> coeffs,
                                       double tol = 1e-13, int max_iter = 400) {
    while (coeffs.size() > 1 && std::abs(coeffs.back()) == 0.0) coeffs.pop_back();
    const int deg = static_cast<int>(coeffs.size()) - 1;
    if (deg <= 0) return {};
    if (deg == 1) return {-coeffs[0] / coeffs[1]};
    if (deg == 2) return solve_quadratic(coeffs[2], coeffs[1], coeffs[0]);

    const cplx lead = coeffs.back();
    for (auto& c : coeffs) c /= lead;

    auto eval = [&](cplx x) {
        cplx v = coeffs[deg];
        for (int i = deg - 1; i >= 0; --i) v = v * x + coeffs[i];
        return v;
    };
    auto eval_d = [&](cplx x) {
        cplx v = coeffs[deg] * static_cast<double>(deg);
        for (int i = deg - 1; i >= 1; --i) v = v * x + coeffs[i] * static_cast<double>(i);
        return v;
    };

    // Cauchy-style radius containing all roots.
    double radius = 0.0;
    for (int i = 0; i < deg; ++i) radius = std::max(radius, std::abs(coeffs[i]));
    radius = 1.0 + radius;

    std::vector<cplx> roots(deg);
    cplx p(0.4, 0.9);
    cplx acc(1.0, 0.0);
    for (int i = 0; i < deg; ++i) {
        acc *= p;
        roots[i] = 0.65 * radius * acc / std::abs(acc);
    }

    for (int it = 0; it < max_iter; ++it) {
        double err = 0.0;
        for (int i = 0; i < deg; ++i) {
            cplx denom(1.0, 0.0);
            for (int j = 0; j < deg; ++j)
                if (j != i) denom *= roots[i] - roots[j];
            const cplx dr = eval(roots[i]) / denom;
            err = std::max(err, std::abs(dr));
            roots[i] -= dr;
        }
        if (err < tol * std::max(1.0, radius)) break;
    }
    for (auto& r : roots) {
        for (int s = 0; s < 2; ++s) {
            const cplx d = eval_d(r);
            if (std::abs(d) < 1e-300) break;
            r -= eval(r) / d;
        }
    }
    return roots;
}

// Roots of p(x) = y for p given by ascending coefficients.
inline std::vector<cplx> preimages(const std::vector<cplx>& coeffs, cplx y,
                                   double tol = 1e-13) {
    std::vector<cplx> shifted = coeffs;
    shifted[0] -= y;
    return durand_kerner(std::move(shifted), tol);
}

} // namespace seqdyn::roots
