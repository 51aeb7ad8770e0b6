#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/polyseq.hpp"
#include "seqdyn/util.hpp"

namespace seqdyn::potential::detail {

using polyseq::PolySpec;
using polyseq::SequenceSpec;

struct FarEval {
    cplx log_phi;  // principal Log z plus principal corrections
    cplx dlog_phi; // d/dz log phi
    int n_escape;  // already escaped: the base time
    int n_used;    // last time index folded into the product
    double residual;
};

// log phi_m(z) for |z| > R_0 on a monic sequence, as the telescoping product
//
//   log phi = Log z + sum_n (1/D_{m,n+1}) log(1 + u_n),
//   u_n = (P_{n+1}(w_n) - w_n^{d_{n+1}}) / w_n^{d_{n+1}},
//
// every branch principal; |u_n| <= 1/2 past the escape radius makes this the
// analytic continuation from the far positive real axis. The derivative is
// accumulated alongside when requested.
inline FarEval far_log_phi(const SequenceSpec& spec, int m, cplx z, int horizon = 256,
                           bool need_derivative = true) {
    FarEval out;
    out.log_phi = std::log(z);
    out.dlog_phi = 1.0 / z;
    out.n_escape = m;
    out.n_used = m;
    out.residual = 0.0;

    cplx w = z;
    cplx wp(1.0, 0.0);
    double invD = 1.0;
    bool track_d = need_derivative;

    for (int n = m + 1; n <= m + horizon; ++n) {
        const PolySpec p = spec.polynomial_at(n);
        const auto& c = p.coeffs();
        const int d = p.degree();
        const cplx x = 1.0 / w;

        // u = (lead - 1) + sum_{j<d} a_j x^{d-j}, Horner in x
        cplx u = c[d] - 1.0;
        cplx acc(0.0, 0.0);
        for (int j = 0; j < d; ++j) acc = (acc + c[j]) * x; // after loop: sum a_j x^{d-j}
        u += acc;
        // du/dx = sum_{j<d} (d-j) a_j x^{d-j-1}
        cplx dudx(0.0, 0.0);
        if (track_d) {
            for (int j = 0; j < d; ++j)
                dudx = dudx * x + c[j] * static_cast<double>(d - j);
        }

        invD /= d;
        const cplx term = invD * std::log(1.0 + u);
        out.log_phi += term;
        if (track_d) {
            const cplx du_dz = dudx * (-x * x) * wp;
            out.dlog_phi += invD * du_dz / (1.0 + u);
        }

        // advance orbit
        if (track_d) wp *= p.eval_derivative(w);
        w = p.eval(w);
        out.n_used = n;
        out.residual = 2.0 * std::abs(term);

        if (std::abs(w) > polyseq::kOverflowCap) {
            out.residual = std::min(out.residual, 1e-200);
            break;
        }
        if (track_d && std::abs(wp) > polyseq::kOverflowCap) track_d = false;
        if (std::abs(term) < 1e-18 * (1.0 + std::abs(out.log_phi))) break;
    }
    return out;
}

// Solve log phi_n(z) = target with Im(target) in (-pi, pi], Newton seeded at
// exp(target); valid for targets with Re >= log(2 R_0).
inline cplx far_solve(const SequenceSpec& spec, int n, cplx target, double R0,
                      double tol = 1e-13) {
    cplx z = std::exp(target);
    for (int it = 0; it < 60; ++it) {
        const FarEval fe = far_log_phi(spec, n, z);
        cplx r = fe.log_phi - target;
        r = cplx(r.real(), wrap_angle(r.imag()));
        if (std::abs(r) < tol) return z;
        z -= r / fe.dlog_phi;
        if (!(std::abs(z) > R0))
            throw ContinuationStall("far-field Newton left the escape region");
    }
    throw ContinuationStall("far-field Newton did not converge");
}

} // namespace seqdyn::potential::detail
