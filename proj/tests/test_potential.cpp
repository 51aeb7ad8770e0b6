#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "seqdyn/polyseq.hpp"
#include "seqdyn/potential.hpp"

using namespace seqdyn;
using namespace seqdyn::polyseq;
using namespace seqdyn::potential;

namespace {

SequenceSpec z2() { return quadratic_spec(cplx(0.0), 1e-9); }
SequenceSpec rabbit() { return quadratic_spec(rabbit_c()); }

SequenceSpec random_monic_spec(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> degd(2, 3), lend(1, 3);
    std::uniform_real_distribution<double> coefd(-0.5, 0.5);
    const int len = lend(rng);
    std::vector<PolySpec> polys;
    for (int i = 0; i < len; ++i) {
        const int d = degd(rng);
        std::vector<cplx> c(d + 1);
        for (int j = 0; j < d; ++j) c[j] = cplx(coefd(rng), coefd(rng));
        c[d] = 1.0;
        polys.emplace_back(std::move(c));
    }
    return SequenceSpec(PeriodicRule{std::move(polys)}, Bounds{3, 1.0, 1.0});
}

} // namespace

TEST_CASE("green equals log|z| for z^2", "[potential]") {
    const auto s = z2();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> rd(std::log(1.1), std::log(100.0)), ad(0.0, two_pi);
    for (int i = 0; i < 200; ++i) {
        const cplx z = std::polar(std::exp(rd(rng)), ad(rng));
        const auto g = green(s, 0, z);
        REQUIRE(g.has_value());
        CHECK(*g == Catch::Approx(std::log(std::abs(z))).margin(1e-12));
    }
    CHECK_FALSE(green(s, 0, cplx(0.5, 0.1), 2000).has_value()); // NotEscaped inside
}

TEST_CASE("green matches a brute-force high-horizon limit on the rabbit", "[potential]") {
    const auto s = rabbit();
    const cplx z(10.0, 0.0);
    const auto g = green(s, 0, z);
    REQUIRE(g.has_value());
    // independent oracle: (1/2^n) log |Q_{0,n}(z)| at n = 60, in log scale
    double L = std::log(std::abs(z));
    cplx u = z / std::abs(z);
    const cplx c = rabbit_c();
    for (int k = 0; k < 60; ++k) {
        const double inv_r = std::exp(std::min(-L, 700.0));
        const cplx x = inv_r * std::conj(u);
        const cplx s1 = 1.0 + c * x * x; // P(w)/w^2
        L = 2.0 * L + std::log(std::abs(s1));
        u = u * u * (s1 / std::abs(s1));
    }
    const double oracle = L / std::pow(2.0, 60);
    CHECK(*g == Catch::Approx(oracle).margin(1e-12));
}

TEST_CASE("green stays within the escape-circle sandwich", "[potential]") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 10; ++rep) {
        const auto s = random_monic_spec(rng);
        const double R0 = escape_radius(s.bounds());
        for (double f : {1.0, 2.0, 10.0}) {
            for (int i = 0; i < 40; ++i) {
                const cplx z = std::polar(f * R0, two_pi * i / 40.0);
                const auto g = green(s, 0, z);
                REQUIRE(g.has_value());
                CHECK(*g >= std::log(f * R0) - 0.5 * std::log(2.0) - 1e-9);
                CHECK(*g <= std::log(f * R0) + 0.5 * std::log(1.5) + 1e-9);
            }
        }
    }
}

TEST_CASE("green functional relation", "[potential]") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 6; ++rep) {
        const auto s = random_monic_spec(rng);
        const double R0 = escape_radius(s.bounds());
        for (int i = 0; i < 25; ++i) {
            const cplx z = std::polar(R0 * (1.0 + 0.2 * (i % 5)), two_pi * i / 25.0);
            for (int m = 0; m <= 2; ++m)
                for (int n = m + 1; n <= m + 5; ++n) {
                    const auto qe = compose_eval(s, m, n, z);
                    if (qe.overflow_step) break;
                    const auto gm = green(s, m, z);
                    const auto gn = green(s, n, qe.value);
                    REQUIRE(gm.has_value());
                    REQUIRE(gn.has_value());
                    const double D = 1.0 / qe.ledger.invD;
                    CHECK(std::abs(*gn - D * *gm) <= 1e-8 * std::max(1.0, std::abs(*gn)));
                }
        }
    }
}

TEST_CASE("bottcher is the identity for z^2", "[potential]") {
    const auto s = z2();
    const auto r = bottcher(s, 0, cplx(3.0, 0.0));
    REQUIRE(r.has_value());
    CHECK(std::abs(r->bottcher - cplx(3.0)) < 1e-12);
    // inside the escape radius the pre-escape continuation carries the branch
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> rd(1.1, 1.9), ad(0.0, two_pi);
    for (int i = 0; i < 60; ++i) {
        const cplx z = std::polar(rd(rng), ad(rng));
        const auto q = bottcher(s, 0, z);
        REQUIRE(q.has_value());
        CHECK(std::abs(q->bottcher - z) <= 1e-10 * std::abs(z));
        CHECK(q->green == Catch::Approx(std::log(std::abs(z))).margin(1e-10));
    }
    CHECK_FALSE(bottcher(s, 0, cplx(0.3, 0.2), 2000).has_value());
}

TEST_CASE("bottcher functional equation", "[potential]") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 8; ++rep) {
        const auto s = random_monic_spec(rng);
        const double R0 = escape_radius(s.bounds());
        for (int i = 0; i < 30; ++i) {
            const cplx z = std::polar(R0 * (1.01 + 0.5 * (i % 4)), two_pi * i / 30.0);
            for (int m = 0; m <= 2; ++m) {
                const auto pm = bottcher(s, m, z);
                const auto pz = s.polynomial_at(m + 1).eval(z);
                const auto pn = bottcher(s, m + 1, pz);
                REQUIRE(pm.has_value());
                REQUIRE(pn.has_value());
                cplx powed(1.0, 0.0);
                for (int d = 0; d < s.polynomial_at(m + 1).degree(); ++d)
                    powed *= pm->bottcher;
                CHECK(std::abs(pn->bottcher - powed) <= 1e-8 * std::abs(powed));
            }
        }
    }
}

TEST_CASE("bottcher is close to the identity far out", "[potential]") {
    const auto s = rabbit();
    const double R0 = escape_radius(s.bounds());
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const cplx z = std::polar(2.0 * R0 * (1.0 + i * 0.2), two_pi * i / 50.0);
        const auto r = bottcher(s, 0, z);
        REQUIRE(r.has_value());
        worst = std::max(worst, std::abs(r->bottcher - z));
    }
    CHECK(worst < 1.0); // |phi(z) - z| bounded by a finite constant
}

TEST_CASE("green agrees with log|bottcher|", "[potential]") {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 6; ++rep) {
        const auto s = random_monic_spec(rng);
        const double R0 = escape_radius(s.bounds());
        for (int i = 0; i < 20; ++i) {
            const cplx z = std::polar(R0 * (0.8 + 0.3 * (i % 5)), two_pi * i / 20.0);
            const auto g = green(s, 0, z);
            std::optional<PotentialResult> b;
            try {
                b = bottcher(s, 0, z);
            } catch (const BranchLoss&) {
                continue; // grazing the filled set; green alone is still fine
            }
            if (!g || !b) continue;
            CHECK(std::abs(std::log(std::abs(b->bottcher)) - *g) <=
                  1e-9 * std::max(1.0, std::abs(*g)));
        }
    }
}

TEST_CASE("truncation bound at the escape circle", "[potential]") {
    // |phi^n(z)| <= sqrt(3/2) R_0 at |z| = R_0 for every truncation level;
    // the modulus needs no branch, so a log-scale sweep is an independent check
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        const auto s = random_monic_spec(rng);
        const double R0 = escape_radius(s.bounds());
        for (int i = 0; i < 16; ++i) {
            const cplx z = std::polar(R0, two_pi * i / 16.0);
            double L = std::log(std::abs(z));
            cplx u = z / std::abs(z);
            double invD = 1.0;
            for (int n = 1; n <= 24; ++n) {
                const auto p = s.polynomial_at(n);
                const int d = p.degree();
                const double inv_r = std::exp(std::min(-L, 700.0));
                const cplx x = inv_r * std::conj(u);
                const auto& c = p.coeffs();
                cplx acc(0.0, 0.0);
                for (int j = 0; j < d; ++j) acc = (acc + c[j]) * x;
                const cplx sfac = c[d] + acc;
                L = d * L + std::log(std::abs(sfac));
                cplx ud(1.0, 0.0);
                for (int k = 0; k < d; ++k) ud *= u;
                u = ud * (sfac / std::abs(sfac));
                invD /= d;
                CHECK(invD * L <= std::log(std::sqrt(1.5) * R0) + 1e-9);
            }
        }
    }
}

TEST_CASE("monotone refinement of the truncated product", "[potential]") {
    const auto s = rabbit();
    const double R0 = escape_radius(s.bounds());
    const cplx z = std::polar(R0 * 1.02, 1.0);
    const auto full = bottcher(s, 0, z, 200);
    REQUIRE(full.has_value());
    double prev_err = 1e300;
    for (int h = 2; h <= 12; h += 2) {
        const auto part = bottcher(s, 0, z, (full->n_escape) + h);
        REQUIRE(part.has_value());
        const double err = std::abs(part->bottcher - full->bottcher);
        CHECK(err <= part->residual + 1e-14);
        CHECK(err <= prev_err + 1e-14);
        prev_err = err;
    }
}

TEST_CASE("inverse_bottcher is the identity for z^2", "[potential]") {
    const auto s = z2();
    const cplx w = std::polar(2.0, two_pi / 7.0);
    CHECK(std::abs(inverse_bottcher(s, 0, w) - w) < 1e-10);
}

TEST_CASE("inverse_bottcher round trip", "[potential]") {
    const auto s = rabbit();
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> rd(std::log(1.05), std::log(50.0)), ad(0.0, two_pi);
    for (int i = 0; i < 100; ++i) {
        const cplx w = std::polar(std::exp(rd(rng)), ad(rng));
        const cplx z = inverse_bottcher(s, 0, w, 1e-12);
        const auto back = bottcher(s, 0, z);
        REQUIRE(back.has_value());
        CHECK(std::abs(back->bottcher - w) <= 1e-8 * std::abs(w));
    }
}

TEST_CASE("inverse_bottcher lands on the zero-angle ray", "[potential]") {
    const auto s = rabbit();
    const cplx z = inverse_bottcher(s, 0, cplx(1.5, 0.0), 1e-12);
    const auto b = bottcher(s, 0, z);
    REQUIRE(b.has_value());
    CHECK(std::abs(b->bottcher.imag()) <= 1e-8);
}

TEST_CASE("inverse_bottcher rejects potentials below the floor", "[potential]") {
    const auto s = z2();
    CHECK_THROWS_AS(inverse_bottcher(s, 0, std::polar(1.0 + 1e-6, 0.3)), ContinuationStall);
}

TEST_CASE("non-monic input is rejected", "[potential]") {
    SequenceSpec s(ConstantRule{PolySpec({cplx(0.0), cplx(0.0), cplx(2.0)})},
                   Bounds{2, 2.0, 0.0});
    CHECK_THROWS_AS(green(s, 0, cplx(3.0)), BoundsViolation);
    CHECK_THROWS_AS(bottcher(s, 0, cplx(3.0)), BoundsViolation);
    CHECK_THROWS_AS(inverse_bottcher(s, 0, cplx(2.0)), BoundsViolation);
}
