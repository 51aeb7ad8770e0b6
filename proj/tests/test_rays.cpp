#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "seqdyn/polyseq.hpp"
#include "seqdyn/potential.hpp"
#include "seqdyn/rays.hpp"

using namespace seqdyn;
using namespace seqdyn::polyseq;
using namespace seqdyn::rays;

namespace {

SequenceSpec z2() { return quadratic_spec(cplx(0.0), 1e-9); }
SequenceSpec rabbit() { return quadratic_spec(rabbit_c()); }

cplx rabbit_alpha() {
    const cplx c = rabbit_c();
    return (1.0 - std::sqrt(1.0 - 4.0 * c)) / 2.0;
}

SequenceSpec periodic23() {
    // [z^2, z^3 + 0.05]
    const PolySpec p2({cplx(0.0), cplx(0.0), cplx(1.0)});
    const PolySpec p3({cplx(0.05), cplx(0.0), cplx(0.0), cplx(1.0)});
    return SequenceSpec(PeriodicRule{{p2, p3}}, Bounds{3, 1.0, 0.05});
}

} // namespace

TEST_CASE("z^2 rays land on the unit circle", "[rays]") {
    const auto s = z2();
    for (auto [p, q] : {std::pair<std::uint64_t, std::uint64_t>{0, 1}, {1, 3}, {1, 7}}) {
        const auto tr = trace_ray(s, 0, Angle::rational(p, q), landing_params(1e-12));
        REQUIRE(tr.status == RayStatus::Landed);
        const cplx expect = std::polar(1.0, two_pi * static_cast<double>(p) / q);
        CHECK(std::abs(*tr.landing - expect) < 1e-8);
        // the theta = 0 ray is the real interval (1, infinity)
        if (p == 0)
            for (const auto& pt : tr.points) {
                CHECK(std::abs(pt.z.imag()) < 1e-10);
                CHECK(pt.z.real() > 1.0 - 1e-12);
            }
    }
    // descending potentials on the recorded schedule
    const auto tr = trace_ray(s, 0, Angle::rational(1, 7));
    for (std::size_t i = 0; i + 1 < tr.points.size(); ++i)
        CHECK(tr.points[i + 1].potential < tr.points[i].potential);
}

TEST_CASE("rabbit characteristic rays land on the alpha fixed point", "[rays]") {
    const auto s = rabbit();
    const cplx alpha = rabbit_alpha();
    for (std::uint64_t p : {1, 2, 4}) {
        const auto tr = trace_ray(s, 0, Angle::rational(p, 7), landing_params());
        REQUIRE(tr.status == RayStatus::Landed);
        CHECK(std::abs(*tr.landing - alpha) < 1e-6);
    }
}

TEST_CASE("co-landing groups", "[rays]") {
    const auto s2 = z2();
    std::vector<Angle> two = {Angle::rational(1, 7), Angle::rational(2, 7)};
    const auto singletons = co_landing_groups(s2, 0, two, 1e-6, landing_params(1e-12));
    CHECK(singletons.size() == 2);

    const auto rb = rabbit();
    std::vector<Angle> three = {Angle::rational(1, 7), Angle::rational(2, 7),
                                Angle::rational(4, 7)};
    const auto joined = co_landing_groups(rb, 0, three, 1e-6);
    REQUIRE(joined.size() == 1);
    CHECK(joined[0].size() == 3);
}

TEST_CASE("co-landing for a seeded perturbation of the rabbit", "[rays]") {
    SequenceSpec pert(
        SeededPerturbationRule{PolySpec({rabbit_c(), cplx(0.0), cplx(1.0)}),
                               {0.06, 0.0, 0.0}, 4242},
        Bounds{2, 1.0, 0.85});
    std::vector<Angle> three = {Angle::rational(1, 7), Angle::rational(2, 7),
                                Angle::rational(4, 7)};
    const auto groups = co_landing_groups(pert, 0, three, 1e-5);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].size() == 3);
}

TEST_CASE("unlanded rays are reported", "[rays]") {
    const auto s = z2();
    TraceParams shallow;
    shallow.t_min = 0.5; // stops far from the circle: no geometric tail yet
    std::vector<RayTrace> traces = {trace_ray(s, 0, Angle::rational(1, 7), shallow)};
    traces[0].status = RayStatus::Truncated;
    traces[0].landing.reset();
    CHECK_THROWS_AS(co_landing_groups(traces, 1e-6), UnlandedRay);
}

TEST_CASE("pushforward angles", "[rays]") {
    const auto s2 = z2();
    CHECK(pushforward_angle(s2, 0, 1, Angle::rational(1, 7)) == Angle::rational(2, 7));
    CHECK(pushforward_angle(s2, 0, 3, Angle::rational(1, 7)) == Angle::rational(1, 7));
    const auto p23 = periodic23();
    CHECK(pushforward_angle(p23, 0, 2, Angle::rational(1, 10)) == Angle::rational(6, 10));
    // double-mode angles agree to floating accuracy
    const Angle loose = pushforward_angle(p23, 0, 2, Angle::from_turns(0.1));
    CHECK(loose.turns() == Catch::Approx(0.6).margin(1e-12));
}

TEST_CASE("forward invariance of traced rays", "[rays]") {
    const auto s = rabbit();
    const auto tr = trace_ray(s, 0, Angle::rational(1, 7));
    int checked = 0;
    for (const auto& pt : tr.points) {
        if (pt.potential < 0.02) break;
        for (int n = 1; n <= 2; ++n) {
            const auto img = compose_eval(s, 0, n, pt.z);
            std::optional<potential::PotentialResult> b;
            try {
                b = potential::bottcher(s, n, img.value);
            } catch (const BranchLoss&) {
                continue; // radial continuation can clip a lobe of the filled set
            }
            if (!b) continue;
            const double D = std::pow(2.0, n);
            const Angle pushed = pushforward_angle(s, 0, n, Angle::rational(1, 7));
            const double want_arg = wrap_angle(two_pi * pushed.turns());
            CHECK(std::abs(wrap_angle(std::arg(b->bottcher) - want_arg)) < 1e-6);
            CHECK(b->green == Catch::Approx(D * pt.potential).epsilon(1e-6));
            ++checked;
        }
    }
    CHECK(checked >= 8);
}

TEST_CASE("landing independent of the shrink schedule", "[rays]") {
    const auto s = rabbit();
    for (std::uint64_t p : {1, 4}) {
        auto prm_a = landing_params();
        prm_a.shrink = 0.5;
        auto prm_b = landing_params();
        prm_b.shrink = 0.8;
        const auto a = trace_ray(s, 0, Angle::rational(p, 7), prm_a);
        const auto b = trace_ray(s, 0, Angle::rational(p, 7), prm_b);
        REQUIRE(a.status == RayStatus::Landed);
        REQUIRE(b.status == RayStatus::Landed);
        CHECK(std::abs(*a.landing - *b.landing) <=
              a.landing_radius + b.landing_radius + 1e-9);
    }
}

TEST_CASE("ray tail length anchors", "[rays]") {
    const auto s = z2();
    auto prm = landing_params(1e-12);
    const auto tr = trace_ray(s, 0, Angle::rational(0, 1), prm);
    REQUIRE(tr.status == RayStatus::Landed);
    // segment of the real axis from e^{log 2} = 2 down to the landing at 1
    CHECK(ray_tail_length(tr, std::log(2.0)) == Catch::Approx(1.0).margin(1e-3));
    // monotone in the potential cutoff
    CHECK(ray_tail_length(tr, 0.1) <= ray_tail_length(tr, 0.5) + 1e-15);
    CHECK(ray_tail_length(tr, 0.5) <= ray_tail_length(tr, std::log(2.0)) + 1e-15);
}

TEST_CASE("tail length refines with the schedule", "[rays]") {
    // polyline sums converge from below as the schedule refines; adjacent
    // fine schedules agree to 2% (coarse pairs cut the spiral's corners)
    const auto s = rabbit();
    std::vector<double> lens;
    for (double shr : {0.25, 0.5, 0.65, 0.8}) {
        auto p = landing_params(1e-6);
        p.shrink = shr;
        lens.push_back(ray_tail_length(trace_ray(s, 0, Angle::rational(1, 7), p), 0.7));
    }
    CHECK(lens[0] <= lens[2] + 0.02 * lens[2]);
    CHECK(lens[1] <= lens[2] + 0.02 * lens[2]);
    CHECK(std::abs(lens[3] - lens[2]) <= 0.02 * std::max(lens[2], lens[3]));
}

TEST_CASE("tail length shape: positive fitted exponent", "[rays]") {
    for (const auto& s : {rabbit(), periodic23()}) {
        const auto tr = trace_ray(s, 0, Angle::rational(1, 7), landing_params(1e-6));
        REQUIRE(tr.status == RayStatus::Landed);
        std::vector<double> xs, ys;
        for (double t = 1e-4; t <= 1e-1; t *= 2.0) {
            const double len = ray_tail_length(tr, t);
            if (len > 0.0) {
                xs.push_back(std::log(t));
                ys.push_back(std::log(len));
            }
        }
        REQUIRE(xs.size() >= 5);
        const auto [a, alpha_hat] = fit_line(xs, ys);
        (void)a;
        CHECK(alpha_hat > 0.0);
    }
}

TEST_CASE("trace potentials extrapolate to zero at the landing", "[rays]") {
    const auto s = rabbit();
    const auto tr = trace_ray(s, 0, Angle::rational(2, 7), landing_params());
    REQUIRE(tr.status == RayStatus::Landed);
    CHECK(tr.points.back().potential < 1e-40);
    CHECK(std::abs(tr.points.back().z - *tr.landing) <= tr.landing_radius + 1e-12);
}
