#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "ambicon/analytic.hpp"
#include "ambicon/montecarlo.hpp"

using namespace ambicon;

static RiskProfile std_profile() {
    return make_profile(1.0, 1.0, 1.0, 2.0, 1.0, -1.0);
}

TEST_CASE("counter-based normals are pure functions of (seed, index)") {
    CHECK(normal_at(42, 7) == normal_at(42, 7));
    CHECK(normal_at(42, 7) != normal_at(42, 8));
    CHECK(normal_at(42, 7) != normal_at(43, 7));

    // moments over a long stream
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double g = normal_at(123, i);
        s += g;
        s2 += g * g;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("terminal sampling matches the Gaussian law") {
    RiskProfile p = std_profile();

    Scenario sc{1.0, 0.0, 1000000, 42};
    auto samples = sample_terminal(sc, p);
    REQUIRE(samples.size() == sc.n_paths);
    double mean = 0.0, var = 0.0;
    for (const auto& s : samples) mean += s.b_t;
    mean /= samples.size();
    for (const auto& s : samples) var += (s.b_t - mean) * (s.b_t - mean);
    var /= samples.size();
    CHECK(std::abs(mean) < 4e-3);
    CHECK(var == doctest::Approx(1.0).epsilon(0.01));
    for (std::size_t i = 0; i < samples.size(); i += 99991) {
        CHECK(samples[i].qv_t == 1.0);
        CHECK(samples[i].cost_integral == 0.0);
    }

    Scenario sc2{0.25, 2.0, 200000, 42};
    auto s2 = sample_terminal(sc2, p);
    double m2 = 0.0, v2 = 0.0;
    for (const auto& s : s2) m2 += s.b_t;
    m2 /= s2.size();
    for (const auto& s : s2) v2 += (s.b_t - m2) * (s.b_t - m2);
    v2 /= s2.size();
    CHECK(m2 == doctest::Approx(2.0).epsilon(0.005));
    CHECK(v2 == doctest::Approx(0.25).epsilon(0.01));
    CHECK(s2[0].effort_integral == 2.0);
    CHECK(s2[0].cost_integral == 2.0);
}

TEST_CASE("utility estimates against the closed forms") {
    RiskProfile p = std_profile();

    // full-slope contract makes the principal integrand constant
    auto full = estimate_utilities({1.0, 0.0, 0.0}, {1.0, 1.0, 10000, 1}, p);
    CHECK(full.u_p.mean == -1.0);
    CHECK(full.u_p.std_error == 0.0);

    Scenario sc{1.0, 1.0, 1000000, 42};
    auto est = estimate_utilities({0.5, 0.0, 0.0}, sc, p);
    CHECK(std::abs(est.u_p.mean - (-std::exp(-0.375))) <=
          3.5 * est.u_p.std_error);

    Scenario sc15{1.5, 1.0, 1000000, 42};
    auto est15 = estimate_utilities({0.5, 0.0, 0.0}, sc15, p);
    CHECK(std::abs(est15.u_a.mean - (-std::exp(0.1875))) <=
          3.5 * est15.u_a.std_error);
}

TEST_CASE("estimates are bit-identical across worker counts") {
    RiskProfile p = std_profile();
    Scenario sc{1.2, 0.8, 300000, 7};
    LinearQuadraticContract c{0.4, 0.3, -0.1};
    McOptions one;
    one.n_workers = 1;
    McOptions four;
    four.n_workers = 4;
    McOptions seven;
    seven.n_workers = 7;
    auto a = estimate_utilities(c, sc, p, one);
    auto b = estimate_utilities(c, sc, p, four);
    auto d = estimate_utilities(c, sc, p, seven);
    CHECK(a.u_p.mean == b.u_p.mean);
    CHECK(a.u_a.mean == b.u_a.mean);
    CHECK(a.u_p.std_error == b.u_p.std_error);
    CHECK(b.u_p.mean == d.u_p.mean);
    CHECK(b.u_a.std_error == d.u_a.std_error);
}

TEST_CASE("euler path mode approaches the exact sampler") {
    RiskProfile p = std_profile();
    Scenario sc{1.0, 1.0, 200000, 42};
    McOptions euler;
    euler.euler_paths = true;
    auto exact = estimate_utilities({0.5, 0.0, 0.0}, sc, p);
    auto path = estimate_utilities({0.5, 0.0, 0.0}, sc, p, euler);
    CHECK(std::abs(path.u_p.mean - exact.u_p.mean) <=
          3.5 * (path.u_p.std_error + exact.u_p.std_error));
}

TEST_CASE("worst-case scan finds the predicted endpoint") {
    RiskProfile p = std_profile();
    Scenario tmpl{1.0, 1.0, 10000, 42};

    ScanResult r = worst_case_scan({0.5, 0.0, 0.0}, 1.0, {0.5, 1.0},
                                   Side::Principal, 101, tmpl, p);
    CHECK(r.alpha_worst == 1.0);
    CHECK(r.value.mean == doctest::Approx(-std::exp(-0.375)).epsilon(1e-14));

    // boundary slope: flat across the band
    ScanResult flat = worst_case_scan({0.5, -0.25, 0.0}, 1.0, {0.5, 1.0},
                                      Side::Principal, 101, tmpl, p);
    double ref = f_eval(1.0, {0.5, -0.25, 0.0}, 0.75, 1.0, 1.0, p).gamma_p;
    CHECK(flat.value.mean == doctest::Approx(ref).epsilon(1e-12));

    ScanResult ag = worst_case_scan({0.5, 0.5, 0.0}, 1.0, {0.5, 1.5},
                                    Side::Agent, 101, tmpl, p);
    CHECK(ag.alpha_worst == 0.5);

    // Monte Carlo route agrees with the closed-form route within noise
    ScanResult mc = worst_case_scan({0.5, 0.0, 0.0}, 1.0, {0.5, 1.0},
                                    Side::Principal, 5,
                                    {1.0, 1.0, 200000, 42}, p, false);
    CHECK(mc.alpha_worst == 1.0);
    CHECK(std::abs(mc.value.mean - r.value.mean) <= 3.5 * mc.value.std_error);

    CHECK_THROWS_AS(worst_case_scan({0.5, 0.0, 0.0}, 1.0, {0.5, 1.0},
                                    Side::Principal, 1, tmpl, p),
                    ValidationError);
}

TEST_CASE("directional derivative vanishes at the first-best optimum") {
    RiskProfile p = std_profile();
    AmbiguityBand band_a{0.7, 1.0}, band_p{0.5, 1.0};
    FbSolution fb = solve_first_best(p, band_a, band_p);
    double rho = fb_rho(fb, p);
    Scenario sc{fb.alpha_bar, fb.effort, 1000000, 42};

    for (auto kind :
         {Direction::Kind::Constant, Direction::Kind::TerminalOutput}) {
        Direction dir;
        dir.kind = kind;
        auto res = gateaux_residual(fb.representative, dir, fb.effort,
                                    fb.alpha_bar, fb.alpha_bar, rho, sc, p);
        // common draws make the residual pointwise zero here
        CHECK(std::abs(res.mean) <= 1e-12);
    }

    // shifting the transfer off the optimum breaks the first-order condition
    LinearQuadraticContract shifted = fb.representative;
    shifted.delta += 0.1;
    Direction one;
    one.kind = Direction::Kind::Constant;
    auto res = gateaux_residual(shifted, one, fb.effort, fb.alpha_bar,
                                fb.alpha_bar, rho, sc, p);
    CHECK(std::abs(res.mean) > 5.0 * res.std_error);
    // sign oracle: d/ddelta of (Gamma_P + rho Gamma_A) at delta* + 0.1 is
    // negative by strict concavity, and the residual estimates its negation
    double eps = 1e-6;
    auto fval = [&](double d) {
        return f_eval(fb.effort,
                      {shifted.z, shifted.gamma, d}, fb.alpha_bar,
                      fb.alpha_bar, rho, p)
            .f;
    };
    double dslope = (fval(shifted.delta + eps) - fval(shifted.delta - eps)) /
                    (2.0 * eps);
    CHECK(dslope < 0.0);
    CHECK(res.mean > 0.0);
}

TEST_CASE("zero direction gives an exactly zero residual") {
    RiskProfile p = std_profile();
    Direction zero;
    zero.kind = Direction::Kind::Custom;
    zero.functional = {0.0, 0.0, 0.0};
    auto res = gateaux_residual({0.5, 0.0, 0.0}, zero, 1.0, 1.0, 1.0, 1.0,
                                {1.0, 1.0, 50000, 42}, std_profile());
    CHECK(res.mean == 0.0);
    CHECK(res.std_error == 0.0);
}

TEST_CASE("randomized contracts agree with the closed-form oracle") {
    RiskProfile p = std_profile();
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> uz(0.0, 1.0), ug(-0.5, 0.5),
        ud(-0.5, 0.5), ua(0.5, 1.5), ue(0.0, 1.5);
    int hits = 0;
    const int cases = 50;
    for (int i = 0; i < cases; ++i) {
        LinearQuadraticContract c{uz(gen), ug(gen), ud(gen)};
        Scenario sc{ua(gen), ue(gen), 200000,
                    static_cast<std::uint64_t>(1000 + i)};
        auto est = estimate_utilities(c, sc, p);
        UtilityTerms t = f_eval(sc.effort, c, sc.alpha, sc.alpha, 1.0, p);
        bool ok_p = std::abs(est.u_p.mean - t.gamma_p) <=
                    3.5 * est.u_p.std_error + 1e-14;
        bool ok_a = std::abs(est.u_a.mean - t.gamma_a) <=
                    3.5 * est.u_a.std_error + 1e-14;
        if (ok_p && ok_a) ++hits;
    }
    CHECK(hits >= 48);
}
