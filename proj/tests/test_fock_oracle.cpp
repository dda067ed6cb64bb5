#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "kerrsim/experiments.hpp"
#include "kerrsim/fock_oracle.hpp"
#include "kerrsim/homodyne.hpp"
#include "kerrsim/hybrid_state.hpp"

using namespace kerrsim;

TEST_CASE("coherent state truncation keeps the Poisson tail negligible") {
    CHECK(fock_truncation(2.0) == 48);
    for (double a : {0.5, 1.0, 2.0, 3.0}) {
        const double n2 = coherent_fock({a, 0.0}).norm_squared();
        CHECK(n2 > 1.0 - 1e-10);
        CHECK(n2 < 1.0 + 1e-12);
    }
}

TEST_CASE("coherent amplitudes match the closed form") {
    const cplx alpha{1.3, 0.4};
    const FockVector v = coherent_fock(alpha);
    const double pref = std::exp(-0.5 * std::norm(alpha));
    cplx powOverRootFact{1.0, 0.0};
    for (std::size_t n = 0; n <= 10; ++n) {
        CHECK(std::abs(v.amps[n] - pref * powOverRootFact) < 1e-14);
        powOverRootFact *= alpha / std::sqrt(static_cast<double>(n + 1));
    }
}

TEST_CASE("hermite functions agree with the explicit low orders") {
    for (double x : {-2.7, -0.4, 0.0, 1.3, 3.8}) {
        const double psi0 = hermite_psi(0, x);
        CHECK(psi0 == position_kernel(x, {0.0, 0.0}).real());
        CHECK(std::abs(hermite_psi(1, x) - x * psi0) < 1e-14);
        CHECK(std::abs(hermite_psi(2, x) - (x * x - 1.0) / std::sqrt(2.0) * psi0) < 1e-14);
        CHECK(std::abs(hermite_psi(3, x) - (x * x * x - 3.0 * x) / std::sqrt(6.0) * psi0) <
              1e-14);
        CHECK(std::abs(hermite_psi(4, x) -
                       (x * x * x * x - 6.0 * x * x + 3.0) / std::sqrt(24.0) * psi0) < 1e-13);
    }
}

TEST_CASE("hermite functions are orthonormal on the quadrature axis") {
    const GridSpec grid{-60.0, 60.0, 0.01};
    const std::size_t count = 9;
    const std::size_t m = grid.points();
    std::vector<std::vector<double>> cols(m);
    for (std::size_t g = 0; g < m; ++g) cols[g] = hermite_psi_column(count, grid.lo + g * grid.step);
    for (std::size_t a = 0; a < count; ++a) {
        for (std::size_t b = a; b < count; ++b) {
            double s = 0.0;
            for (std::size_t g = 0; g < m; ++g) s += cols[g][a] * cols[g][b];
            s *= grid.step;
            CHECK(std::abs(s - (a == b ? 1.0 : 0.0)) < 1e-8);
        }
    }
}

TEST_CASE("hermite recurrence stays bounded at high order") {
    for (double x : {-60.0, -13.7, 0.0, 21.4, 60.0}) {
        const double v = hermite_psi(400, x);
        CHECK(std::isfinite(v));
        CHECK(std::abs(v) < 1.0);
    }
}

TEST_CASE("joint states are row-major with the probe fastest") {
    FockVector s0, s1, probe;
    s0.amps = {cplx{0.6, 0.0}, cplx{0.0, 0.8}};
    s1.amps = {cplx{0.5, 0.5}, cplx{0.2, 0.0}, cplx{0.0, 0.3}};
    probe.amps = {cplx{0.1, 0.0}, cplx{0.0, 0.2}, cplx{0.3, 0.0}, cplx{0.4, 0.4}};
    const FockJoint j = oracle_join({s0, s1}, probe);
    REQUIRE(j.signalDims == std::vector<std::size_t>{2, 3});
    CHECK(j.probeDim == 4);
    REQUIRE(j.amps.size() == 24);
    CHECK(j.signal_size() == 6);
    for (std::size_t n0 = 0; n0 < 2; ++n0)
        for (std::size_t n1 = 0; n1 < 3; ++n1)
            for (std::size_t nc = 0; nc < 4; ++nc) {
                const cplx want = s0.amps[n0] * s1.amps[n1] * probe.amps[nc];
                CHECK(std::abs(j.amps[(n0 * 3 + n1) * 4 + nc] - want) < 1e-15);
            }
    CHECK(j.norm_squared() ==
          Catch::Approx(s0.norm_squared() * s1.norm_squared() * probe.norm_squared())
              .epsilon(1e-12));
    CHECK_THROWS_AS(oracle_join({}, FockVector{}), invalid_input);
    CHECK_THROWS_AS(oracle_join({FockVector{}}, probe), invalid_input);
}

TEST_CASE("single photon kerr kick matches the branch engine density") {
    const double alpha = 2.0, theta = 0.5;
    HybridState s = new_product_state({QubitInit::basis_h()});
    auto [sp, p] = allocate_probe(s, {alpha, 0.0});
    const HybridState k = conditional_kerr(sp, 0, PolLabel::H, p, theta);

    const double mean = 2.0 * alpha * std::cos(theta);
    const GridSpec grid{mean - 10.0, mean + 10.0, 0.01};
    const MeasurementDensity engine = density(k, p, grid);

    const FockJoint joint = oracle_kerr(fock_basis(1, 2), coherent_fock({alpha, 0.0}), theta);
    const std::vector<double> oracle = oracle_density(joint, grid);

    REQUIRE(oracle.size() == engine.p.size());
    double linf = 0.0;
    for (std::size_t g = 0; g < oracle.size(); ++g)
        linf = std::max(linf, std::abs(oracle[g] - engine.p[g]));
    CHECK(linf <= 1e-8);

    double integral = 0.0;
    for (double v : oracle) integral += v;
    CHECK(std::abs(integral * grid.step - 1.0) < 1e-6);
}

TEST_CASE("a two photon component picks up a doubled kick") {
    const double alpha = 2.0, theta = 0.25;
    const FockJoint joint = oracle_kerr(fock_basis(2, 3), coherent_fock({alpha, 0.0}), theta);
    const GridSpec grid{-10.0, 14.0, 0.005};
    const std::vector<double> p = oracle_density(joint, grid);
    const std::size_t peak =
        static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    const double want = 2.0 * alpha * std::cos(2.0 * theta);
    CHECK(std::abs((grid.lo + peak * grid.step) - want) < 2.0 * grid.step);
    CHECK_THROWS_AS(oracle_kerr(joint, 1, theta), invalid_input);
}

TEST_CASE("projection posteriors are normalized and follow the kernel ratio") {
    const double alpha = 2.0;
    FockVector signal;
    signal.amps = {cplx{1.0 / std::sqrt(2.0), 0.0}, cplx{1.0 / std::sqrt(2.0), 0.0}};
    const FockJoint joint = oracle_kerr(signal, coherent_fock({alpha, 0.0}), kHalfPi);
    // unkicked component peaks at x = 4; the kicked one is centered at 0
    const FockPosterior post = oracle_project(joint, 4.0);
    double n2 = 0.0;
    for (const auto& a : post.amps) n2 += std::norm(a);
    CHECK(std::abs(n2 - 1.0) < 1e-12);
    REQUIRE(post.amps.size() == 2);
    const double ratio = std::abs(post.amps[1]) / std::abs(post.amps[0]);
    CHECK(std::abs(ratio - std::exp(-4.0)) < 1e-6);

    FockVector vacuumOnly;
    vacuumOnly.amps = {cplx{1.0, 0.0}};
    const FockJoint far = oracle_join({vacuumOnly}, coherent_fock({0.0, 0.0}, 8));
    CHECK_THROWS_AS(oracle_project(far, 60.0), impossible_outcome);
}

TEST_CASE("fock fidelity is an overlap") {
    const std::vector<cplx> e0 = {cplx{1.0, 0.0}, cplx{0.0, 0.0}};
    const std::vector<cplx> e1 = {cplx{0.0, 0.0}, cplx{0.0, 1.0}};
    CHECK(fock_fidelity(e0, e0) == Catch::Approx(1.0).margin(1e-14));
    CHECK(fock_fidelity(e0, e1) < 1e-14);
    CHECK_THROWS_AS(fock_fidelity(e0, std::vector<cplx>{cplx{1.0, 0.0}}), invalid_input);
    CHECK_THROWS_AS(fock_basis(3, 3), invalid_input);
}

TEST_CASE("oracle cross-validation passes across kick angles") {
    for (double theta : {0.1, 0.5, 1.0}) {
        const experiments::ValidateReport r = experiments::validate_report(2.0, theta);
        INFO("theta " << theta << " linf " << r.maxDensityLinf << " fid "
                      << r.minPosteriorFidelity);
        CHECK(r.pass);
        CHECK(r.maxDensityLinf <= 1e-8);
        CHECK(r.minPosteriorFidelity >= 1.0 - 1e-10);
        CHECK(r.rows.size() == 13);
    }
    CHECK_THROWS_AS(experiments::validate_report(0.0, 0.5), invalid_input);
    CHECK_THROWS_AS(experiments::validate_report(20.0, 0.5), invalid_input);
    CHECK_THROWS_AS(experiments::validate_report(2.0, 0.0), invalid_input);
}
