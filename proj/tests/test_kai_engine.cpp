#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kaicg/kai_engine.hpp"
#include "kaicg/signal_model.hpp"

using namespace kaicg;

namespace {

ScenarioConfig standard_scenario(double snr_db = 0.0, int n = 100, std::uint64_t seed = 1) {
    ScenarioConfig config;
    config.geometry = {12, 0.5};
    config.sources = SourceSet::uncorrelated({15.0, 17.0});
    config.n_snapshots = n;
    config.snr_db = snr_db;
    config.seed = seed;
    return config;
}

KaiConfig default_kai() {
    KaiConfig kai;
    kai.iterations = 4;
    kai.iota = 0.1;
    kai.grid = AngleGrid{0.2};
    return kai;
}

}  // namespace

TEST_CASE("kai config mu grid spans [0, 1]") {
    KaiConfig kai = default_kai();
    CHECK(kai.tau() == 11);
    const auto grid = kai.mu_grid();
    REQUIRE(grid.size() == 11);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 1.0);
    CHECK(grid[3] == doctest::Approx(0.3));

    kai.iota = 0.0625;
    CHECK(kai.tau() == 17);

    kai.iota = 0.3;  // 1/0.3 is not an integer
    CHECK_THROWS_AS(kai.validate(), std::invalid_argument);
    kai.iota = 0.1;
    kai.iterations = 0;
    CHECK_THROWS_AS(kai.validate(), std::invalid_argument);
}

TEST_CASE("least-squares amplitudes, hand case and recovery") {
    SUBCASE("single-column hand case") {
        CMatrix a(2, 1);
        a << cxd(1, 0), cxd(1, 0);
        SnapshotMatrix x;
        x.data.resize(2, 1);
        x.data << cxd(2, 0), cxd(0, 0);
        const CMatrix s = ls_amplitudes(a, x);
        REQUIRE(s.rows() == 1);
        CHECK(std::abs(s(0, 0) - cxd(1, 0)) < 1e-14);

        const CMatrix n = noise_residual(a, x, s);
        CHECK(std::abs(n(0, 0) - cxd(1, 0)) < 1e-14);
        CHECK(std::abs(n(1, 0) - cxd(-1, 0)) < 1e-14);
    }
    SUBCASE("unitary steering matrix reduces to A^H x") {
        CMatrix a(2, 2);
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        a << cxd(inv_sqrt2, 0), cxd(inv_sqrt2, 0), cxd(inv_sqrt2, 0), cxd(-inv_sqrt2, 0);
        SnapshotMatrix x;
        x.data = CMatrix::Random(2, 5);
        const CMatrix s = ls_amplitudes(a, x);
        CHECK((s - a.adjoint() * x.data).norm() <= 1e-12 * s.norm());
    }
    SUBCASE("noise-free data is recovered exactly") {
        const ScenarioConfig config = standard_scenario(300.0, 24, 3);
        const GeneratedData data = generate_snapshots_detailed(config);
        const CMatrix a = array_manifold(config.sources.angles_deg, config.geometry);
        const CMatrix s = ls_amplitudes(a, data.x);
        CHECK((s - data.signals).norm() <= 1e-10 * data.signals.norm());
    }
    SUBCASE("residual is orthogonal to the manifold") {
        const ScenarioConfig config = standard_scenario(0.0, 40, 17);
        const SnapshotMatrix x = generate_snapshots(config);
        const CMatrix a = array_manifold(config.sources.angles_deg, config.geometry);
        const CMatrix s = ls_amplitudes(a, x);
        const CMatrix n = noise_residual(a, x, s);
        CHECK((a.adjoint() * n).norm() <= 1e-10 * x.data.norm());
        CHECK((projectors(a).q * n).norm() <= 1e-10 * x.data.norm());
    }
}

TEST_CASE("projector identities") {
    SUBCASE("square invertible manifold projects onto everything") {
        CMatrix a(2, 2);
        a << cxd(1, 0), cxd(1, 0), cxd(0, 1), cxd(-0.5, 0.5);
        const ProjectorPair pair = projectors(a);
        CHECK((pair.q - CMatrix::Identity(2, 2)).norm() < 1e-12);
        CHECK(pair.q_perp.norm() < 1e-12);
    }
    SUBCASE("single axis column") {
        CMatrix a(2, 1);
        a << cxd(1, 0), cxd(0, 0);
        const ProjectorPair pair = projectors(a);
        CHECK(std::abs(pair.q(0, 0) - cxd(1, 0)) < 1e-14);
        CHECK(std::abs(pair.q(1, 1)) < 1e-14);
    }
    SUBCASE("idempotence, complement, rank trace") {
        const ArrayGeometry geometry{4, 0.5};
        const CMatrix a = array_manifold(std::vector<double>{-20.0, 35.0}, geometry);
        const ProjectorPair pair = projectors(a);
        CHECK((pair.q * pair.q - pair.q).norm() <= 1e-8);
        CHECK((pair.q - pair.q.adjoint()).norm() <= 1e-10);
        CHECK((pair.q + pair.q_perp - CMatrix::Identity(4, 4)).norm() <= 1e-12);
        CHECK(std::abs(pair.q.trace().real() - 2.0) <= 1e-10);
        CHECK_FALSE(pair.reduced_rank);
    }
}

TEST_CASE("unwanted term structure and brute-force equivalence") {
    SUBCASE("identity covariance has no cross terms") {
        const ArrayGeometry geometry{5, 0.5};
        const CMatrix a = array_manifold(std::vector<double>{10.0}, geometry);
        const CovarianceEstimate identity{CMatrix::Identity(5, 5), CovProvenance::exact};
        CHECK(unwanted_term(projectors(a), identity).norm() <= 1e-12);
    }
    SUBCASE("noise-free sample covariance has no cross terms") {
        const ScenarioConfig config = standard_scenario(300.0, 30, 8);
        const SnapshotMatrix x = generate_snapshots(config);
        const CMatrix a = array_manifold(config.sources.angles_deg, config.geometry);
        const CovarianceEstimate r = sample_covariance(x);
        CHECK(unwanted_term(projectors(a), r).norm() <= 1e-10 * r.matrix.norm());
    }
    SUBCASE("projector algebra equals the explicit s_hat n_hat^H chain") {
        ScenarioConfig config;
        config.geometry = {3, 0.5};
        config.sources = SourceSet::uncorrelated({12.0});
        config.n_snapshots = 5;
        config.snr_db = 0.0;
        config.seed = 29;
        const SnapshotMatrix x = generate_snapshots(config);
        const CMatrix a = array_manifold(config.sources.angles_deg, config.geometry);
        const CovarianceEstimate r = sample_covariance(x);

        const CMatrix v = unwanted_term(projectors(a), r);

        const CMatrix s_hat = ls_amplitudes(a, x);
        const CMatrix n_hat = noise_residual(a, x, s_hat);
        const CMatrix brute =
            a * (s_hat * n_hat.adjoint() / static_cast<double>(x.snapshots()));
        CHECK((v - brute).norm() <= 1e-8 * std::max(1.0, v.norm()));

        // Range and null-space structure: Q V = V, V Q = 0.
        const ProjectorPair pair = projectors(a);
        CHECK((pair.q * v - v).norm() <= 1e-10 * std::max(1.0, v.norm()));
        CHECK((v * pair.q).norm() <= 1e-10 * std::max(1.0, v.norm()));
    }
}

TEST_CASE("correction function closed forms") {
    const ArrayGeometry geometry{6, 0.5};
    const CMatrix a = array_manifold(std::vector<double>{-15.0, 25.0}, geometry);
    const ProjectorPair pair = projectors(a);

    SUBCASE("scaled identity") {
        const double sigma2 = 0.37;
        const CovarianceEstimate r{sigma2 * CMatrix::Identity(6, 6), CovProvenance::exact};
        CHECK(correction_function(pair, r, 2) == doctest::Approx(6.0 * std::log(sigma2)));
    }
    SUBCASE("structured covariance splits into signal block and noise floor") {
        ScenarioConfig config;
        config.geometry = geometry;
        config.sources = SourceSet::uncorrelated({-15.0, 25.0});
        config.n_snapshots = 10;
        config.snr_db = 4.0;
        config.seed = 2;
        const double sigma2 = config.noise_variance();
        const CovarianceEstimate r{true_covariance(config), CovProvenance::exact};
        const double u = correction_function(pair, r, 2);

        // Independent route: eigenvalues of the bracket directly.
        const CMatrix bracket =
            pair.q * r.matrix * pair.q +
            ((pair.q_perp * r.matrix).trace().real() / 4.0) * pair.q_perp;
        Eigen::SelfAdjointEigenSolver<CMatrix> es(bracket, Eigen::EigenvaluesOnly);
        double expected = 0.0;
        for (int i = 0; i < 6; ++i) expected += std::log(es.eigenvalues()(i));
        CHECK(u == doctest::Approx(expected));

        // Exactly M - P of the bracket eigenvalues sit at the noise floor.
        int at_floor = 0;
        for (int i = 0; i < 6; ++i)
            if (std::abs(es.eigenvalues()(i) - sigma2) < 1e-8) ++at_floor;
        CHECK(at_floor == 4);
    }
    SUBCASE("scaling shifts U additively") {
        const ScenarioConfig config = standard_scenario(0.0, 60, 33);
        const CovarianceEstimate r = sample_covariance(generate_snapshots(config));
        const CMatrix a12 = array_manifold(config.sources.angles_deg, config.geometry);
        const ProjectorPair p12 = projectors(a12);
        const double u = correction_function(p12, r, 2);
        const double c = 3.7;
        const CovarianceEstimate scaled{c * r.matrix, r.provenance};
        CHECK(correction_function(p12, scaled, 2) == doctest::Approx(u + 12.0 * std::log(c)));
    }
    SUBCASE("dimension guard") {
        const CovarianceEstimate r{CMatrix::Identity(6, 6), CovProvenance::exact};
        CHECK_THROWS_AS(correction_function(pair, r, 6), std::invalid_argument);
    }
}

TEST_CASE("steering update mixes new and first-step estimates") {
    const ArrayGeometry geometry{6, 0.5};
    const std::vector<double> initial = {-10.0, 5.0, 40.0};
    const std::vector<double> newer = {-12.0, 4.0, 38.0};

    SUBCASE("n = 1 keeps two initial columns") {
        const SteeringUpdate update = steering_update(1, 3, newer, initial, geometry);
        REQUIRE(update.angles.size() == 3);
        CHECK(update.angles[0] == -12.0);
        CHECK(update.angles[1] == 5.0);
        CHECK(update.angles[2] == 40.0);
        CHECK((update.a_hat.col(0) - steering_vector(-12.0, geometry)).norm() == 0.0);
        CHECK((update.a_hat.col(1) - steering_vector(5.0, geometry)).norm() == 0.0);
    }
    SUBCASE("n = P takes every new column") {
        const SteeringUpdate update = steering_update(3, 3, newer, initial, geometry);
        CHECK(update.angles == newer);
    }
    SUBCASE("n = P + 1 takes every new column") {
        const SteeringUpdate update = steering_update(4, 3, newer, initial, geometry);
        CHECK(update.angles == newer);
    }
    SUBCASE("disordered unions are re-sorted with the permutation recorded") {
        // New first estimate lands above the retained initial ones.
        const std::vector<double> high_first = {20.0, 30.0, 45.0};
        const SteeringUpdate update = steering_update(1, 3, high_first, initial, geometry);
        CHECK(update.angles == std::vector<double>{5.0, 20.0, 40.0});
        CHECK(update.permutation == std::vector<int>{1, 0, 2});
    }
    SUBCASE("input validation") {
        CHECK_THROWS_AS(steering_update(0, 3, newer, initial, geometry), std::invalid_argument);
        CHECK_THROWS_AS(steering_update(1, 3, {1.0}, initial, geometry), std::invalid_argument);
        CHECK_THROWS_AS(steering_update(1, 3, {5.0, 4.0, 3.0}, initial, geometry),
                        std::invalid_argument);
    }
}

TEST_CASE("exact covariance makes the refinement a no-op") {
    const ScenarioConfig config = standard_scenario(0.0, 100, 5);
    const SnapshotMatrix x = generate_snapshots(config);
    const CovarianceEstimate exact{true_covariance(config), CovProvenance::exact};
    KaiConfig kai = default_kai();
    kai.iterations = 2;

    const KaiResult result = ms_kai_cg(x, 2, config.geometry, kai, exact);
    REQUIRE(result.angles.size() == 2);
    CHECK(std::abs(result.angles[0] - 15.0) <= 0.1);
    CHECK(std::abs(result.angles[1] - 17.0) <= 0.1);

    const auto direct = cg_estimate(exact, kai.grid, 2, config.geometry);
    CHECK(result.angles == direct);

    // V = 0: every mu candidate reaches the same estimates.
    for (const auto& iteration : result.trace.iterations)
        for (const auto& candidate : iteration.candidates) {
            CHECK_FALSE(candidate.degenerate);
            CHECK(candidate.angles == direct);
        }
}

TEST_CASE("trace bookkeeping and mu = 0 consistency") {
    const ScenarioConfig config = standard_scenario(0.0, 100, 101);
    const SnapshotMatrix x = generate_snapshots(config);
    KaiConfig kai = default_kai();
    kai.iterations = 3;

    const KaiResult result = ms_kai_cg(x, 2, config.geometry, kai);
    CHECK(result.trace.iterations.size() == 3);

    const auto mu_values = kai.mu_grid();
    for (const auto& iteration : result.trace.iterations) {
        REQUIRE(iteration.candidates.size() == mu_values.size());
        // mu_opt lies on the grid.
        CHECK(std::find(mu_values.begin(), mu_values.end(), iteration.mu_opt) != mu_values.end());
        // the mu = 0 candidate reproduces the base covariance estimates.
        CHECK(iteration.candidates.front().mu == 0.0);
        CHECK(iteration.candidates.front().angles == result.trace.first_step_angles);
    }
}

TEST_CASE("ms_kai_cg is deterministic") {
    const ScenarioConfig config = standard_scenario(2.0, 100, 404);
    const SnapshotMatrix x = generate_snapshots(config);
    KaiConfig kai = default_kai();
    kai.iterations = 2;

    const KaiResult first = ms_kai_cg(x, 2, config.geometry, kai);
    const KaiResult second = ms_kai_cg(x, 2, config.geometry, kai);
    CHECK(first.angles == second.angles);
    REQUIRE(first.trace.iterations.size() == second.trace.iterations.size());
    for (std::size_t i = 0; i < first.trace.iterations.size(); ++i) {
        CHECK(first.trace.iterations[i].mu_opt == second.trace.iterations[i].mu_opt);
        CHECK(first.trace.iterations[i].adopted_angles ==
              second.trace.iterations[i].adopted_angles);
    }
}

TEST_CASE("fb variant with full-length subarray equals plain variant on the fb average") {
    ScenarioConfig config = standard_scenario(5.0, 70, 90);
    config.sources = SourceSet::uniformly_correlated({15.0, 17.0}, 0.9);
    const SnapshotMatrix x = generate_snapshots(config);
    KaiConfig kai = default_kai();
    kai.iterations = 2;

    const SmoothingConfig full{12};
    const KaiResult fb = ms_kai_cg_fb(x, 2, config.geometry, full, kai);
    const CovarianceEstimate averaged = fb_average(sample_covariance(x));
    const KaiResult plain = ms_kai_cg(x, 2, config.geometry, kai, averaged);
    CHECK(fb.angles == plain.angles);
}

TEST_CASE("smoothing lets the first CG step resolve coherent sources") {
    ScenarioConfig config = standard_scenario(10.0, 100, 11);
    config.sources = SourceSet::uniformly_correlated({15.0, 17.0}, 1.0);
    const CovarianceEstimate exact{true_covariance(config), CovProvenance::exact};

    const AngleGrid grid{0.2};
    const auto unsmoothed = cg_estimate(exact, grid, 2, config.geometry);
    const bool unsmoothed_resolved =
        std::abs(unsmoothed[0] - 15.0) < 1.0 && std::abs(unsmoothed[1] - 17.0) < 1.0;
    CHECK_FALSE(unsmoothed_resolved);

    const SmoothingConfig smoothing{10};
    const CovarianceEstimate smoothed = fbss(exact, smoothing, 2);
    const ArrayGeometry sub{10, config.geometry.d_over_lambda};
    const auto resolved_est = cg_estimate(smoothed, grid, 2, sub);
    CHECK(std::abs(resolved_est[0] - 15.0) < 1.0);
    CHECK(std::abs(resolved_est[1] - 17.0) < 1.0);
}
