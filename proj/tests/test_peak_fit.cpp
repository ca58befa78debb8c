#include "oracles.hpp"

#include "qcs/error.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace qcs;

TEST_CASE("exact model recovery")
{
    const auto h = oracle::synthetic_peak(42.0, 80.0, 1000.0, 0.0, -2000, 2000, 16);
    // synthetic_peak rounds to integer counts; keep that to a 1 % width tolerance
    const auto fit = fit_peak(h);
    CHECK(fit.converged);
    CHECK(fit.center_ps == doctest::Approx(42.0).epsilon(0.1 / 42.0));
    CHECK(fit.fwhm_ps == doctest::Approx(80.0).epsilon(0.01));
    CHECK(fit.amplitude == doctest::Approx(1000.0).epsilon(0.01));
    CHECK(std::abs(fit.baseline) < 0.5);
}

TEST_CASE("recovers the floor")
{
    const auto h = oracle::synthetic_peak(-1234.0, 300.0, 400.0, 50.0, -20000, 20000, 16);
    const auto fit = fit_peak(h);
    CHECK(fit.center_ps == doctest::Approx(-1234.0).epsilon(1e-4));
    CHECK(fit.fwhm_ps == doctest::Approx(300.0).epsilon(0.01));
    CHECK(fit.baseline == doctest::Approx(50.0).epsilon(0.01));
    CHECK(fit.car == doctest::Approx(8.0).epsilon(0.02));
    CHECK(fit.fit_rms < 0.5);
}

TEST_CASE("flat histograms have no peak")
{
    CoincidenceHistogram h;
    h.bin_width_ps = 16;
    h.tau_min_ps = -160;
    h.tau_max_ps = 160;
    h.counts.assign(20, 7);
    CHECK_THROWS_AS(fit_peak(h), NoPeak);
    h.counts.assign(20, 0);
    CHECK_THROWS_AS(fit_peak(h), NoPeak);
    h.counts.clear();
    CHECK_THROWS_AS(fit_peak(h), NoPeak);
}

TEST_CASE("symmetric data centres on the symmetry point")
{
    CoincidenceHistogram h;
    h.bin_width_ps = 16;
    h.tau_min_ps = -800;
    h.tau_max_ps = 800;
    h.counts.assign(100, 3);
    // Triangle symmetric about the edge between bins 49 and 50 (tau = 0).
    for (int k = 0; k < 8; ++k)
    {
        h.counts[static_cast<std::size_t>(49 - k)] += static_cast<std::uint64_t>(80 - 10 * k);
        h.counts[static_cast<std::size_t>(50 + k)] += static_cast<std::uint64_t>(80 - 10 * k);
    }
    const auto fit = fit_peak(h);
    CHECK(std::abs(fit.center_ps) < 8.0);
}

TEST_CASE("argmax ties resolve to the lowest tau")
{
    CoincidenceHistogram h;
    h.bin_width_ps = 10;
    h.tau_min_ps = 0;
    h.tau_max_ps = 400;
    h.counts.assign(40, 0);
    h.counts[10] = 50;
    h.counts[30] = 50;
    FitOptions one_step;
    one_step.max_iterations = 0;
    const auto fit = fit_peak(h, one_step);
    CHECK(fit.center_ps == doctest::Approx(h.bin_center(10)));
    CHECK_FALSE(fit.converged);
}

TEST_CASE("iteration cap returns best-so-far flagged")
{
    std::mt19937_64 rng(1);
    const auto h = oracle::synthetic_peak(333.0, 200.0, 30.0, 5.0, -20000, 20000, 16, &rng);
    FitOptions capped;
    capped.max_iterations = 1;
    const auto fit = fit_peak(h, capped);
    CHECK_FALSE(fit.converged);
    CHECK(fit.iterations == 1);
    const auto full = fit_peak(h);
    CHECK(full.converged);
    CHECK(std::abs(full.center_ps - 333.0) < 30.0);
}

TEST_CASE("CAR")
{
    PeakFit f;
    f.amplitude = 1000.0;
    f.baseline = 10.0;
    CHECK(car(f) == doctest::Approx(100.0));
    f.baseline = 0.0;
    CHECK(car(f) == std::numeric_limits<double>::infinity());
    f.baseline = -1.0;
    CHECK(car(f) == std::numeric_limits<double>::infinity());
    f.baseline = 1e-12;
    CHECK(car(f) == doctest::Approx(1000.0 / kCarEpsilon));
}
