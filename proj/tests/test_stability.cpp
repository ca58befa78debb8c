#include "oracles.hpp"

#include "qcs/error.hpp"
#include "qcs/stability.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace qcs;

namespace {

OffsetSeries series_of(const std::vector<double>& x, double tau0 = 20.0)
{
    OffsetSeries s;
    s.user = "x";
    s.batch_duration_s = tau0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        BatchOffsets b;
        b.batch_index = static_cast<int>(i);
        b.delta_t_ps = x[i];
        s.offsets.push_back(b);
    }
    return s;
}

double slope(const TdevCurve& c, int max_m)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& p : c.points)
    {
        if (p.m > max_m)
            continue;
        const double lx = std::log(p.tau_s), ly = std::log(p.tdev_ps);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

TEST_CASE("estimator equals the literal triple loop")
{
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g(0.0, 5.0);
    for (int n = 3; n <= 200; n += 7)
    {
        std::vector<double> x(static_cast<std::size_t>(n));
        double walk = 0.0;
        for (auto& v : x)
        {
            walk += g(rng);
            v = walk + g(rng);
        }
        std::vector<int> ms;
        for (int m = 1; 3 * m <= n; ++m)
            ms.push_back(m);
        const auto curve = tdev(series_of(x), ms);
        REQUIRE(curve.points.size() == ms.size());
        for (const auto& p : curve.points)
        {
            CHECK(p.tdev_ps == oracle::naive_tdev(x, p.m));
            CHECK(p.n_samples == static_cast<std::size_t>(n - 3 * p.m + 1));
            CHECK(p.tau_s == doctest::Approx(20.0 * p.m));
        }
    }
}

TEST_CASE("constant and linear series have zero TDEV")
{
    std::vector<double> constant(90, 12345.0);
    std::vector<double> line(90);
    for (std::size_t i = 0; i < line.size(); ++i)
        line[i] = 3.0 * static_cast<double>(i) - 40.0;
    for (const auto& x : {constant, line})
    {
        for (const auto& p : tdev(series_of(x), {1, 2, 5, 10, 30}).points)
            CHECK(p.tdev_ps == 0.0);
    }
}

TEST_CASE("invariance and scaling")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(150);
    for (auto& v : x)
        v = g(rng);
    std::vector<double> shifted(x), ramped(x), scaled(x);
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        shifted[i] += 1000.0;
        ramped[i] += 0.5 * static_cast<double>(i);
        scaled[i] *= -3.0;
    }
    const std::vector<int> ms = {1, 2, 4, 8, 16};
    const auto base = tdev(series_of(x), ms);
    const auto s1 = tdev(series_of(shifted), ms);
    const auto s2 = tdev(series_of(ramped), ms);
    const auto s3 = tdev(series_of(scaled), ms);
    for (std::size_t k = 0; k < base.points.size(); ++k)
    {
        CHECK(s1.points[k].tdev_ps == doctest::Approx(base.points[k].tdev_ps).epsilon(1e-9));
        CHECK(s2.points[k].tdev_ps == doctest::Approx(base.points[k].tdev_ps).epsilon(1e-9));
        CHECK(s3.points[k].tdev_ps == doctest::Approx(3.0 * base.points[k].tdev_ps).epsilon(1e-12));
    }
}

TEST_CASE("white phase noise")
{
    std::mt19937_64 rng(42);
    const double sigma = 4.0;
    std::normal_distribution<double> g(0.0, sigma);
    std::vector<double> x(20000);
    for (auto& v : x)
        v = g(rng);
    const auto curve = tdev(series_of(x, 1.0), doubling_grid(2000));
    // Three disjoint m-blocks with weights 1, -2, 1 give TVAR = sigma^2 / m.
    for (const auto& p : curve.points)
    {
        if (p.m <= 16)
            CHECK(p.tdev_ps == doctest::Approx(sigma / std::sqrt(p.m)).epsilon(0.08));
    }
    CHECK(std::abs(slope(curve, 2000) + 0.5) < 0.1);
}

TEST_CASE("gaps break windows and short series drop points")
{
    std::vector<double> x(30, 1.0);
    auto s = series_of(x);
    s.offsets[10].quality = BatchQuality::no_peak_su;
    s.offsets[10].delta_t_ps = 1e9; // must be ignored
    const auto curve = tdev(s, {1, 3, 10, 11});
    REQUIRE(curve.points.size() == 2);
    CHECK(curve.points[0].m == 1);
    // windows of length 3 starting at 0..27 minus those covering index 10
    CHECK(curve.points[0].n_samples == 28 - 3);
    CHECK(curve.points[0].tdev_ps == 0.0);
    CHECK(curve.points[1].m == 3);
    CHECK(curve.points[1].n_samples == 22 - 9);
    CHECK(curve.warnings.size() == 2);

    TdevPoint p;
    std::vector<std::uint8_t> valid(5, 1);
    CHECK_FALSE(tdev_point(std::vector<double>(5, 0.0), valid, 2, p));
    CHECK_THROWS_AS(tdev_point(std::vector<double>(5, 0.0), valid, 0, p), Error);
}

TEST_CASE("summary statistics")
{
    const auto ones = summary_stats(series_of({1, 1, 1}));
    CHECK(ones.std_dev_ps == 0.0);
    CHECK(ones.mean_ps == 1.0);
    const auto two = summary_stats(series_of({0, 2}));
    CHECK(two.std_dev_ps == doctest::Approx(1.0));
    CHECK(two.min_ps == 0.0);
    CHECK(two.max_ps == 2.0);

    auto bad = series_of({5, 6, 7});
    for (auto& b : bad.offsets)
        b.quality = BatchQuality::no_peak_sus;
    CHECK_THROWS_AS(summary_stats(bad), Error);
    bad.offsets[0].quality = BatchQuality::ok;
    CHECK_THROWS_AS(summary_stats(bad), Error);
}

TEST_CASE("m grid and CSV")
{
    CHECK(doubling_grid(40, {20, 40, 400}) == std::vector<int>{1, 2, 4, 8, 16, 20, 32, 40});
    TdevCurve c;
    c.points.push_back(TdevPoint{20, 400.0, 2.5, 41});
    CHECK(tdev_csv(c) == "tau_s,tdev_ps,n_samples\n400,2.5,41\n");
}
