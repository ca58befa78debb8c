#include "qcs/stability.hpp"

#include "qcs/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qcs {

bool tdev_point(std::span<const double> x, std::span<const std::uint8_t> valid, int m, TdevPoint& out)
{
    if (m < 1 || x.size() != valid.size())
    {
        throw Error("tdev: m must be >= 1 and validity mask must match the data");
    }
    const auto n = x.size();
    const auto um = static_cast<std::size_t>(m);
    if (n < 3 * um)
    {
        return false;
    }

    // Second differences d_i = x_{i+2m} - 2 x_{i+m} + x_i.
    const std::size_t nd = n - 2 * um;
    std::vector<double> d(nd);
    for (std::size_t i = 0; i < nd; ++i)
    {
        d[i] = x[i + 2 * um] - 2 * x[i + um] + x[i];
    }
    // bad[i] = number of invalid samples in x[0, i).
    std::vector<std::size_t> bad(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
    {
        bad[i + 1] = bad[i] + (valid[i] ? 0 : 1);
    }

    double sum = 0.0;
    std::size_t windows = 0;
    for (std::size_t j = 0; j + 3 * um <= n; ++j)
    {
        if (bad[j + 3 * um] != bad[j])
        {
            continue;
        }
        double s = 0.0;
        for (std::size_t i = j; i < j + um; ++i)
        {
            s += d[i];
        }
        sum += s * s;
        ++windows;
    }
    if (windows == 0)
    {
        return false;
    }
    out.m = m;
    out.n_samples = windows;
    out.tdev_ps = std::sqrt(sum / (6.0 * m * m * static_cast<double>(windows)));
    return true;
}

TdevCurve tdev(const OffsetSeries& series, std::vector<int> m_values)
{
    TdevCurve curve;
    curve.tau0_s = series.batch_duration_s;

    int last = -1;
    for (const auto& b : series.offsets)
    {
        last = std::max(last, b.batch_index);
    }
    const auto n = static_cast<std::size_t>(last + 1);
    std::vector<double> x(n, 0.0);
    std::vector<std::uint8_t> valid(n, 0);
    for (const auto& b : series.offsets)
    {
        if (b.batch_index >= 0 && b.valid())
        {
            x[static_cast<std::size_t>(b.batch_index)] = b.delta_t_ps;
            valid[static_cast<std::size_t>(b.batch_index)] = 1;
        }
    }

    std::sort(m_values.begin(), m_values.end());
    m_values.erase(std::unique(m_values.begin(), m_values.end()), m_values.end());
    for (int m : m_values)
    {
        if (m < 1)
        {
            curve.warnings.push_back("ignoring m=" + std::to_string(m));
            continue;
        }
        TdevPoint p;
        if (tdev_point(x, valid, m, p))
        {
            p.tau_s = m * curve.tau0_s;
            curve.points.push_back(p);
        }
        else
        {
            curve.warnings.push_back("series of " + std::to_string(n) + " batches too short for m=" +
                                     std::to_string(m));
        }
    }
    return curve;
}

SummaryStats summary_stats(const OffsetSeries& series)
{
    SummaryStats s;
    s.min_ps = std::numeric_limits<double>::infinity();
    s.max_ps = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const auto& b : series.offsets)
    {
        if (!b.valid())
            continue;
        sum += b.delta_t_ps;
        s.min_ps = std::min(s.min_ps, b.delta_t_ps);
        s.max_ps = std::max(s.max_ps, b.delta_t_ps);
        ++s.count;
    }
    if (s.count < 2)
    {
        throw Error("series '" + series.user + "' has " + std::to_string(s.count) + " valid batches, need 2");
    }
    s.mean_ps = sum / static_cast<double>(s.count);
    double ss = 0.0;
    for (const auto& b : series.offsets)
    {
        if (b.valid())
            ss += (b.delta_t_ps - s.mean_ps) * (b.delta_t_ps - s.mean_ps);
    }
    s.std_dev_ps = std::sqrt(ss / static_cast<double>(s.count));
    return s;
}

std::vector<int> doubling_grid(int max_m, const std::vector<int>& extras)
{
    std::vector<int> out;
    for (int m = 1; m <= max_m; m *= 2)
    {
        out.push_back(m);
    }
    for (int e : extras)
    {
        if (e >= 1 && e <= max_m)
            out.push_back(e);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string tdev_csv(const TdevCurve& c)
{
    std::ostringstream os;
    os << "tau_s,tdev_ps,n_samples\n";
    for (const auto& p : c.points)
    {
        os << format_double(p.tau_s) << ',' << format_double(p.tdev_ps) << ',' << p.n_samples << '\n';
    }
    return os.str();
}

} // namespace qcs
