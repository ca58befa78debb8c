#include "qcs/coincidence.hpp"

#include "qcs/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace qcs {

namespace {

// center, sigma, amplitude, baseline
using Params = std::array<double, 4>;
using Matrix4 = std::array<std::array<double, 4>, 4>;

double model(const Params& p, double x)
{
    const double u = (x - p[0]) / p[1];
    return p[3] + p[2] * std::exp(-0.5 * u * u);
}

double sse(const CoincidenceHistogram& h, const Params& p)
{
    double s = 0.0;
    for (std::size_t k = 0; k < h.counts.size(); ++k)
    {
        const double r = static_cast<double>(h.counts[k]) - model(p, h.bin_center(k));
        s += r * r;
    }
    return s;
}

// Gaussian elimination with partial pivoting; false if singular.
bool solve4(Matrix4 a, std::array<double, 4> b, std::array<double, 4>& x)
{
    for (int col = 0; col < 4; ++col)
    {
        int pivot = col;
        for (int r = col + 1; r < 4; ++r)
        {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col]))
                pivot = r;
        }
        if (std::abs(a[pivot][col]) < 1e-300)
            return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < 4; ++r)
        {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 4; ++c)
                a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int r = 3; r >= 0; --r)
    {
        double s = b[r];
        for (int c = r + 1; c < 4; ++c)
            s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return true;
}

double median_count(const std::vector<std::uint64_t>& counts)
{
    std::vector<std::uint64_t> v(counts);
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = static_cast<double>(v[mid]);
    if (v.size() % 2 == 0)
    {
        const auto lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        m = 0.5 * (m + static_cast<double>(lower));
    }
    return m;
}

Params initial_guess(const CoincidenceHistogram& h, std::size_t peak, double floor)
{
    const double peak_count = static_cast<double>(h.counts[peak]);
    const double half = floor + 0.5 * (peak_count - floor);
    const double bw = static_cast<double>(h.bin_width_ps);

    // Walk outwards to the first bins below half maximum and interpolate.
    auto crossing = [&](int step) {
        std::ptrdiff_t k = static_cast<std::ptrdiff_t>(peak);
        while (true)
        {
            const std::ptrdiff_t next = k + step;
            if (next < 0 || next >= static_cast<std::ptrdiff_t>(h.counts.size()))
                return h.bin_center(static_cast<std::size_t>(k));
            const double c_next = static_cast<double>(h.counts[static_cast<std::size_t>(next)]);
            if (c_next < half)
            {
                const double c_here = static_cast<double>(h.counts[static_cast<std::size_t>(k)]);
                const double frac = (c_here - half) / (c_here - c_next);
                return h.bin_center(static_cast<std::size_t>(k)) + step * frac * bw;
            }
            k = next;
        }
    };
    const double fwhm = std::max(bw, crossing(+1) - crossing(-1));
    return Params{h.bin_center(peak), fwhm / kFwhmPerSigma, peak_count - floor, floor};
}

} // namespace

PeakFit fit_peak(const CoincidenceHistogram& h, const FitOptions& opt)
{
    if (h.counts.empty())
    {
        throw NoPeak("empty histogram");
    }
    const auto peak = static_cast<std::size_t>(std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
    const double floor = median_count(h.counts);
    const double peak_count = static_cast<double>(h.counts[peak]);
    if (!(peak_count > floor + 5.0 * std::sqrt(std::max(floor, 1.0))))
    {
        throw NoPeak("no bin above the accidental floor (max " + std::to_string(h.counts[peak]) + ", median " +
                     std::to_string(floor) + ")");
    }

    const double bw = static_cast<double>(h.bin_width_ps);
    Params p = initial_guess(h, peak, floor);
    double cost = sse(h, p);
    double lambda = 1e-3;
    PeakFit fit;

    int it = 0;
    for (; it < opt.max_iterations; ++it)
    {
        Matrix4 jtj{};
        std::array<double, 4> jtr{};
        for (std::size_t k = 0; k < h.counts.size(); ++k)
        {
            const double x = h.bin_center(k);
            const double d = x - p[0];
            const double g = std::exp(-0.5 * d * d / (p[1] * p[1]));
            const double r = static_cast<double>(h.counts[k]) - (p[3] + p[2] * g);
            const std::array<double, 4> jac = {p[2] * g * d / (p[1] * p[1]),
                                               p[2] * g * d * d / (p[1] * p[1] * p[1]), g, 1.0};
            for (int i = 0; i < 4; ++i)
            {
                jtr[i] += jac[i] * r;
                for (int j = 0; j <= i; ++j)
                    jtj[i][j] += jac[i] * jac[j];
            }
        }
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
                jtj[i][j] = jtj[j][i];

        bool accepted = false;
        Params step{};
        while (lambda < 1e12)
        {
            Matrix4 damped = jtj;
            for (int i = 0; i < 4; ++i)
                damped[i][i] += lambda * std::max(jtj[i][i], 1e-12);
            std::array<double, 4> delta{};
            if (solve4(damped, jtr, delta))
            {
                Params trial = {p[0] + delta[0], std::abs(p[1] + delta[1]), p[2] + delta[2], p[3] + delta[3]};
                const double trial_cost = trial[1] > 0.0 ? sse(h, trial) : std::numeric_limits<double>::infinity();
                if (trial_cost <= cost)
                {
                    step = delta;
                    p = trial;
                    cost = trial_cost;
                    lambda = std::max(lambda / 10.0, 1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!accepted)
        {
            // No descent direction left: already at the minimum.
            fit.converged = true;
            break;
        }
        const double tol = opt.tolerance_bins * bw;
        if (std::abs(step[0]) < tol && std::abs(step[1]) < tol &&
            std::abs(step[2]) <= 1e-6 * (std::abs(p[2]) + 1.0) && std::abs(step[3]) <= 1e-6 * (std::abs(p[3]) + 1.0))
        {
            fit.converged = true;
            ++it;
            break;
        }
    }

    if (!(p[2] > 0.0) || !std::isfinite(p[0]) || !std::isfinite(p[1]) || !(p[1] > 0.0))
    {
        throw NoPeak("peak fit collapsed");
    }
    fit.center_ps = p[0];
    fit.fwhm_ps = p[1] * kFwhmPerSigma;
    fit.amplitude = p[2];
    fit.baseline = p[3];
    fit.car = car(fit);
    fit.fit_rms = std::sqrt(cost / static_cast<double>(h.counts.size()));
    fit.iterations = it;
    if (fit.center_ps < static_cast<double>(h.tau_min_ps) || fit.center_ps > static_cast<double>(h.tau_max_ps))
    {
        fit.converged = false;
    }
    return fit;
}

} // namespace qcs
