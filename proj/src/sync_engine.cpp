#include "qcs/sync_engine.hpp"

#include "qcs/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace qcs {

std::string_view to_string(BatchQuality q)
{
    switch (q)
    {
    case BatchQuality::ok:
        return "ok";
    case BatchQuality::no_signal_events:
        return "no_signal_events";
    case BatchQuality::no_peak_su:
        return "no_peak_su";
    case BatchQuality::no_peak_sus:
        return "no_peak_sus";
    case BatchQuality::not_converged:
        return "not_converged";
    }
    return "unknown";
}

BatchQuality quality_from_string(std::string_view s)
{
    for (auto q : {BatchQuality::ok, BatchQuality::no_signal_events, BatchQuality::no_peak_su,
                   BatchQuality::no_peak_sus, BatchQuality::not_converged})
    {
        if (to_string(q) == s)
            return q;
    }
    throw FormatError("unknown batch quality '" + std::string(s) + "'");
}

std::size_t OffsetSeries::valid_count() const
{
    return static_cast<std::size_t>(
        std::count_if(offsets.begin(), offsets.end(), [](const BatchOffsets& b) { return b.valid(); }));
}

double clock_difference(double tau_su_ps, double tau_sus_ps)
{
    return tau_su_ps - tau_sus_ps / 2.0;
}

namespace {

// Tracks one delay (one histogram pairing) across batches.
class PeakTracker
{
public:
    PeakTracker(std::span<const Picoseconds> other, const AnalysisParams& params)
        : other_(other), params_(params)
    {
    }

    std::pair<CoincidenceHistogram, PeakFit> fit(std::span<const Picoseconds> server_batch, double span_s)
    {
        if (!center_)
        {
            center_ = coarse_search(server_batch, narrow(server_batch, params_.coarse_min_ps, params_.coarse_max_ps),
                                    params_.coarse_min_ps, params_.coarse_max_ps, params_.coarse_bin_ps);
        }
        auto h = build_histogram(server_batch,
                                 narrow(server_batch, *center_ - params_.half_window_ps,
                                        *center_ + params_.half_window_ps),
                                 *center_, params_.half_window_ps, params_.bin_width_ps, span_s);
        try
        {
            auto f = fit_peak(h, params_.fit);
            // Re-centre on the fit unless it drifted towards the window edge.
            if (f.converged && std::abs(f.center_ps - static_cast<double>(*center_)) <
                                   0.5 * static_cast<double>(params_.half_window_ps))
            {
                center_ = static_cast<Picoseconds>(std::llround(f.center_ps));
            }
            else
            {
                center_.reset();
            }
            return {std::move(h), f};
        }
        catch (const NoPeak&)
        {
            center_.reset();
            throw;
        }
    }

    void reset() { center_.reset(); }

private:
    // Only the part of the other stream that can pair with this batch.
    std::span<const Picoseconds> narrow(std::span<const Picoseconds> batch, Picoseconds lo, Picoseconds hi) const
    {
        if (batch.empty())
            return {};
        auto first = std::lower_bound(other_.begin(), other_.end(), batch.front() + lo);
        auto last = std::lower_bound(first, other_.end(), batch.back() + hi);
        return {first, last};
    }

    std::span<const Picoseconds> other_;
    const AnalysisParams& params_;
    std::optional<Picoseconds> center_;
};

} // namespace

OffsetSeries estimate_batch(const TimestampStream& server, const TimestampStream& user,
                            const TimestampStream& roundtrip, double batch_duration_s, const AnalysisParams& params,
                            std::optional<double> duration_s, std::vector<BatchDetail>* details,
                            std::string user_name)
{
    if (!(batch_duration_s > 0.0))
    {
        throw ConfigError("batch duration must be positive");
    }
    if (server.events.empty())
    {
        throw NoPeak("server stream is empty");
    }
    const double total_s = duration_s.value_or(static_cast<double>(server.events.back() + 1) / kPsPerSecond);
    const auto n_batches = static_cast<std::size_t>(std::floor(total_s / batch_duration_s + 1e-9));
    const auto batch_ps = static_cast<Picoseconds>(std::llround(batch_duration_s * kPsPerSecond));

    OffsetSeries series;
    series.user = user_name.empty() ? user.clock_id : std::move(user_name);
    series.batch_duration_s = batch_duration_s;

    const std::span<const Picoseconds> sig(server.events);
    PeakTracker su(user.events, params);
    PeakTracker sus(roundtrip.events, params);

    for (std::size_t k = 0; k < n_batches; ++k)
    {
        BatchOffsets b;
        b.batch_index = static_cast<int>(k);
        const Picoseconds start = static_cast<Picoseconds>(k) * batch_ps;
        auto first = std::lower_bound(sig.begin(), sig.end(), start);
        auto last = std::lower_bound(first, sig.end(), start + batch_ps);
        const std::span<const Picoseconds> batch(first, last);

        BatchDetail detail;
        if (batch.empty())
        {
            b.quality = BatchQuality::no_signal_events;
        }
        else
        {
            try
            {
                auto [h, f] = su.fit(batch, batch_duration_s);
                detail.hist_su = std::move(h);
                b.fit_su = f;
            }
            catch (const NoPeak&)
            {
                b.quality = BatchQuality::no_peak_su;
            }
            try
            {
                auto [h, f] = sus.fit(batch, batch_duration_s);
                detail.hist_sus = std::move(h);
                b.fit_sus = f;
            }
            catch (const NoPeak&)
            {
                if (b.quality == BatchQuality::ok)
                    b.quality = BatchQuality::no_peak_sus;
            }
            if (b.fit_su && b.fit_sus)
            {
                b.tau_su_ps = b.fit_su->center_ps;
                b.tau_sus_ps = b.fit_sus->center_ps;
                b.delta_t_ps = clock_difference(b.tau_su_ps, b.tau_sus_ps);
                if (!b.fit_su->converged || !b.fit_sus->converged)
                    b.quality = BatchQuality::not_converged;
            }
        }
        if (!b.valid())
        {
            b.tau_su_ps = b.fit_su ? b.fit_su->center_ps : std::numeric_limits<double>::quiet_NaN();
            b.tau_sus_ps = b.fit_sus ? b.fit_sus->center_ps : std::numeric_limits<double>::quiet_NaN();
            b.delta_t_ps = clock_difference(b.tau_su_ps, b.tau_sus_ps);
        }
        series.offsets.push_back(std::move(b));
        if (details)
            details->push_back(std::move(detail));
    }
    if (series.valid_count() == 0)
    {
        throw NoPeak("no batch of '" + series.user + "' produced a clock difference");
    }
    return series;
}

OffsetSeries pairwise_offset(const OffsetSeries& a, const OffsetSeries& b)
{
    OffsetSeries out;
    out.user = a.user + "-" + b.user;
    out.batch_duration_s = a.batch_duration_s;

    auto combine = [](const BatchOffsets& x, const BatchOffsets& y, int index) {
        BatchOffsets r;
        r.batch_index = index;
        r.tau_su_ps = x.tau_su_ps - y.tau_su_ps;
        r.tau_sus_ps = x.tau_sus_ps - y.tau_sus_ps;
        r.delta_t_ps = x.delta_t_ps - y.delta_t_ps;
        r.quality = x.valid() ? y.quality : x.quality;
        return r;
    };

    bool overlap = false;
    const bool same_grid = std::abs(a.batch_duration_s - b.batch_duration_s) <= 1e-12 * a.batch_duration_s;
    for (const auto& x : a.offsets)
    {
        const BatchOffsets* match = nullptr;
        if (same_grid)
        {
            auto it = std::find_if(b.offsets.begin(), b.offsets.end(),
                                   [&](const BatchOffsets& y) { return y.batch_index == x.batch_index; });
            if (it != b.offsets.end())
                match = &*it;
        }
        else
        {
            const double t = x.batch_index * a.batch_duration_s;
            double best = std::numeric_limits<double>::infinity();
            for (const auto& y : b.offsets)
            {
                const double d = std::abs(y.batch_index * b.batch_duration_s - t);
                if (d < best)
                {
                    best = d;
                    match = &y;
                }
            }
            if (best > 0.5 * std::max(a.batch_duration_s, b.batch_duration_s))
                match = nullptr;
        }
        if (match)
        {
            overlap = true;
            out.offsets.push_back(combine(x, *match, x.batch_index));
        }
    }
    if (!overlap)
    {
        throw Error("series '" + a.user + "' and '" + b.user + "' share no batches");
    }
    return out;
}

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::string offsets_csv(const OffsetSeries& s)
{
    std::ostringstream os;
    os << "batch_start_s,tau_su_ps,tau_sus_ps,delta_t_ps,quality\n";
    for (const auto& b : s.offsets)
    {
        os << format_double(b.batch_index * s.batch_duration_s) << ',' << format_double(b.tau_su_ps) << ','
           << format_double(b.tau_sus_ps) << ',' << format_double(b.delta_t_ps) << ',' << to_string(b.quality)
           << '\n';
    }
    return os.str();
}

namespace {

double parse_double(std::string_view s)
{
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw FormatError("bad number '" + std::string(s) + "' in offsets CSV");
    return v;
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true)
    {
        const auto c = line.find(',', pos);
        out.push_back(line.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
        if (c == std::string_view::npos)
            break;
        pos = c + 1;
    }
    return out;
}

} // namespace

OffsetSeries parse_offsets_csv(std::string_view text, std::string user, double batch_duration_s, int* mismatches)
{
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size())
    {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (!line.empty())
            lines.push_back(line);
        if (nl == std::string_view::npos)
            break;
        pos = nl + 1;
    }
    if (lines.empty() || lines.front() != "batch_start_s,tau_su_ps,tau_sus_ps,delta_t_ps,quality")
    {
        throw FormatError("offsets CSV header missing");
    }
    std::vector<std::array<double, 4>> rows;
    std::vector<BatchQuality> quality;
    for (std::size_t i = 1; i < lines.size(); ++i)
    {
        const auto cols = split(lines[i]);
        if (cols.size() != 5)
            throw FormatError("offsets CSV row " + std::to_string(i) + " has " + std::to_string(cols.size()) +
                              " columns");
        rows.push_back({parse_double(cols[0]), parse_double(cols[1]), parse_double(cols[2]), parse_double(cols[3])});
        quality.push_back(quality_from_string(cols[4]));
    }

    OffsetSeries s;
    s.user = std::move(user);
    s.batch_duration_s = batch_duration_s;
    if (s.batch_duration_s <= 0.0)
    {
        s.batch_duration_s = rows.size() >= 2 ? rows[1][0] - rows[0][0] : 1.0;
        if (!(s.batch_duration_s > 0.0))
            throw FormatError("cannot infer batch spacing from offsets CSV");
    }
    int bad = 0;
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        BatchOffsets b;
        const double idx = rows[i][0] / s.batch_duration_s;
        b.batch_index = static_cast<int>(std::llround(idx));
        if (std::abs(idx - b.batch_index) > 1e-6)
            throw FormatError("batch start " + format_double(rows[i][0]) + " s is off the batch grid");
        b.tau_su_ps = rows[i][1];
        b.tau_sus_ps = rows[i][2];
        b.delta_t_ps = clock_difference(b.tau_su_ps, b.tau_sus_ps);
        b.quality = quality[i];
        if (b.valid() && !(std::abs(b.delta_t_ps - rows[i][3]) <= 1e-3))
            ++bad;
        s.offsets.push_back(b);
    }
    if (mismatches)
        *mismatches = bad;
    return s;
}

} // namespace qcs
