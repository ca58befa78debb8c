#include "qcs/pipeline.hpp"

#include "qcs/error.hpp"
#include "qcs/timestamp_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

namespace qcs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw FormatError("cannot write " + path.string());
    os << text;
}

std::string read_text(const fs::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw FormatError("cannot read " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

std::ostream& log(const StageOptions& opt)
{
    static std::ostream null(nullptr);
    return opt.log ? *opt.log : null;
}

NetworkPlan plan_for(const Scenario& s)
{
    return plan_network(s.users, scenario_pumps(s), s.grid);
}

std::string histogram_csv(const CoincidenceHistogram& h)
{
    std::ostringstream os;
    os << "tau_ps,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k)
        os << format_double(h.bin_center(k)) << ',' << h.counts[k] << '\n';
    return os.str();
}

std::string fits_csv(const OffsetSeries& s)
{
    std::ostringstream os;
    os << "batch_start_s,su_center_ps,su_fwhm_ps,su_amplitude,su_baseline,su_car,su_rms,"
          "sus_center_ps,sus_fwhm_ps,sus_amplitude,sus_baseline,sus_car,sus_rms,quality\n";
    auto put = [&](const std::optional<PeakFit>& f) {
        if (f)
            os << format_double(f->center_ps) << ',' << format_double(f->fwhm_ps) << ','
               << format_double(f->amplitude) << ',' << format_double(f->baseline) << ',' << format_double(f->car)
               << ',' << format_double(f->fit_rms) << ',';
        else
            os << "nan,nan,nan,nan,nan,nan,";
    };
    for (const auto& b : s.offsets)
    {
        os << format_double(b.batch_index * s.batch_duration_s) << ',';
        put(b.fit_su);
        put(b.fit_sus);
        os << to_string(b.quality) << '\n';
    }
    return os.str();
}

double median(std::vector<double> v)
{
    if (v.empty())
        return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json stats_json(const SummaryStats& st)
{
    return json{{"mean_ps", st.mean_ps},
                {"std_dev_ps", st.std_dev_ps},
                {"min_ps", st.min_ps},
                {"max_ps", st.max_ps},
                {"valid_batches", st.count}};
}

} // namespace

NetworkPlan run_plan(const Scenario& s, const StageOptions& opt)
{
    const auto pumps = scenario_pumps(s);
    NetworkPlan plan = plan_for(s);
    write_text(opt.out_dir / "plan.json", plan_to_json(plan));
    write_text(opt.out_dir / "pairings.csv", pairings_csv(enumerate_pairings(pumps, s.grid)));
    log(opt) << plan_table(plan);
    return plan;
}

void run_simulate(const Scenario& s, const StageOptions& opt)
{
    const fs::path plan_path = opt.out_dir / "plan.json";
    NetworkPlan plan = fs::exists(plan_path) ? plan_from_json(read_text(plan_path)) : run_plan(s, opt);

    const auto result = simulate(plan, simulation_input(s, plan));

    const fs::path dir = opt.out_dir / "timestamps";
    fs::create_directories(dir);
    json manifest;
    manifest["format_version"] = kTimestampFormatVersion;
    manifest["duration_s"] = s.duration_s;
    manifest["seed"] = s.seed;
    json streams = json::array();
    std::uint32_t tag = 0;
    for (const auto& [id, stream] : result.streams)
    {
        const std::string file = id + ".qts";
        write_stream_binary(dir / file, stream, tag);
        if (s.stream_csv)
        {
            std::ostringstream os;
            write_stream_csv(os, stream);
            write_text(dir / (id + ".csv"), os.str());
        }
        streams.push_back({{"detector_id", id},
                           {"clock_id", stream.clock_id},
                           {"tag", tag},
                           {"file", file},
                           {"events", stream.events.size()}});
        log(opt) << std::left << std::setw(24) << id << stream.events.size() << " events\n";
        ++tag;
    }
    manifest["streams"] = std::move(streams);
    json pairs = json::object();
    for (const auto& [k, n] : result.emitted_pairs)
        pairs[k] = n;
    manifest["emitted_pairs"] = std::move(pairs);
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::map<std::string, OffsetSeries> run_analyze(const Scenario& s, const StageOptions& opt)
{
    const fs::path plan_path = opt.out_dir / "plan.json";
    const fs::path dir = opt.out_dir / "timestamps";
    if (!fs::exists(plan_path))
        throw FormatError("missing " + plan_path.string() + "; run plan/simulate first");
    const NetworkPlan plan = plan_from_json(read_text(plan_path));

    double duration_s = s.duration_s;
    std::map<std::string, std::string> files;
    {
        json manifest;
        try
        {
            manifest = json::parse(read_text(dir / "manifest.json"));
            duration_s = manifest.at("duration_s").get<double>();
            for (const auto& st : manifest.at("streams"))
                files[st.at("detector_id").get<std::string>()] = st.at("file").get<std::string>();
        }
        catch (const json::exception& e)
        {
            throw FormatError("timestamp manifest: " + std::string(e.what()));
        }
    }

    auto load = [&](const std::string& id) {
        auto it = files.find(id);
        if (it == files.end())
            throw FormatError("manifest lists no stream for detector '" + id + "'");
        auto tagged = read_stream_binary(dir / it->second);
        if (tagged.stream.detector_id != id)
            throw FormatError(it->second + " holds detector '" + tagged.stream.detector_id + "', expected '" + id +
                              "'");
        if (tagged.stream.events.empty())
            throw FormatError("timestamp stream '" + id + "' is empty");
        return std::move(tagged.stream);
    };

    std::map<std::string, TimestampStream> signals;
    for (const auto& sig : plan.signal_channels())
        signals.emplace(signal_detector_id(sig), load(signal_detector_id(sig)));

    struct Job
    {
        std::string user;
        TimestampStream user_stream;
        TimestampStream roundtrip;
        const TimestampStream* server = nullptr;
    };
    std::vector<Job> jobs;
    for (const auto& a : plan.assignments)
    {
        jobs.push_back(Job{a.user.name, load(user_detector_id(a.user.name)),
                           load(roundtrip_detector_id(a.user.name)), &signals.at(signal_detector_id(a.signal))});
    }

    struct Outcome
    {
        OffsetSeries series;
        std::vector<BatchDetail> details;
    };
    std::vector<std::future<Outcome>> futures;
    for (const auto& job : jobs)
    {
        futures.push_back(std::async(std::launch::async, [&s, &job, duration_s] {
            Outcome o;
            o.series = estimate_batch(*job.server, job.user_stream, job.roundtrip, s.batch_s, s.analysis, duration_s,
                                      &o.details, job.user);
            return o;
        }));
    }

    std::map<std::string, OffsetSeries> out;
    json summary = json::object();
    for (std::size_t i = 0; i < jobs.size(); ++i)
    {
        Outcome o = futures[i].get();
        const auto& name = jobs[i].user;
        write_text(opt.out_dir / "offsets" / (name + ".csv"), offsets_csv(o.series));
        write_text(opt.out_dir / "fits" / (name + ".csv"), fits_csv(o.series));
        if (!o.details.empty())
        {
            write_text(opt.out_dir / "histograms" / (name + "_su_batch0.csv"), histogram_csv(o.details[0].hist_su));
            write_text(opt.out_dir / "histograms" / (name + "_sus_batch0.csv"),
                       histogram_csv(o.details[0].hist_sus));
        }
        std::vector<double> fwhm_su, fwhm_sus, car_su, car_sus;
        for (const auto& b : o.series.offsets)
        {
            if (!b.valid())
                continue;
            fwhm_su.push_back(b.fit_su->fwhm_ps);
            fwhm_sus.push_back(b.fit_sus->fwhm_ps);
            car_su.push_back(b.fit_su->car);
            car_sus.push_back(b.fit_sus->car);
        }
        summary[name] = {{"batches", o.series.offsets.size()},
                         {"valid_batches", o.series.valid_count()},
                         {"median_fwhm_su_ps", median(fwhm_su)},
                         {"median_fwhm_sus_ps", median(fwhm_sus)},
                         {"median_car_su", median(car_su)},
                         {"median_car_sus", median(car_sus)}};
        log(opt) << name << ": " << o.series.valid_count() << "/" << o.series.offsets.size()
                 << " batches fitted, median FWHM su/sus " << std::fixed << std::setprecision(1) << median(fwhm_su)
                 << "/" << median(fwhm_sus) << " ps\n";
        out.emplace(name, std::move(o.series));
    }
    write_text(opt.out_dir / "analysis.json", summary.dump(2) + "\n");
    return out;
}

Report run_report(const Scenario* s, const StageOptions& opt)
{
    const fs::path dir = opt.out_dir / "offsets";
    if (!fs::is_directory(dir))
        throw FormatError("missing " + dir.string() + "; run analyze first");

    std::map<std::string, double> truth;
    const fs::path plan_path = opt.out_dir / "plan.json";
    if (fs::exists(plan_path))
    {
        for (const auto& a : plan_from_json(read_text(plan_path)).assignments)
            truth[a.user.name] = a.user.clock_offset_ps;
    }

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
    {
        if (e.is_regular_file() && e.path().extension() == ".csv")
            files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw FormatError("no offset CSVs in " + dir.string());

    Report report;
    std::map<std::string, OffsetSeries> series;
    json users = json::object();
    for (const auto& f : files)
    {
        const std::string name = f.stem().string();
        int mismatches = 0;
        OffsetSeries os = parse_offsets_csv(read_text(f), name, s ? s->batch_s : 0.0, &mismatches);

        UserReport ur;
        ur.csv_mismatches = mismatches;
        ur.total_batches = os.offsets.size();
        ur.stats = summary_stats(os);
        int max_index = 0;
        for (const auto& b : os.offsets)
            max_index = std::max(max_index, b.batch_index);
        const std::vector<int> grid =
            s && !s->tdev_m.empty() ? s->tdev_m : doubling_grid(std::max(1, (max_index + 1) / 3), {20, 40, 400});
        ur.tdev = tdev(os, grid);
        if (auto it = truth.find(name); it != truth.end())
            ur.true_offset_ps = it->second;

        json uj = stats_json(ur.stats);
        uj["total_batches"] = ur.total_batches;
        uj["delta_t_recomputed_mismatches"] = ur.csv_mismatches;
        if (ur.true_offset_ps)
        {
            uj["true_offset_ps"] = *ur.true_offset_ps;
            uj["error_ps"] = ur.stats.mean_ps - *ur.true_offset_ps;
        }
        json tj = json::array();
        for (const auto& p : ur.tdev.points)
            tj.push_back({{"tau_s", p.tau_s}, {"tdev_ps", p.tdev_ps}, {"n_samples", p.n_samples}});
        uj["tdev"] = std::move(tj);
        users[name] = std::move(uj);

        write_text(opt.out_dir / "report" / ("tdev_" + name + ".csv"), tdev_csv(ur.tdev));
        for (const auto& w : ur.tdev.warnings)
            log(opt) << "warning: " << name << ": " << w << '\n';
        log(opt) << std::left << std::setw(10) << name << std::fixed << std::setprecision(3)
                 << " mean " << ur.stats.mean_ps << " ps, std " << ur.stats.std_dev_ps << " ps";
        if (ur.true_offset_ps)
            log(opt) << ", truth " << *ur.true_offset_ps << " ps, error " << ur.stats.mean_ps - *ur.true_offset_ps
                     << " ps";
        log(opt) << '\n';
        if (mismatches > 0)
            log(opt) << "warning: " << name << ": " << mismatches
                     << " rows had a delta_t column inconsistent with the tau columns; recomputed\n";

        report.users.emplace(name, std::move(ur));
        series.emplace(name, std::move(os));
    }

    json pairwise = json::object();
    for (auto a = series.begin(); a != series.end(); ++a)
    {
        for (auto b = std::next(a); b != series.end(); ++b)
        {
            const OffsetSeries diff = pairwise_offset(a->second, b->second);
            const SummaryStats st = summary_stats(diff);
            json pj = stats_json(st);
            if (truth.count(a->first) && truth.count(b->first))
            {
                const double t = truth[a->first] - truth[b->first];
                pj["true_offset_ps"] = t;
                pj["error_ps"] = st.mean_ps - t;
                report.pairwise_truth[diff.user] = t;
            }
            pairwise[diff.user] = std::move(pj);
            report.pairwise[diff.user] = st;
            write_text(opt.out_dir / "report" / ("pairwise_" + diff.user + ".csv"), offsets_csv(diff));
        }
    }

    json summary;
    summary["users"] = std::move(users);
    summary["pairwise"] = std::move(pairwise);
    write_text(opt.out_dir / "report" / "summary.json", summary.dump(2) + "\n");
    return report;
}

Report run_all(const Scenario& s, const StageOptions& opt)
{
    run_plan(s, opt);
    run_simulate(s, opt);
    run_analyze(s, opt);
    return run_report(&s, opt);
}

} // namespace qcs
