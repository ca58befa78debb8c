#include "qcs/timestamp_io.hpp"

#include "qcs/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace qcs {

namespace {

constexpr std::array<char, 4> kMagic = {'Q', 'C', 'T', 'S'};

template <typename T>
void put_le(std::ostream& os, T value)
{
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
    {
        bytes[i] = static_cast<char>(u & 0xFF);
        u = static_cast<U>(u >> 8);
    }
    os.write(bytes, sizeof(T));
}

template <typename T>
void append_le(std::string& buf, T value)
{
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i)
    {
        buf.push_back(static_cast<char>(u & 0xFF));
        u = static_cast<U>(u >> 8);
    }
}

template <typename T>
T get_le(std::istream& is)
{
    using U = std::make_unsigned_t<T>;
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    {
        throw FormatError("timestamp file truncated");
    }
    U u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;)
    {
        u = static_cast<U>((u << 8) | bytes[i]);
    }
    return static_cast<T>(u);
}

void put_string(std::ostream& os, const std::string& s)
{
    if (s.size() > std::numeric_limits<std::uint16_t>::max())
    {
        throw FormatError("identifier too long for timestamp header");
    }
    put_le<std::uint16_t>(os, static_cast<std::uint16_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is)
{
    const auto n = get_le<std::uint16_t>(is);
    std::string s(n, '\0');
    if (n > 0 && !is.read(s.data(), n))
    {
        throw FormatError("timestamp file truncated in header");
    }
    return s;
}

} // namespace

void write_stream_binary(std::ostream& os, const TimestampStream& s, std::uint32_t tag)
{
    const Picoseconds t0 = s.events.empty() ? 0 : std::min<Picoseconds>(0, s.events.front());
    os.write(kMagic.data(), kMagic.size());
    put_le<std::uint16_t>(os, kTimestampFormatVersion);
    put_le<std::uint16_t>(os, 0);
    put_le<std::uint32_t>(os, tag);
    put_string(os, s.detector_id);
    put_string(os, s.clock_id);
    put_le<std::int64_t>(os, t0);
    put_le<std::uint64_t>(os, s.events.size());
    std::string buf;
    buf.reserve(s.events.size() * 12);
    for (Picoseconds t : s.events)
    {
        append_le<std::uint32_t>(buf, tag);
        append_le<std::uint64_t>(buf, static_cast<std::uint64_t>(t - t0));
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os)
    {
        throw FormatError("failed writing timestamp stream '" + s.detector_id + "'");
    }
}

TaggedStream read_stream_binary(std::istream& is)
{
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic)
    {
        throw FormatError("not a timestamp file (bad magic)");
    }
    const auto version = get_le<std::uint16_t>(is);
    if (version != kTimestampFormatVersion)
    {
        throw FormatError("unsupported timestamp file version " + std::to_string(version));
    }
    get_le<std::uint16_t>(is);
    TaggedStream out;
    out.tag = get_le<std::uint32_t>(is);
    out.stream.detector_id = get_string(is);
    out.stream.clock_id = get_string(is);
    const auto t0 = get_le<std::int64_t>(is);
    const auto count = get_le<std::uint64_t>(is);
    constexpr std::uint64_t kRecord = 12;
    std::string buf;
    if (count > 0)
    {
        if (count > std::numeric_limits<std::uint64_t>::max() / kRecord)
        {
            throw FormatError("implausible record count");
        }
        buf.resize(static_cast<std::size_t>(count * kRecord));
        if (!is.read(buf.data(), static_cast<std::streamsize>(buf.size())))
        {
            throw FormatError("timestamp file truncated: expected " + std::to_string(count) + " records");
        }
    }
    out.stream.events.reserve(static_cast<std::size_t>(count));
    Picoseconds prev = std::numeric_limits<Picoseconds>::min();
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    for (std::uint64_t i = 0; i < count; ++i, p += kRecord)
    {
        std::uint32_t tag = 0;
        std::uint64_t raw = 0;
        for (int b = 3; b >= 0; --b)
            tag = (tag << 8) | p[b];
        for (int b = 7; b >= 0; --b)
            raw = (raw << 8) | p[4 + b];
        if (tag != out.tag)
        {
            throw FormatError("record tag " + std::to_string(tag) + " does not match header tag");
        }
        const Picoseconds t = t0 + static_cast<Picoseconds>(raw);
        if (t < prev)
        {
            throw FormatError("timestamps out of order in '" + out.stream.detector_id + "'");
        }
        prev = t;
        out.stream.events.push_back(t);
    }
    return out;
}

void write_stream_binary(const std::filesystem::path& path, const TimestampStream& s, std::uint32_t tag)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
    {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    write_stream_binary(os, s, tag);
}

TaggedStream read_stream_binary(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
    {
        throw FormatError("cannot open " + path.string());
    }
    try
    {
        return read_stream_binary(is);
    }
    catch (const FormatError& e)
    {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_stream_csv(std::ostream& os, const TimestampStream& s)
{
    os << "detector_id,clock_id,t_ps\n";
    for (Picoseconds t : s.events)
    {
        os << s.detector_id << ',' << s.clock_id << ',' << t << '\n';
    }
}

TimestampStream read_stream_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != "detector_id,clock_id,t_ps")
    {
        throw FormatError("timestamp CSV header missing");
    }
    TimestampStream s;
    bool first = true;
    while (std::getline(is, line))
    {
        if (line.empty())
        {
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
        {
            throw FormatError("bad timestamp CSV row: " + line);
        }
        std::string det = line.substr(0, c1);
        std::string clk = line.substr(c1 + 1, c2 - c1 - 1);
        Picoseconds t = 0;
        const char* begin = line.data() + c2 + 1;
        const char* end = line.data() + line.size();
        auto [ptr, ec] = std::from_chars(begin, end, t);
        if (ec != std::errc() || ptr != end)
        {
            throw FormatError("bad timestamp value: " + line);
        }
        if (first)
        {
            s.detector_id = std::move(det);
            s.clock_id = std::move(clk);
            first = false;
        }
        else if (det != s.detector_id || clk != s.clock_id)
        {
            throw FormatError("mixed detectors in timestamp CSV");
        }
        if (!s.events.empty() && t < s.events.back())
        {
            throw FormatError("timestamps out of order in CSV");
        }
        s.events.push_back(t);
    }
    return s;
}

} // namespace qcs
