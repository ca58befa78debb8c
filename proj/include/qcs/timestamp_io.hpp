#pragma once

// Timestamp stream file formats.
//
// Binary (.qts), all integers little-endian:
//   char[4]  magic "QCTS"
//   u16      version (1)
//   u16      reserved (0)
//   u32      detector tag
//   u16 n, n bytes   detector id (UTF-8)
//   u16 n, n bytes   clock id (UTF-8)
//   i64      t0 in ps
//   u64      record count
//   records: { u32 detector tag, u64 timestamp - t0 in ps }
//
// CSV: header "detector_id,clock_id,t_ps", one event per line.

#include "qcs/photon_sim.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace qcs {

inline constexpr std::uint16_t kTimestampFormatVersion = 1;

struct TaggedStream
{
    std::uint32_t tag = 0;
    TimestampStream stream;
};

void write_stream_binary(std::ostream& os, const TimestampStream& s, std::uint32_t tag);
TaggedStream read_stream_binary(std::istream& is);

void write_stream_binary(const std::filesystem::path& path, const TimestampStream& s, std::uint32_t tag);
TaggedStream read_stream_binary(const std::filesystem::path& path);

void write_stream_csv(std::ostream& os, const TimestampStream& s);
/// Reads a single-detector CSV; rows must share one detector and clock id.
TimestampStream read_stream_csv(std::istream& is);

} // namespace qcs
