#pragma once

#include <stdexcept>
#include <string>

namespace qcs {

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A computed partner channel lands on one of the pump channels.
class PumpCollision : public Error
{
public:
    using Error::Error;
};

/// A channel index falls outside the configured grid.
class OutOfGrid : public Error
{
public:
    using Error::Error;
};

/// Not enough non-overlapping pairing triples for the requested users.
class InsufficientGrid : public Error
{
public:
    using Error::Error;
};

/// A histogram has no bin standing out of the accidental floor.
class NoPeak : public Error
{
public:
    using Error::Error;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

/// Malformed or truncated data file.
class FormatError : public Error
{
public:
    using Error::Error;
};

} // namespace qcs
