#pragma once

#include <stdexcept>
#include <string>

namespace cagecalc {

enum class ErrorKind {
    DomainError,
    WireOverlap,
    InvalidCount,
    OutOfReach,
    RankDeficient,
    NoConvergence,
    InvalidRegime,
    NearResonance,
    RegimeWarning,
    DegenerateMode,
    ZeroDamping,
    NotImplemented,
    IllConditioned,
    NearSingularBasis,
    InsideWire,
    WindowTooClose,
    ConfigError,
};

inline const char* to_string(ErrorKind k)
{
    switch (k) {
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::WireOverlap: return "WireOverlap";
    case ErrorKind::InvalidCount: return "InvalidCount";
    case ErrorKind::OutOfReach: return "OutOfReach";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::InvalidRegime: return "InvalidRegime";
    case ErrorKind::NearResonance: return "NearResonance";
    case ErrorKind::RegimeWarning: return "RegimeWarning";
    case ErrorKind::DegenerateMode: return "DegenerateMode";
    case ErrorKind::ZeroDamping: return "ZeroDamping";
    case ErrorKind::NotImplemented: return "NotImplemented";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::NearSingularBasis: return "NearSingularBasis";
    case ErrorKind::InsideWire: return "InsideWire";
    case ErrorKind::WindowTooClose: return "WindowTooClose";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure raised by the library. `value` and `index` carry the
/// payload some kinds need (effective rank, delta_inf, offending mode order).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what, double value = 0.0, int index = -1)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what),
          kind_(kind), value_(value), index_(index)
    {
    }

    ErrorKind kind() const { return kind_; }
    double value() const { return value_; }
    int index() const { return index_; }

private:
    ErrorKind kind_;
    double value_;
    int index_;
};

} // namespace cagecalc
