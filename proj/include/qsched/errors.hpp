#pragma once

#include <stdexcept>
#include <string>

namespace qsched {

enum class Errc {
    NonNormalized,
    NonIncreasingPower,
    Unstable,
    BufferTooSmall,
    IndexOutOfRange,
    DimensionMismatch,
    SingularSystem,
    ZeroArrivalRate,
    DegenerateArrivals,
    NotThresholdStructured,
    NumericalBreakdown,
    CycleDetected,
    TooLarge,
    Empty,
    TooFewBatches,
    ConfigParse,
    PolicyParse,
};

const char* to_string(Errc c);

/// Library-wide exception type; carries a machine-checkable error code.
class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

} // namespace qsched
