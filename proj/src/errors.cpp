#include "qsched/errors.hpp"

namespace qsched {

const char* to_string(Errc c) {
    switch (c) {
    case Errc::NonNormalized: return "NonNormalized";
    case Errc::NonIncreasingPower: return "NonIncreasingPower";
    case Errc::Unstable: return "Unstable";
    case Errc::BufferTooSmall: return "BufferTooSmall";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::ZeroArrivalRate: return "ZeroArrivalRate";
    case Errc::DegenerateArrivals: return "DegenerateArrivals";
    case Errc::NotThresholdStructured: return "NotThresholdStructured";
    case Errc::NumericalBreakdown: return "NumericalBreakdown";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::TooLarge: return "TooLarge";
    case Errc::Empty: return "Empty";
    case Errc::TooFewBatches: return "TooFewBatches";
    case Errc::ConfigParse: return "ConfigParse";
    case Errc::PolicyParse: return "PolicyParse";
    }
    return "UnknownError";
}

} // namespace qsched
