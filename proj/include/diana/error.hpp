#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diana {

enum class ErrorCode {
    DuplicateSiteId,
    DuplicateDatasetId,
    UnknownReplicaSite,
    UnknownSite,
    UnknownDataset,
    MissingLink,
    NonPositiveBandwidth,
    InvalidMetric,
    InvalidWeight,
    InvalidJob,
    InvalidArgument,
    ZeroLoss,
    ZeroRtt,
    NoEligibleSite,
    EmptyDatasetPool,
    Deadlock,
    Scenario,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind rather than parse messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace diana
