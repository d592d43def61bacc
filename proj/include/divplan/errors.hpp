#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace divplan {

// Base for all typed failures. kind() feeds the error tallies in eval reports.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define DIVPLAN_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                           \
    public:                                                               \
        explicit Name(const std::string& what) : Error(#Name, what) {}    \
    };

DIVPLAN_DEFINE_ERROR(ParseError)
DIVPLAN_DEFINE_ERROR(InvariantViolation)
DIVPLAN_DEFINE_ERROR(UnknownObject)
DIVPLAN_DEFINE_ERROR(MissingScene)
DIVPLAN_DEFINE_ERROR(CandidateGenerationFailed)
DIVPLAN_DEFINE_ERROR(PaletteExhausted)
DIVPLAN_DEFINE_ERROR(TransportError)
DIVPLAN_DEFINE_ERROR(JudgeRefused)
DIVPLAN_DEFINE_ERROR(UnparseableResponse)
DIVPLAN_DEFINE_ERROR(HallucinatedAnswer)
DIVPLAN_DEFINE_ERROR(AllQueriesFailed)
DIVPLAN_DEFINE_ERROR(BudgetTooSmall)

#undef DIVPLAN_DEFINE_ERROR

}  // namespace divplan
