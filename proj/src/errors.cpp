#include "wtv/errors.hpp"

namespace wtv {

PrecisionError::PrecisionError(const std::string& what, double defect)
    : NumericalError(what), defect_(defect) {}

namespace detail {
void fail_precondition(const std::string& what) { throw PreconditionError(what); }
}  // namespace detail

}  // namespace wtv
