#include "singstep/errors.hpp"

#include <sstream>
#include <utility>

namespace singstep {

namespace {
std::string singular_message(double sigma_min, double sigma_max)
{
    std::ostringstream os;
    os.precision(6);
    os << "singular matrix: sigma_min = " << sigma_min << ", sigma_max = " << sigma_max;
    return os.str();
}
}  // namespace

SingularMatrix::SingularMatrix(double sigma_min, double sigma_max)
    : Error(singular_message(sigma_min, sigma_max)), sigma_min_(sigma_min), sigma_max_(sigma_max)
{
}

ParseError::ParseError(std::size_t line, std::string reason)
    : Error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(std::move(reason))
{
}

}  // namespace singstep
