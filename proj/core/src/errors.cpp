#include "paver/errors.hpp"

namespace paver {

NumericError::NumericError(std::string stage, const std::string& what)
    : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

TrainingError::TrainingError(std::size_t step, const std::string& what)
    : NumericError("train", "step " + std::to_string(step) + ": " + what), step_(step) {}

}  // namespace paver
