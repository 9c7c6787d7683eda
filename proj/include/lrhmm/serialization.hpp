#pragma once

#include "lrhmm/model.hpp"

#include <filesystem>
#include <string>

namespace lrhmm {

/// JSON document with n_states, n_dims, band_width, pi, A (probabilities,
/// 0.0 for structural zeros) and states[{mean, covariance}].
std::string model_to_json(const LrHmmModel<double>& m);

/// Inverse of model_to_json. Malformed documents raise ModelInvalidError.
LrHmmModel<double> model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const LrHmmModel<double>& m);
LrHmmModel<double> load_model(const std::filesystem::path& path);

}  // namespace lrhmm
