#pragma once

#include <iosfwd>
#include <string>

#include "ar3n/sac.hpp"

namespace ar3n {

inline constexpr int kModelFormatVersion = 1;

/// JSON document with a format tag, version, the env and SAC configuration,
/// and the widths and parameters of the actor and all four critic nets.
/// Doubles are written with enough digits to read back bit-exactly.
void save_model(std::ostream& os, const PolicyModel& model);
void save_model(const std::string& path, const PolicyModel& model);

/// Throws ar3n::Error on a parse failure, wrong format tag or version, or a
/// parameter count that does not match the widths.
PolicyModel load_model(std::istream& is);
PolicyModel load_model(const std::string& path);

}  // namespace ar3n
