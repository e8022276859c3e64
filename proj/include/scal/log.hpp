#pragma once

#include <functional>
#include <string>

namespace scal {

using WarningSink = std::function<void(const std::string&)>;

// Routes library warnings. The default sink writes to stderr. Returns the
// previous sink so callers (tests, quiet CLI runs) can restore it.
WarningSink set_warning_sink(WarningSink sink);

void warn(const std::string& message);

}  // namespace scal
