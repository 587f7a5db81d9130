#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ein {

/// Runs the `ein` command line on `args` (program name excluded).
/// Returns 0 on success, 1 on user or input errors, 2 on internal,
/// resource or numeric failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// RFC 4180 field: quoted when it contains a comma, quote or line break.
std::string csv_field(const std::string& value);

}  // namespace ein
