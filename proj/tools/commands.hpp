#pragma once

#include <string>
#include <vector>

namespace laborscope::cli {

/// Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure.
int run(int argc, const char* const* argv);

/// Convenience overload; args excludes the program name.
int run(const std::vector<std::string>& args);

/// Parses "2014-2018", "2014,2016" or a mix ("2014-2015,2018").
std::vector<int> parse_years(const std::string& text);

}  // namespace laborscope::cli
