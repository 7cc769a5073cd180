#pragma once

#include <iosfwd>

namespace sicert {

/// Entry point of the `certify` command. Returns the process exit status.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace sicert
