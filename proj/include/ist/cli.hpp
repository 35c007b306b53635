#ifndef IST_CLI_HPP
#define IST_CLI_HPP

namespace ist::cli {

// Exit codes: 0 success, 1 input error, 2 numerical-warning success.
int run(int argc, const char* const* argv);

} // namespace ist::cli

#endif
