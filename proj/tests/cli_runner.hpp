#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#ifndef SIXWAY_CLI_PATH
#error "SIXWAY_CLI_PATH must point at the built command-line tool"
#endif

namespace sixway::test {

struct CliResult {
    int exit_code = -1;
    std::string out, err;
};

inline std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Runs the tool with `args`, capturing both output streams through files in `scratch`.
inline CliResult run_cli(const std::vector<std::string>& args, const std::filesystem::path& scratch) {
    std::filesystem::create_directories(scratch);
    const auto out = scratch / "cli_stdout.txt", err = scratch / "cli_stderr.txt";
    std::string cmd = shell_quote(SIXWAY_CLI_PATH);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " >" + shell_quote(out.string()) + " 2>" + shell_quote(err.string());
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    std::filesystem::remove(out);
    std::filesystem::remove(err);
    return r;
}

} // namespace sixway::test
