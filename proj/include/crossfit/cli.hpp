#pragma once

#include <ostream>
#include <string>

namespace crossfit::cli {

// Exit codes shared by all commands:
//   0 success, 2 config/validation failure, 3 partial method failure, 4 I/O.

int cmd_validate(const std::string& config_path, std::ostream& out);

int cmd_schedule(const std::string& config_path, const std::string& method_name,
                 int rep, const std::string& format, std::ostream& out);

// Runs crossfit_multi over every configured method and writes one JSON file.
int cmd_run(const std::string& config_path, const std::string& output_override,
            std::ostream& out);

// Monte-Carlo study: fresh DGP draw per replication, one CSV row per
// (replication, method), summary footer with mean / bias / MC std.
int cmd_simulate(const std::string& config_path, const std::string& output_override,
                 std::ostream& out);

} // namespace crossfit::cli
