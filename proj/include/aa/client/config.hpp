#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace aa {

struct ClientConfig {
    std::string server;
    std::string token;
    int timeslot_minutes = 15;

    bool complete() const { return !server.empty() && !token.empty(); }
};

/// $AA_CONFIG_DIR, else $XDG_CONFIG_HOME/aa, else $HOME/.config/aa.
std::filesystem::path default_config_dir();

/// Reads <dir>/config.json if present, then applies AA_SERVER, AA_TOKEN and
/// AA_TIMESLOT from the environment. Throws Error(InvalidConfig) on a malformed file.
ClientConfig load_client_config(const std::filesystem::path& dir);
void save_client_config(const std::filesystem::path& dir, const ClientConfig& config);

}  // namespace aa
