#include "aa/client/config.hpp"

#include "aa/core/error.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>

namespace aa {

namespace {

std::optional<std::string> env(const char* name) {
    const char* value = std::getenv(name);
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::string(value);
}

}  // namespace

std::filesystem::path default_config_dir() {
    if (auto dir = env("AA_CONFIG_DIR")) return *dir;
    if (auto xdg = env("XDG_CONFIG_HOME")) return std::filesystem::path(*xdg) / "aa";
    if (auto home = env("HOME")) return std::filesystem::path(*home) / ".config" / "aa";
    return std::filesystem::current_path() / ".aa";
}

ClientConfig load_client_config(const std::filesystem::path& dir) {
    ClientConfig config;
    const auto file = dir / "config.json";
    if (std::ifstream in{file}) {
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::InvalidConfig, file.string() + " is not a JSON object");
        try {
            config.server = j.value("server", "");
            config.token = j.value("token", "");
            config.timeslot_minutes = j.value("timeslot_minutes", config.timeslot_minutes);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidConfig, file.string() + ": " + e.what());
        }
    }
    if (auto server = env("AA_SERVER")) config.server = *server;
    if (auto token = env("AA_TOKEN")) config.token = *token;
    if (auto timeslot = env("AA_TIMESLOT")) {
        try {
            config.timeslot_minutes = std::stoi(*timeslot);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidConfig, "AA_TIMESLOT must be a number of minutes");
        }
    }
    return config;
}

void save_client_config(const std::filesystem::path& dir, const ClientConfig& config) {
    std::filesystem::create_directories(dir);
    const auto file = dir / "config.json";
    const auto tmp = dir / "config.json.tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << nlohmann::json{{"server", config.server},
                              {"token", config.token},
                              {"timeslot_minutes", config.timeslot_minutes}}
                   .dump(2)
            << '\n';
        if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + tmp.string());
    }
    std::filesystem::permissions(tmp, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write);
    std::filesystem::rename(tmp, file);
}

}  // namespace aa
