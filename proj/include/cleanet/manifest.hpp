#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <sys/resource.h>

#include "cleanet/errors.hpp"
#include "cleanet/version.hpp"

#include <json.hpp>

namespace cleanet {

inline long peak_rss_kb() {
    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    return usage.ru_maxrss;
}

/// Write through a .tmp sibling and rename, so a crashed run never leaves a
/// half-written output at the final path.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw io_error("cannot write " + tmp.string());
        out << content;
        if (!out)
            throw io_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Record of one CLI run: the fully resolved configuration plus runtime
/// measurements. Everything except the `timing` block is a pure function of
/// the inputs, so replaying a manifest reproduces the outputs byte for byte.
struct RunManifest {
    std::string subcommand;
    nlohmann::json config = nlohmann::json::object(); // all defaults materialized
    std::uint32_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    double wall_seconds = 0.0;
    long peak_rss_kilobytes = 0;

    nlohmann::json to_json() const {
        return nlohmann::json{{"format", "cleanet-manifest"},
                              {"format_version", 1},
                              {"tool_version", kVersion},
                              {"subcommand", subcommand},
                              {"seed", seed},
                              {"config", config},
                              {"inputs", inputs},
                              {"outputs", outputs},
                              {"timing", {{"wall_seconds", wall_seconds},
                                          {"peak_rss_kilobytes", peak_rss_kilobytes}}}};
    }

    void write(const std::filesystem::path& path) const {
        atomic_write_text(path, to_json().dump(2) + "\n");
    }
};

} // namespace cleanet
