#pragma once
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lesionboost/errors.hpp"
#include "lesionboost/hash.hpp"
#include "lesionboost/version.hpp"

namespace lesionboost {

inline std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "' for hashing");
    std::ostringstream buf;
    buf << in.rdbuf();
    return fingerprint(buf.str());
}

// Reproducibility record dropped next to every command's outputs. Carries no
// timestamps: identical config + inputs give a byte-identical manifest.
struct run_manifest {
    std::string command;
    nlohmann::json config;
    std::map<std::string, std::string> input_hashes;
    std::vector<std::string> outputs;

    nlohmann::json to_json() const {
        return {{"tool_version", version_string},
                {"command", command},
                {"config", config},
                {"config_hash", fingerprint(config.dump())},
                {"input_hashes", input_hashes},
                {"outputs", outputs}};
    }

    void add_input(const std::string& path) { input_hashes[path] = hash_file(path); }

    void write(const std::string& dir) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        std::ofstream out(fs::path(dir) / "run_manifest.json", std::ios::binary);
        if (!out) throw io_error("cannot write run manifest in '" + dir + "'");
        out << to_json().dump(2) << '\n';
    }
};

} // namespace lesionboost
