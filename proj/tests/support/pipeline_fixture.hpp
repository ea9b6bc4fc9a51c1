#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "groundcheck/run_config.hpp"

namespace testsupport {

inline std::filesystem::path pipeline_fixture_dir() {
    return std::filesystem::path(GROUNDCHECK_TEST_DATA_DIR) / "fixtures" / "pipeline";
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("groundcheck_" + std::to_string(::getpid()) + "_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// The fixture config writing into `out`, plus any extra overrides.
inline groundcheck::RunConfig fixture_config(const std::filesystem::path& out, std::vector<std::string> overrides = {}) {
    overrides.insert(overrides.begin(), "output_dir=\"" + out.string() + "\"");
    return groundcheck::load_run_config(pipeline_fixture_dir() / "config.json", overrides);
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace testsupport
