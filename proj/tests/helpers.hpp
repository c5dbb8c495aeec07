#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace testutil {

inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    auto p = std::filesystem::temp_directory_path() /
             ("slant_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(p);
    return p;
}

inline std::string write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
    return path.string();
}

}  // namespace testutil
