#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kbin/common.hpp"
#include "kbin/version.hpp"

namespace kbin {

// FNV-1a 64-bit digest of a file, hex-encoded. Enough to pin which inputs a
// run consumed.
inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("file not found: " + path);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const auto got = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001b3ull;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
    return std::string("fnv1a64:") + hex;
}

// Written beside every subcommand output. Wall-clock duration lives only
// here, never in the outputs themselves, so outputs stay byte-reproducible.
class RunManifest {
public:
    explicit RunManifest(std::string command) : start_(std::chrono::steady_clock::now()) {
        doc_["tool"] = "kbin";
        doc_["version"] = kVersion;
        doc_["format_versions"] = {{"KBPF", kFormatVersionKbpf}, {"KBEM", kFormatVersionKbem}, {"KBNL", kFormatVersionKbnl}};
        doc_["command"] = std::move(command);
        doc_["inputs"] = nlohmann::ordered_json::object();
        doc_["outputs"] = nlohmann::ordered_json::array();
        doc_["config"] = nlohmann::ordered_json::object();
    }

    void set_argv(int argc, char** argv) {
        std::string line;
        for (int i = 0; i < argc; ++i) {
            if (i > 0) line += ' ';
            line += argv[i];
        }
        doc_["command_line"] = line;
    }

    template <typename T>
    void config(const std::string& key, const T& value) {
        doc_["config"][key] = value;
    }

    void input(const std::string& path) { doc_["inputs"][path] = file_digest(path); }

    void output(const std::string& path) { doc_["outputs"].push_back(path); }

    // Writes <beside>.manifest.json.
    void write(const std::string& beside) {
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        doc_["duration_seconds"] = elapsed;
        const std::string path = beside + ".manifest.json";
        std::ofstream out(path);
        if (!out) throw DataError("cannot open " + path + " for writing");
        out << doc_.dump(2) << '\n';
    }

private:
    nlohmann::ordered_json doc_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace kbin
