#include "lcprune/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "lcprune/error.hpp"

namespace fs = std::filesystem;

namespace lcprune {

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": cannot open for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    fs::path tmp = path;
    tmp += ".tmp-" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError(path.string() + ": cannot open for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw DataError(path.string() + ": write failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw DataError(path.string() + ": rename failed: " + ec.message());
    }
}

StagedOutput::StagedOutput(fs::path target) : target_(std::move(target)) {
    std::error_code ec;
    fs::create_directories(target_, ec);
    if (ec) throw DataError(target_.string() + ": cannot create output directory: " + ec.message());
    staging_ = target_ / (".staging-" + std::to_string(::getpid()));
    fs::remove_all(staging_, ec);
    fs::create_directory(staging_, ec);
    if (ec) throw DataError(target_.string() + ": output directory is not writable: " + ec.message());
}

StagedOutput::~StagedOutput() {
    std::error_code ec;
    fs::remove_all(staging_, ec);
}

fs::path StagedOutput::path(const std::string& name) {
    if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
    return staging_ / name;
}

void StagedOutput::write(const std::string& name, std::string_view bytes) {
    const fs::path p = path(name);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(p.string() + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError(p.string() + ": write failed");
}

void StagedOutput::commit() {
    if (committed_) return;
    for (const auto& name : names_) {
        std::error_code ec;
        fs::rename(staging_ / name, target_ / name, ec);
        if (ec) throw DataError((target_ / name).string() + ": cannot move into place: " + ec.message());
    }
    committed_ = true;
}

}  // namespace lcprune
