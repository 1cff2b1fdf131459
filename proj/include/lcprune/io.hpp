#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lcprune {

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over `path`, so readers never see
/// a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Output directory whose files only appear once `commit()` succeeds. Files are
/// staged in a hidden subdirectory that is removed if the staging object is
/// destroyed without committing.
class StagedOutput {
public:
    explicit StagedOutput(std::filesystem::path target);
    ~StagedOutput();
    StagedOutput(const StagedOutput&) = delete;
    StagedOutput& operator=(const StagedOutput&) = delete;

    /// Path inside the staging area for a file that will land at target/name.
    std::filesystem::path path(const std::string& name);
    void write(const std::string& name, std::string_view bytes);
    /// Registers a file that was written directly into staging_dir().
    void adopt(const std::string& name) { path(name); }
    const std::filesystem::path& staging_dir() const { return staging_; }
    void commit();

    const std::filesystem::path& target() const { return target_; }

private:
    std::filesystem::path target_;
    std::filesystem::path staging_;
    std::vector<std::string> names_;
    bool committed_ = false;
};

}  // namespace lcprune
