#pragma once

// On-disk dataset packs: a JSON manifest (`pack.json`) plus headerless
// little-endian binaries. Layer features, probabilities and perplexities are
// row-major float32; labels are uint32.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lcprune/matrix.hpp"

namespace lcprune {

enum class Split { train, val, unsplit };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct LayerMatrix {
    std::string name;
    Matrix features;

    bool operator==(const LayerMatrix&) const = default;
};

struct FeaturePack {
    std::size_t n_samples = 0;
    std::vector<LayerMatrix> layers;
    std::optional<std::vector<std::uint32_t>> labels;
    std::optional<Matrix> probs;         // n x K
    std::optional<Matrix> perplexities;  // n x I
    Split split = Split::unsplit;

    /// K: the probability width when present, else max(label) + 1, else 0.
    std::size_t num_classes() const;
    const LayerMatrix& layer(std::size_t index) const;
    const std::vector<std::uint32_t>& require_labels() const;

    bool operator==(const FeaturePack&) const = default;
};

inline constexpr double kProbRowTolerance = 1e-4;

/// Throws DataError on the first violated pack invariant.
void validate_pack(const FeaturePack& pack);

/// Finite, nonnegative rows summing to 1 within kProbRowTolerance.
void validate_probability_rows(const Matrix& probs, const std::string& origin = "probs");

struct Manifest {
    struct LayerEntry {
        std::string name;
        std::size_t dim = 0;
        std::string file;
    };
    struct MatrixEntry {
        std::size_t width = 0;
        std::string file;
    };

    int version = 1;
    std::size_t n_samples = 0;
    std::vector<LayerEntry> layers;
    std::optional<std::string> labels_file;
    std::optional<MatrixEntry> probs;         // width = num_classes
    std::optional<MatrixEntry> perplexities;  // width = num_subnets
    Split split = Split::unsplit;

    static Manifest parse(std::string_view json_text, const std::string& origin = "pack.json");
    std::string to_json() const;
};

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestName = "pack.json";

/// Loads and fully validates a pack; paths in the manifest resolve relative to
/// the manifest's directory.
FeaturePack load_pack(const std::filesystem::path& manifest_path);

/// Writes data files and `pack.json` into `dir` (created if missing).
Manifest write_pack(const FeaturePack& pack, const std::filesystem::path& dir);

/// Delimiter-separated numeric table, one sample per line. Blank trailing lines
/// are ignored.
Matrix parse_text_matrix(std::string_view text, char delimiter, const std::string& origin = "<text>");
Matrix load_text_matrix(const std::filesystem::path& path, char delimiter);

/// FNV-1a 64 over every matrix, label and tag in the pack; hex encoded.
std::string pack_digest(const FeaturePack& pack);

// Raw binary helpers, exposed for the writers of other artifacts.
std::vector<float> read_f32_file(const std::filesystem::path& path, std::size_t expected_count);
void write_f32_file(const std::filesystem::path& path, const std::vector<float>& values);

}  // namespace lcprune
