#include "lcprune/feature_store.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"

#include "lcprune/error.hpp"
#include "lcprune/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace lcprune {

std::string_view to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::unsplit: return "unsplit";
    }
    return "unsplit";
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "val") return Split::val;
    if (text == "unsplit") return Split::unsplit;
    throw DataError("unknown split tag '" + std::string(text) + "' (expected train, val or unsplit)");
}

std::size_t FeaturePack::num_classes() const {
    if (probs) return probs->cols;
    if (labels && !labels->empty()) return static_cast<std::size_t>(*std::max_element(labels->begin(), labels->end())) + 1;
    return 0;
}

const LayerMatrix& FeaturePack::layer(std::size_t index) const {
    if (index >= layers.size())
        throw UsageError("layer index " + std::to_string(index) + " out of range (pack has " +
                         std::to_string(layers.size()) + " layers)");
    return layers[index];
}

const std::vector<std::uint32_t>& FeaturePack::require_labels() const {
    if (!labels) throw DataError("pack has no labels");
    return *labels;
}

namespace {

void check_finite(const Matrix& m, const std::string& origin) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        const auto r = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (!std::isfinite(r[j]))
                throw DataError(origin + ": non-finite value at row " + std::to_string(i) + ", column " +
                                std::to_string(j));
        }
    }
}

void check_shape(const Matrix& m, std::size_t n, const std::string& origin) {
    if (m.rows != n)
        throw DataError(origin + ": has " + std::to_string(m.rows) + " rows, pack declares " + std::to_string(n));
    if (m.cols == 0) throw DataError(origin + ": zero columns");
    if (m.values.size() != m.rows * m.cols) throw DataError(origin + ": storage does not match shape");
}

void validate_probs(const Matrix& probs, const std::string& origin) {
    check_finite(probs, origin);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double sum = 0.0;
        for (const float p : probs.row(i)) {
            if (p < 0.0f) throw DataError(origin + ": invalid probability row " + std::to_string(i) + ": negative entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kProbRowTolerance)
            throw DataError(origin + ": invalid probability row " + std::to_string(i) + ": sums to " + std::to_string(sum));
    }
}

void validate_perplexities(const Matrix& pp, const std::string& origin) {
    check_finite(pp, origin);
    for (std::size_t i = 0; i < pp.rows; ++i)
        for (const float v : pp.row(i))
            if (!(v > 0.0f)) throw DataError(origin + ": nonpositive perplexity at row " + std::to_string(i));
}

void validate_labels(const std::vector<std::uint32_t>& labels, std::size_t n, std::optional<std::size_t> classes,
                     const std::string& origin) {
    if (labels.size() != n)
        throw DataError(origin + ": has " + std::to_string(labels.size()) + " labels, pack declares " +
                        std::to_string(n));
    if (!classes) return;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= *classes)
            throw DataError(origin + ": label " + std::to_string(labels[i]) + " out of range at row " +
                            std::to_string(i) + " (num_classes " + std::to_string(*classes) + ")");
}

void validate_named(const FeaturePack& pack, const std::vector<std::string>& layer_origins,
                    const std::string& labels_origin, const std::string& probs_origin, const std::string& pp_origin) {
    if (pack.n_samples == 0) throw DataError("pack has zero samples");
    if (pack.layers.empty()) throw DataError("pack has no layers");
    for (std::size_t l = 0; l < pack.layers.size(); ++l) {
        check_shape(pack.layers[l].features, pack.n_samples, layer_origins[l]);
        check_finite(pack.layers[l].features, layer_origins[l]);
    }
    if (pack.probs) {
        check_shape(*pack.probs, pack.n_samples, probs_origin);
        validate_probs(*pack.probs, probs_origin);
    }
    if (pack.perplexities) {
        check_shape(*pack.perplexities, pack.n_samples, pp_origin);
        validate_perplexities(*pack.perplexities, pp_origin);
    }
    if (pack.labels) {
        std::optional<std::size_t> classes;
        if (pack.probs) classes = pack.probs->cols;
        validate_labels(*pack.labels, pack.n_samples, classes, labels_origin);
    }
}

template <typename T>
std::vector<T> read_raw(const fs::path& path, std::size_t expected_count) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw DataError(path.string() + ": missing file");
    const auto size = fs::file_size(path, ec);
    if (ec) throw DataError(path.string() + ": cannot stat: " + ec.message());
    const auto expected_bytes = expected_count * sizeof(T);
    if (size != expected_bytes)
        throw DataError(path.string() + ": size mismatch, expected " + std::to_string(expected_bytes) + " bytes, found " +
                        std::to_string(size));
    std::vector<T> out(expected_count);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": cannot open for reading");
    in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(expected_bytes));
    if (!in) throw DataError(path.string() + ": short read");
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : out) {
            auto bits = std::bit_cast<std::uint32_t>(v);
            bits = __builtin_bswap32(bits);
            v = std::bit_cast<T>(bits);
        }
    }
    return out;
}

template <typename T>
std::string encode_raw(const std::vector<T>& values) {
    std::string bytes(values.size() * sizeof(T), '\0');
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            const auto bits = __builtin_bswap32(std::bit_cast<std::uint32_t>(values[i]));
            std::memcpy(bytes.data() + i * sizeof(T), &bits, sizeof(T));
        }
    } else {
        std::memcpy(bytes.data(), values.data(), bytes.size());
    }
    return bytes;
}

template <typename T>
T require(const json& j, const char* key, const std::string& origin) {
    if (!j.contains(key)) throw DataError(origin + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw DataError(origin + ": bad value for '" + key + "': " + e.what());
    }
}

}  // namespace

void validate_probability_rows(const Matrix& probs, const std::string& origin) { validate_probs(probs, origin); }

void validate_pack(const FeaturePack& pack) {
    std::vector<std::string> names;
    for (const auto& layer : pack.layers) names.push_back("layer '" + layer.name + "'");
    validate_named(pack, names, "labels", "probs", "perplexities");
}

Manifest Manifest::parse(std::string_view json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw DataError(origin + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw DataError(origin + ": manifest must be a JSON object");
    Manifest m;
    m.version = require<int>(j, "version", origin);
    if (m.version != kManifestVersion)
        throw DataError(origin + ": unsupported manifest version " + std::to_string(m.version));
    m.n_samples = require<std::size_t>(j, "n_samples", origin);
    const json layers = require<json>(j, "layers", origin);
    if (!layers.is_array()) throw DataError(origin + ": 'layers' must be an array");
    for (const auto& entry : layers) {
        LayerEntry layer;
        layer.name = require<std::string>(entry, "name", origin);
        layer.dim = require<std::size_t>(entry, "dim", origin);
        layer.file = require<std::string>(entry, "file", origin);
        m.layers.push_back(std::move(layer));
    }
    if (j.contains("labels") && !j["labels"].is_null()) m.labels_file = require<std::string>(j["labels"], "file", origin);
    if (j.contains("probs") && !j["probs"].is_null())
        m.probs = MatrixEntry{require<std::size_t>(j["probs"], "num_classes", origin),
                              require<std::string>(j["probs"], "file", origin)};
    if (j.contains("perplexities") && !j["perplexities"].is_null())
        m.perplexities = MatrixEntry{require<std::size_t>(j["perplexities"], "num_subnets", origin),
                                     require<std::string>(j["perplexities"], "file", origin)};
    m.split = parse_split(require<std::string>(j, "split", origin));
    return m;
}

std::string Manifest::to_json() const {
    json j;
    j["version"] = version;
    j["n_samples"] = n_samples;
    j["layers"] = json::array();
    for (const auto& layer : layers) j["layers"].push_back({{"name", layer.name}, {"dim", layer.dim}, {"file", layer.file}});
    if (labels_file) j["labels"] = {{"file", *labels_file}};
    if (probs) j["probs"] = {{"num_classes", probs->width}, {"file", probs->file}};
    if (perplexities) j["perplexities"] = {{"num_subnets", perplexities->width}, {"file", perplexities->file}};
    j["split"] = std::string(to_string(split));
    return j.dump(2) + "\n";
}

std::vector<float> read_f32_file(const fs::path& path, std::size_t expected_count) {
    return read_raw<float>(path, expected_count);
}

void write_f32_file(const fs::path& path, const std::vector<float>& values) {
    write_file_atomic(path, encode_raw(values));
}

FeaturePack load_pack(const fs::path& manifest_path) {
    const Manifest m = Manifest::parse(read_text_file(manifest_path), manifest_path.string());
    const fs::path base = manifest_path.parent_path();
    const auto resolve = [&](const std::string& file) { return fs::path(file).is_absolute() ? fs::path(file) : base / file; };

    if (m.n_samples == 0) throw DataError(manifest_path.string() + ": n_samples must be positive");
    if (m.layers.empty()) throw DataError(manifest_path.string() + ": no layers declared");

    FeaturePack pack;
    pack.n_samples = m.n_samples;
    pack.split = m.split;
    std::vector<std::string> layer_origins;
    for (const auto& entry : m.layers) {
        if (entry.dim == 0) throw DataError(manifest_path.string() + ": layer '" + entry.name + "' has zero dim");
        const fs::path file = resolve(entry.file);
        pack.layers.push_back({entry.name, Matrix(m.n_samples, entry.dim, read_raw<float>(file, m.n_samples * entry.dim))});
        layer_origins.push_back(file.string());
    }
    std::string labels_origin, probs_origin, pp_origin;
    if (m.labels_file) {
        const fs::path file = resolve(*m.labels_file);
        pack.labels = read_raw<std::uint32_t>(file, m.n_samples);
        labels_origin = file.string();
    }
    if (m.probs) {
        if (m.probs->width == 0) throw DataError(manifest_path.string() + ": probs num_classes must be positive");
        const fs::path file = resolve(m.probs->file);
        pack.probs = Matrix(m.n_samples, m.probs->width, read_raw<float>(file, m.n_samples * m.probs->width));
        probs_origin = file.string();
    }
    if (m.perplexities) {
        if (m.perplexities->width == 0)
            throw DataError(manifest_path.string() + ": perplexities num_subnets must be positive");
        const fs::path file = resolve(m.perplexities->file);
        pack.perplexities =
            Matrix(m.n_samples, m.perplexities->width, read_raw<float>(file, m.n_samples * m.perplexities->width));
        pp_origin = file.string();
    }
    validate_named(pack, layer_origins, labels_origin, probs_origin, pp_origin);
    return pack;
}

Manifest write_pack(const FeaturePack& pack, const fs::path& dir) {
    validate_pack(pack);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError(dir.string() + ": cannot create directory: " + ec.message());

    Manifest m;
    m.version = kManifestVersion;
    m.n_samples = pack.n_samples;
    m.split = pack.split;
    for (std::size_t l = 0; l < pack.layers.size(); ++l) {
        const auto& layer = pack.layers[l];
        const std::string file = "layer_" + std::to_string(l) + ".f32";
        write_file_atomic(dir / file, encode_raw(layer.features.values));
        m.layers.push_back({layer.name, layer.features.cols, file});
    }
    if (pack.labels) {
        write_file_atomic(dir / "labels.u32", encode_raw(*pack.labels));
        m.labels_file = "labels.u32";
    }
    if (pack.probs) {
        write_file_atomic(dir / "probs.f32", encode_raw(pack.probs->values));
        m.probs = Manifest::MatrixEntry{pack.probs->cols, "probs.f32"};
    }
    if (pack.perplexities) {
        write_file_atomic(dir / "perplexities.f32", encode_raw(pack.perplexities->values));
        m.perplexities = Manifest::MatrixEntry{pack.perplexities->cols, "perplexities.f32"};
    }
    write_file_atomic(dir / kManifestName, m.to_json());
    return m;
}

Matrix parse_text_matrix(std::string_view text, char delimiter, const std::string& origin) {
    Matrix out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            if (end == text.size()) break;
            continue;
        }
        std::vector<float> row;
        std::size_t col = 0;
        std::size_t start = 0;
        while (true) {
            const std::size_t cut = line.find(delimiter, start);
            std::string_view token = line.substr(start, cut == std::string_view::npos ? std::string_view::npos : cut - start);
            ++col;
            while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
            while (!token.empty() && (token.back() == ' ' || token.back() == '\t')) token.remove_suffix(1);
            float value = 0.0f;
            const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
            if (token.empty() || ec != std::errc() || ptr != token.data() + token.size())
                throw DataError(origin + ": parse error at row " + std::to_string(line_no) + " column " +
                                std::to_string(col) + ": '" + std::string(token) + "'");
            if (!std::isfinite(value))
                throw DataError(origin + ": non-finite value at row " + std::to_string(line_no) + " column " +
                                std::to_string(col));
            row.push_back(value);
            if (cut == std::string_view::npos) break;
            start = cut + 1;
        }
        if (out.rows == 0) {
            out.cols = row.size();
        } else if (row.size() != out.cols) {
            throw DataError(origin + ": ragged row at line " + std::to_string(line_no) + " (" +
                            std::to_string(row.size()) + " values, expected " + std::to_string(out.cols) + ")");
        }
        out.values.insert(out.values.end(), row.begin(), row.end());
        ++out.rows;
        if (end == text.size()) break;
    }
    if (out.rows == 0) throw DataError(origin + ": empty table");
    return out;
}

Matrix load_text_matrix(const fs::path& path, char delimiter) {
    return parse_text_matrix(read_text_file(path), delimiter, path.string());
}

std::string pack_digest(const FeaturePack& pack) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto mix = [&h](const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    const auto mix_u64 = [&](std::uint64_t v) { mix(&v, sizeof v); };
    const auto mix_matrix = [&](const Matrix& m) {
        mix_u64(m.rows);
        mix_u64(m.cols);
        mix(m.values.data(), m.values.size() * sizeof(float));
    };
    mix_u64(pack.n_samples);
    for (const auto& layer : pack.layers) {
        mix(layer.name.data(), layer.name.size());
        mix_matrix(layer.features);
    }
    mix_u64(pack.labels ? 1 : 0);
    if (pack.labels) mix(pack.labels->data(), pack.labels->size() * sizeof(std::uint32_t));
    mix_u64(pack.probs ? 1 : 0);
    if (pack.probs) mix_matrix(*pack.probs);
    mix_u64(pack.perplexities ? 1 : 0);
    if (pack.perplexities) mix_matrix(*pack.perplexities);
    mix_u64(static_cast<std::uint64_t>(pack.split));
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    return out;
}

}  // namespace lcprune
