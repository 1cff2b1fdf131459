#include "lcprune/scores.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <system_error>

#include "lcprune/error.hpp"
#include "lcprune/io.hpp"

namespace fs = std::filesystem;

namespace lcprune {

namespace {

std::string format_double(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

}  // namespace

fs::path sidecar_path(const fs::path& csv_path) {
    fs::path p = csv_path;
    p.replace_extension(".json");
    return p;
}

std::string scores_csv(const ScoreVector& scores) {
    std::string out = "index,score\n";
    for (std::size_t i = 0; i < scores.values.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_double(scores.values[i]);
        out += '\n';
    }
    return out;
}

std::string scores_sidecar(const ScoreVector& scores, const std::string& pack_digest) {
    nlohmann::ordered_json j;
    j["method"] = scores.method;
    j["params"] = scores.params;
    j["higher_is_easier"] = scores.higher_is_easier;
    j["n"] = scores.values.size();
    j["pack_digest"] = pack_digest;
    return j.dump(2) + "\n";
}

void write_scores(const ScoreVector& scores, const fs::path& csv_path, const fs::path& json_path,
                  const std::string& pack_digest) {
    write_file_atomic(csv_path, scores_csv(scores));
    write_file_atomic(json_path, scores_sidecar(scores, pack_digest));
}

ScoreVector read_scores(const fs::path& csv_path, const fs::path& json_path) {
    const std::string text = read_text_file(csv_path);
    ScoreVector scores;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("index", 0) == 0) continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos)
            throw DataError(csv_path.string() + ": line " + std::to_string(line_no) + " is not 'index,score'");
        std::size_t index = 0;
        double value = 0.0;
        const auto idx_tok = line.substr(0, comma);
        const auto val_tok = line.substr(comma + 1);
        const auto r1 = std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), index);
        const auto r2 = std::from_chars(val_tok.data(), val_tok.data() + val_tok.size(), value);
        if (r1.ec != std::errc() || r1.ptr != idx_tok.data() + idx_tok.size() || r2.ec != std::errc() ||
            r2.ptr != val_tok.data() + val_tok.size())
            throw DataError(csv_path.string() + ": parse error at line " + std::to_string(line_no));
        if (index != scores.values.size())
            throw DataError(csv_path.string() + ": indices must run 0..n-1 in order (line " + std::to_string(line_no) +
                            ")");
        if (!std::isfinite(value))
            throw DataError(csv_path.string() + ": non-finite score at index " + std::to_string(index));
        scores.values.push_back(value);
    }
    if (scores.values.empty()) throw DataError(csv_path.string() + ": no scores");

    scores.method = "external";
    std::error_code ec;
    if (fs::is_regular_file(json_path, ec)) {
        nlohmann::ordered_json j;
        try {
            j = nlohmann::ordered_json::parse(read_text_file(json_path));
            scores.method = j.value("method", std::string("external"));
            scores.higher_is_easier = j.value("higher_is_easier", true);
            if (j.contains("params")) scores.params = j["params"];
            if (j.contains("n") && j["n"].get<std::size_t>() != scores.values.size())
                throw DataError(json_path.string() + ": sidecar n does not match the CSV row count");
        } catch (const nlohmann::ordered_json::exception& e) {
            throw DataError(json_path.string() + ": invalid sidecar: " + e.what());
        }
    }
    return scores;
}

ScoreVector read_scores(const fs::path& csv_path) { return read_scores(csv_path, sidecar_path(csv_path)); }

}  // namespace lcprune
