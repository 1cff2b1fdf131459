#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <sys/stat.h>
#include <unistd.h>

#include "lcprune/error.hpp"
#include "lcprune/feature_store.hpp"
#include "lcprune/io.hpp"
#include "support.hpp"

#include "json.hpp"

using namespace lcprune;
using lcprune::testing::TempDir;
using lcprune::testing::make_matrix;

namespace {

FeaturePack minimal_pack() {
    return lcprune::testing::make_pack({make_matrix({{1, 2}, {3, 4}, {5, 6}})}, {0, 1, 0});
}

FeaturePack full_pack() {
    FeaturePack pack = lcprune::testing::make_pack(
        {make_matrix({{1, 2}, {3, 4}, {5, 6}}), make_matrix({{0.5f, -1, 2}, {1e-7f, 3, 4}, {-0.0f, 9, 8}})}, {0, 2, 1});
    pack.probs = make_matrix({{0.2f, 0.3f, 0.5f}, {1, 0, 0}, {0.25f, 0.25f, 0.5f}});
    pack.perplexities = make_matrix({{2, 4}, {1, 1}, {3.5f, 10}});
    pack.split = Split::val;
    return pack;
}

template <typename Fn>
std::string error_message(Fn&& fn) {
    try {
        fn();
    } catch (const DataError& e) {
        return e.what();
    }
    return "<no DataError>";
}

}  // namespace

TEST(FeatureStore, MinimalPackLoads) {
    TempDir dir;
    write_pack(minimal_pack(), dir.path());
    const FeaturePack loaded = load_pack(dir / "pack.json");
    EXPECT_EQ(loaded.n_samples, 3u);
    EXPECT_EQ(loaded.layers.size(), 1u);
    EXPECT_EQ(loaded.num_classes(), 2u);
    EXPECT_EQ(loaded.layers[0].features.cols, 2u);
}

TEST(FeatureStore, RoundTripIsBitExact) {
    TempDir dir;
    for (const auto& pack : {minimal_pack(), full_pack()}) {
        write_pack(pack, dir.path());
        const FeaturePack loaded = load_pack(dir / "pack.json");
        EXPECT_EQ(loaded, pack);
        // -0.0f and tiny values must survive too; operator== on floats would not notice a sign flip.
        for (std::size_t l = 0; l < pack.layers.size(); ++l)
            EXPECT_EQ(0, std::memcmp(loaded.layers[l].features.values.data(), pack.layers[l].features.values.data(),
                                     pack.layers[l].features.values.size() * sizeof(float)));
    }
}

TEST(FeatureStore, RoundTripRandomPacks) {
    std::mt19937_64 gen(11);
    TempDir dir;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 1 + gen() % 40;
        FeaturePack pack = lcprune::testing::make_pack(
            {lcprune::testing::random_matrix(gen, n, 1 + gen() % 6), lcprune::testing::random_matrix(gen, n, 3)},
            lcprune::testing::random_labels(gen, n, 4));
        if (trial % 2 == 0) {
            Matrix probs(n, 4);
            for (std::size_t i = 0; i < n; ++i) probs(i, (*pack.labels)[i]) = 1.0f;
            pack.probs = probs;
        }
        write_pack(pack, dir.path());
        EXPECT_EQ(load_pack(dir / "pack.json"), pack);
    }
}

TEST(FeatureStore, ShortFileIsSizeMismatch) {
    TempDir dir;
    write_pack(minimal_pack(), dir.path());
    std::filesystem::resize_file(dir / "layer_0.f32", 3 * 2 * 4 - 1);
    const auto msg = error_message([&] { load_pack(dir / "pack.json"); });
    EXPECT_NE(msg.find("size mismatch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("layer_0.f32"), std::string::npos) << msg;
}

TEST(FeatureStore, NonFiniteCitesRow) {
    TempDir dir;
    std::mt19937_64 gen(3);
    FeaturePack pack = lcprune::testing::make_pack({lcprune::testing::random_matrix(gen, 10, 3)},
                                                   lcprune::testing::random_labels(gen, 10, 2));
    write_pack(pack, dir.path());
    pack.layers[0].features(7, 1) = std::numeric_limits<float>::quiet_NaN();
    write_f32_file(dir / "layer_0.f32", pack.layers[0].features.values);
    const auto msg = error_message([&] { load_pack(dir / "pack.json"); });
    EXPECT_NE(msg.find("non-finite"), std::string::npos) << msg;
    EXPECT_NE(msg.find("row 7"), std::string::npos) << msg;
    EXPECT_NE(msg.find("layer_0.f32"), std::string::npos) << msg;
}

TEST(FeatureStore, MissingFile) {
    TempDir dir;
    write_pack(minimal_pack(), dir.path());
    std::filesystem::remove(dir / "labels.u32");
    const auto msg = error_message([&] { load_pack(dir / "pack.json"); });
    EXPECT_NE(msg.find("missing file"), std::string::npos) << msg;
    EXPECT_NE(msg.find("labels.u32"), std::string::npos) << msg;
}

TEST(FeatureStore, LabelOutOfRange) {
    TempDir dir;
    write_pack(full_pack(), dir.path());
    const std::vector<std::uint32_t> bad = {0, 5, 1};
    write_file_atomic(dir / "labels.u32", std::string(reinterpret_cast<const char*>(bad.data()), bad.size() * 4));
    const auto msg = error_message([&] { load_pack(dir / "pack.json"); });
    EXPECT_NE(msg.find("out of range at row 1"), std::string::npos) << msg;
}

TEST(FeatureStore, ProbabilityRowsMustSumToOne) {
    TempDir dir;
    FeaturePack pack = full_pack();
    write_pack(pack, dir.path());
    pack.probs->values[3] = 0.9f;  // row 1 now sums to 0.9
    write_f32_file(dir / "probs.f32", pack.probs->values);
    const auto msg = error_message([&] { load_pack(dir / "pack.json"); });
    EXPECT_NE(msg.find("row 1"), std::string::npos) << msg;

    // Within the 1e-4 tolerance is accepted.
    pack.probs->values[3] = 1.00005f;
    write_f32_file(dir / "probs.f32", pack.probs->values);
    EXPECT_NO_THROW(load_pack(dir / "pack.json"));
}

TEST(FeatureStore, PerplexityMustBePositive) {
    TempDir dir;
    FeaturePack pack = full_pack();
    write_pack(pack, dir.path());
    pack.perplexities->values[4] = 0.0f;
    write_f32_file(dir / "perplexities.f32", pack.perplexities->values);
    const auto msg = error_message([&] { load_pack(dir / "pack.json"); });
    EXPECT_NE(msg.find("nonpositive perplexity at row 2"), std::string::npos) << msg;
}

TEST(FeatureStore, ManifestErrors) {
    EXPECT_THROW(Manifest::parse("{"), DataError);
    EXPECT_THROW(Manifest::parse(R"({"version":1,"n_samples":3,"split":"train"})"), DataError);
    EXPECT_THROW(Manifest::parse(R"({"version":2,"n_samples":3,"layers":[],"split":"train"})"), DataError);
    EXPECT_THROW(Manifest::parse(R"({"version":1,"n_samples":3,"layers":[],"split":"test"})"), DataError);
    const auto m = Manifest::parse(
        R"({"version":1,"n_samples":3,"layers":[{"name":"a","dim":2,"file":"a.f32"}],"probs":{"num_classes":4,"file":"p.f32"},"split":"val"})");
    EXPECT_EQ(m.layers.at(0).dim, 2u);
    EXPECT_EQ(m.probs->width, 4u);
    EXPECT_FALSE(m.labels_file);
    EXPECT_EQ(m.split, Split::val);
    EXPECT_EQ(Manifest::parse(m.to_json()).to_json(), m.to_json());
}

TEST(FeatureStore, ManifestKeysMatchInterface) {
    const auto text = write_pack(full_pack(), TempDir().path()).to_json();
    const auto j = nlohmann::json::parse(text);
    for (const char* key : {"version", "n_samples", "layers", "labels", "probs", "perplexities", "split"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_TRUE(j["probs"].contains("num_classes"));
    EXPECT_TRUE(j["perplexities"].contains("num_subnets"));
}

TEST(FeatureStore, ValidationRejectsInMemoryViolations) {
    FeaturePack pack = minimal_pack();
    pack.layers[0].features(1, 0) = std::numeric_limits<float>::infinity();
    EXPECT_THROW(validate_pack(pack), DataError);
    pack = minimal_pack();
    pack.labels->pop_back();
    EXPECT_THROW(validate_pack(pack), DataError);
}

TEST(FeatureStore, WriteToReadOnlyDirFails) {
    if (::geteuid() == 0) {
        // Root ignores permission bits; procfs refuses new entries regardless.
        EXPECT_THROW(write_pack(minimal_pack(), "/proc/lcprune-readonly"), DataError);
        return;
    }
    TempDir dir;
    ::chmod(dir.path().c_str(), 0500);
    EXPECT_THROW(write_pack(minimal_pack(), dir.path()), DataError);
    ::chmod(dir.path().c_str(), 0700);
}

TEST(FeatureStore, WriteUnderAFileFails) {
    TempDir dir;
    write_file_atomic(dir / "blocker", "x");
    EXPECT_THROW(write_pack(minimal_pack(), dir / "blocker" / "sub"), DataError);
}

TEST(TextMatrix, ParsesRectangularTable) {
    const Matrix m = parse_text_matrix("1,2\n3,4", ',');
    EXPECT_EQ(m, make_matrix({{1, 2}, {3, 4}}));
    EXPECT_EQ(parse_text_matrix("1\t2\n3\t4\n\n", '\t'), m);
}

TEST(TextMatrix, RaggedRow) {
    try {
        parse_text_matrix("1,2\n3", ',');
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("ragged row at line 2"), std::string::npos) << e.what();
    }
}

TEST(TextMatrix, UnparsableToken) {
    try {
        parse_text_matrix("1,x", ',');
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("row 1 column 2"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_text_matrix("1,nan", ','), DataError);
    EXPECT_THROW(parse_text_matrix("", ','), DataError);
}

TEST(TextMatrix, LoadFromFile) {
    TempDir dir;
    write_file_atomic(dir / "m.csv", "0.5,1.5\n-2,3e2\n");
    EXPECT_EQ(load_text_matrix(dir / "m.csv", ','), make_matrix({{0.5f, 1.5f}, {-2, 300}}));
}

TEST(FeatureStore, DigestTracksContent) {
    FeaturePack a = full_pack();
    FeaturePack b = full_pack();
    EXPECT_EQ(pack_digest(a), pack_digest(b));
    b.layers[1].features(0, 0) += 1.0f;
    EXPECT_NE(pack_digest(a), pack_digest(b));
    EXPECT_EQ(pack_digest(a).size(), 16u);
}
